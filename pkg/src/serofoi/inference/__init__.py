from .likelihood import (
    LikelihoodEstimator,
    SeroDataset,
    Solver,
    Subsample,
    log_likelihood_exact,
    log_likelihood_hat,
    log_p_hat,
    p_reference,
)
