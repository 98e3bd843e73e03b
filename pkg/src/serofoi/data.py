"""Serological survey data: CSV ingestion and synthetic generation.

CSV rows aggregate tests by calendar year and completed years of age::

    year,age,n_tested,n_seropositive

Each row becomes a unit ``year x age`` box.  The likelihood counts
susceptible individuals as successes; ``convention`` says how to read the
seropositive column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import SmoothedBox, box_sample
from .errors import InvariantViolation, ParseError
from .inference.likelihood import SeroDataset, Subsample

HEADER = ("year", "age", "n_tested", "n_seropositive")
CONVENTIONS = ("infected", "susceptible")


def _parse_int(text, name, line):
    try:
        return int(text.strip())
    except ValueError:
        raise ParseError(f"{name} is not an integer: {text!r}", line) from None


def read_records(path):
    """Rows of the CSV as ``(year, age, n_tested, n_seropositive)`` tuples."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("file is empty")
        if tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"expected header {','.join(HEADER)}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", line)
            rec = tuple(_parse_int(v, k, line) for v, k in zip(row, HEADER))
            year, age, n, pos = rec
            if age < 0 or n < 1 or not 0 <= pos <= n:
                raise InvariantViolation(
                    f"line {line}: need age >= 0, n_tested >= 1, 0 <= n_seropositive <= n_tested"
                )
            records.append(rec)
    if not records:
        raise ParseError("no data rows")
    return records


def susceptible_count(n_tested, n_seropositive, convention="infected"):
    if convention == "infected":
        return n_tested - n_seropositive
    if convention == "susceptible":
        return n_seropositive
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def records_to_dataset(records, convention="infected", edge=0.01, boxes=None):
    """Subsamples from CSV records.

    Rows map to unit ``year x age`` cells unless ``boxes`` is given; then each
    row selects the box whose lower time and age bounds equal its year and
    age (used for designs that are not unit cells).
    """
    lookup = None
    if boxes is not None:
        lookup = {(b.t_range[0], b.a_range[0]): b for b in boxes}
    subs = []
    for year, age, n, pos in records:
        if lookup is None:
            box = SmoothedBox.unit_cell(year, age, edge)
        elif (year, age) in lookup:
            box = lookup[(year, age)]
        else:
            raise InvariantViolation(f"no design box starts at year {year}, age {age}")
        subs.append(Subsample(box, n, susceptible_count(n, pos, convention)))
    return SeroDataset(tuple(subs))


def load_serodata(path, convention="infected", edge=0.01, boxes=None):
    """Read a survey CSV into a dataset of unit year x age boxes.

    With ``convention="infected"`` (default) seropositive means previously
    infected, so ``Y = n_tested - n_seropositive``.  With ``"susceptible"``
    the column is taken to count susceptible individuals directly.
    """
    return records_to_dataset(read_records(path), convention, edge, boxes)


def dataset_records(dataset, convention="infected"):
    """Inverse of ``records_to_dataset`` for unit-cell datasets."""
    out = []
    for sub in dataset:
        pos = sub.N - sub.Y if convention == "infected" else sub.Y
        out.append((int(sub.box.t_range[0]), int(sub.box.a_range[0]), sub.N, pos))
    return out


def write_serodata(path, dataset, convention="infected"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(dataset_records(dataset, convention))


@dataclass(frozen=True)
class IndividualLog:
    """Per-individual draws behind a synthetic dataset."""

    box_index: np.ndarray
    t: np.ndarray
    a: np.ndarray
    q: np.ndarray
    susceptible: np.ndarray


def generate_synthetic(boxes, foi, n_per_box, rng):
    """Simulate a survey: draw (t, a) from each box, then susceptibility.

    ``n_per_box`` is an int or one count per box.  Individual ``i`` is
    susceptible with probability ``q(t_i, a_i)``.
    """
    boxes = list(boxes)
    counts = np.broadcast_to(np.asarray(n_per_box, dtype=int), (len(boxes),))
    if np.any(counts < 1):
        raise ValueError("every box needs at least one individual")
    subs, idx, ts, as_, qs, ss = [], [], [], [], [], []
    for j, (box, n) in enumerate(zip(boxes, counts)):
        t, a = box_sample(box, rng, int(n))
        q = np.exp(-foi.hazard(t, a))
        s = rng.random(int(n)) < q
        subs.append(Subsample(box, int(n), int(s.sum())))
        idx.append(np.full(int(n), j))
        ts.append(t)
        as_.append(a)
        qs.append(q)
        ss.append(s)
    log = IndividualLog(*(np.concatenate(x) for x in (idx, ts, as_, qs, ss)))
    return SeroDataset(tuple(subs)), log
