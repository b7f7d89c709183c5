"""Trial score files.

Comma-separated text, one record per line::

    # psrcal trials v1
    trial_id,score,label
    t0001,1.25,tar
    t0002,-0.5,non

Lines starting with ``#`` and blank lines are skipped; the header row is
optional on input.  Scores are written with ``repr`` so they round-trip
exactly.  Labels are ``tar``, ``non`` or ``unk`` (unlabeled, for apply).
"""

from dataclasses import dataclass
import math
import os

import numpy as np

from .errors import TrialFileError
from .objective import TrialSet

__all__ = [
    "TrialRecord",
    "TRIALS_FORMAT",
    "HEADER",
    "LABELS",
    "parse_record",
    "read_records",
    "write_records",
    "read_trials",
    "records_to_trialset",
    "format_records",
]

TRIALS_FORMAT = "# psrcal trials v1"
HEADER = ("trial_id", "score", "label")
LABELS = ("tar", "non", "unk")


@dataclass(frozen=True)
class TrialRecord:
    trial_id: str
    score: float
    label: str = "unk"


def parse_record(line, lineno=None, path=None):
    fields = [f.strip() for f in line.strip().split(",")]
    if len(fields) != 3:
        raise TrialFileError(f"expected 3 comma-separated fields, got {len(fields)}", path, lineno)
    trial_id, score_text, label = fields
    if not trial_id:
        raise TrialFileError("empty trial_id", path, lineno)
    try:
        score = float(score_text)
    except ValueError:
        raise TrialFileError(f"score {score_text!r} is not a number", path, lineno) from None
    if math.isnan(score):
        raise TrialFileError("score is NaN", path, lineno)
    label = label.lower()
    if label not in LABELS:
        raise TrialFileError(f"label must be one of {', '.join(LABELS)}, got {label!r}", path, lineno)
    return TrialRecord(trial_id, score, label)


def _parse_lines(lines, path=None):
    records = []
    seen = {}
    header_allowed = True
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if header_allowed and tuple(f.strip() for f in stripped.split(",")) == HEADER:
            header_allowed = False
            continue
        header_allowed = False
        rec = parse_record(stripped, lineno, path)
        if rec.trial_id in seen:
            raise TrialFileError(
                f"duplicate trial_id {rec.trial_id!r} (first seen on line {seen[rec.trial_id]})", path, lineno
            )
        seen[rec.trial_id] = lineno
        records.append(rec)
    return records


def read_records(path):
    with open(path, encoding="utf-8") as fh:
        return _parse_lines(fh, path=os.fspath(path))


def format_records(records):
    out = [TRIALS_FORMAT, ",".join(HEADER)]
    for r in records:
        out.append(f"{r.trial_id},{float(r.score)!r},{r.label}")
    return "\n".join(out) + "\n"


def write_records(path, records):
    seen = set()
    for r in records:
        if r.trial_id in seen:
            raise TrialFileError(f"duplicate trial_id {r.trial_id!r}", os.fspath(path))
        if "," in r.trial_id or not r.trial_id.strip():
            raise TrialFileError(f"invalid trial_id {r.trial_id!r}", os.fspath(path))
        seen.add(r.trial_id)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_records(records))


def records_to_trialset(records, path=None):
    """Split labeled records into a :class:`TrialSet`; ``unk`` labels are an error."""
    tar, non, tar_ids, non_ids = [], [], [], []
    for r in records:
        if r.label == "tar":
            tar.append(r.score)
            tar_ids.append(r.trial_id)
        elif r.label == "non":
            non.append(r.score)
            non_ids.append(r.trial_id)
        else:
            raise TrialFileError(f"trial {r.trial_id!r} is unlabeled; need tar/non labels", path)
    return TrialSet(np.array(tar, dtype=float), np.array(non, dtype=float), tuple(tar_ids), tuple(non_ids))


def read_trials(path):
    return records_to_trialset(read_records(path), os.fspath(path))
