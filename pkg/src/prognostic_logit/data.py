"""Participant-level trial data: ingestion, validation and arm summaries."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (DuplicateSubjectId, EmptyArm, MissingColumn, MissingValue,
                     NonBinaryValue, NonFiniteScore, OutOfRange, TooFewRows)

__all__ = ["TrialDataset", "ArmSummary", "DEFAULT_SCHEMA", "load_dataset", "arm_summary"]

DEFAULT_SCHEMA = {
    "subject_id": "subject_id",
    "treatment": "treatment",
    "outcome": "outcome",
    "prognostic_score": "prognostic_score",
}

_SCORE_TRANSFORMS = ("identity", "logit")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TrialDataset:
    """Treatment indicator, binary outcome and prognostic score per participant.

    Scores live on the linear-predictor scale.  Arrays are read-only, so a
    dataset can be shared freely once built.  Use :meth:`from_arrays` rather
    than the raw constructor; it runs the validation.
    """

    subject_id: tuple
    treatment: np.ndarray
    outcome: np.ndarray
    prognostic_score: np.ndarray

    @property
    def n(self) -> int:
        return len(self.treatment)

    @classmethod
    def from_arrays(cls, treatment, outcome, prognostic_score,
                    subject_id: Sequence[str] | None = None) -> "TrialDataset":
        w = np.asarray(treatment)
        y = np.asarray(outcome)
        m = np.asarray(prognostic_score, dtype=float)
        n = len(w)
        if not (len(y) == n and len(m) == n):
            raise OutOfRange("treatment, outcome and score must have equal length")
        if subject_id is None:
            width = max(4, len(str(n)))
            subject_id = [f"S{i + 1:0{width}d}" for i in range(n)]
        elif len(subject_id) != n:
            raise OutOfRange("subject_id length does not match the data")
        for column, values in (("treatment", w), ("outcome", y)):
            bad = np.flatnonzero((values != 0) & (values != 1))
            if bad.size:
                raise NonBinaryValue(int(bad[0]) + 1, column, values[bad[0]].item())
        bad = np.flatnonzero(~np.isfinite(m))
        if bad.size:
            raise NonFiniteScore(int(bad[0]) + 1, float(m[bad[0]]))
        _check_ids(subject_id)
        _check_arms(w)
        return cls(tuple(str(s) for s in subject_id), _frozen(w, np.int8),
                   _frozen(y, np.int8), _frozen(m, float))

    def take(self, index) -> "TrialDataset":
        """Rows at ``index`` (duplicates allowed; ids are suffixed to stay unique)."""
        index = np.asarray(index)
        ids = [f"{self.subject_id[i]}#{k}" for k, i in enumerate(index)]
        return TrialDataset.from_arrays(self.treatment[index], self.outcome[index],
                                        self.prognostic_score[index], ids)

    def with_scores(self, scores) -> "TrialDataset":
        return TrialDataset.from_arrays(self.treatment, self.outcome, scores, self.subject_id)


def _check_ids(ids):
    seen = set()
    for s in ids:
        if s in seen:
            raise DuplicateSubjectId(s)
        seen.add(s)


def _check_arms(w):
    if len(w) < 4:
        raise TooFewRows(len(w))
    for arm in (0, 1):
        if not np.any(w == arm):
            raise EmptyArm(arm)


def _parse_binary(raw, row, column):
    s = raw.strip()
    if s in ("0", "1"):
        return int(s)
    try:
        v = float(s)
    except ValueError:
        raise NonBinaryValue(row, column, raw) from None
    if v == 0.0 or v == 1.0:
        return int(v)
    raise NonBinaryValue(row, column, raw)


def load_dataset(path, schema: Mapping[str, str] | None = None,
                 score_transform: str = "identity") -> TrialDataset:
    """Read a trial extract from CSV.

    Parameters
    ----------
    path : path-like
        UTF-8 CSV file with a header row.
    schema : mapping, optional
        Maps the logical fields ``subject_id``, ``treatment``, ``outcome`` and
        ``prognostic_score`` to column names in the file.  Missing keys fall
        back to :data:`DEFAULT_SCHEMA`.
    score_transform : {"identity", "logit"}
        ``"logit"`` converts scores given as probabilities in (0, 1) onto the
        linear-predictor scale.

    Rows are kept in file order.  Rows with an empty field are rejected rather
    than imputed.
    """
    if score_transform not in _SCORE_TRANSFORMS:
        raise OutOfRange(f"score_transform must be one of {_SCORE_TRANSFORMS}")
    cols = dict(DEFAULT_SCHEMA)
    cols.update(schema or {})

    with Path(path).open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in DEFAULT_SCHEMA:
            if cols[key] not in header:
                raise MissingColumn(cols[key])
        ids, w, y, m = [], [], [], []
        for row_no, rec in enumerate(reader, start=1):
            for key in DEFAULT_SCHEMA:
                v = rec.get(cols[key])
                if v is None or v.strip() == "":
                    raise MissingValue(row_no, cols[key])
            ids.append(rec[cols["subject_id"]].strip())
            w.append(_parse_binary(rec[cols["treatment"]], row_no, cols["treatment"]))
            y.append(_parse_binary(rec[cols["outcome"]], row_no, cols["outcome"]))
            raw = rec[cols["prognostic_score"]]
            try:
                score = float(raw)
            except ValueError:
                raise NonFiniteScore(row_no, raw) from None
            if score_transform == "logit":
                if not 0.0 < score < 1.0:
                    raise NonFiniteScore(row_no, raw)
                score = math.log(score) - math.log1p(-score)
            if not math.isfinite(score):
                raise NonFiniteScore(row_no, raw)
            m.append(score)
    return TrialDataset.from_arrays(w, y, m, ids)


@dataclass(frozen=True)
class ArmSummary:
    count: int
    events: int
    event_rate: float


def arm_summary(d: TrialDataset) -> tuple[ArmSummary, ArmSummary]:
    """Participant and event counts for (control, active)."""
    out = []
    for arm in (0, 1):
        mask = d.treatment == arm
        count = int(mask.sum())
        events = int(d.outcome[mask].sum())
        out.append(ArmSummary(count, events, events / count))
    return out[0], out[1]
