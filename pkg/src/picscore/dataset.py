"""Labeled comparison scores: CSV ingestion, class partitioning, subject-exclusive splitting."""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

GENUINE = "genuine"
IMPOSTER = "imposter"
LABELS = (GENUINE, IMPOSTER)

CSV_COLUMNS = ("score", "label", "probe_id", "reference_id", "subject_a", "subject_b")


@dataclass(frozen=True)
class ComparisonRecord:
    """One labeled comparison score with optional pair/subject identifiers."""

    score: float
    label: str
    probe_id: str | None = None
    reference_id: str | None = None
    subject_a: str | None = None
    subject_b: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"comparison score must be finite, got {self.score!r}")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if (
            self.label == GENUINE
            and self.subject_a is not None
            and self.subject_b is not None
            and self.subject_a != self.subject_b
        ):
            raise ValueError(
                f"genuine comparison between different subjects "
                f"({self.subject_a!r} vs {self.subject_b!r})"
            )


class LabeledScoreSet:
    """Comparison records plus cached genuine/imposter score arrays.

    The record tuple is the source of truth; the per-class arrays are derived
    once at construction and preserve record order within each class.
    """

    def __init__(self, records: Iterable[ComparisonRecord]):
        self.records: tuple[ComparisonRecord, ...] = tuple(records)
        self.genuine_scores, self.imposter_scores = partition(self.records)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_genuine(self) -> int:
        return int(self.genuine_scores.size)

    @property
    def n_imposter(self) -> int:
        return int(self.imposter_scores.size)


def partition(records: Sequence[ComparisonRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Split records into (genuine, imposter) score arrays by label."""
    genuine = [r.score for r in records if r.label == GENUINE]
    imposter = [r.score for r in records if r.label == IMPOSTER]
    return np.asarray(genuine, dtype=float), np.asarray(imposter, dtype=float)


def _parse_row(row: dict, row_number: int) -> ComparisonRecord:
    raw_score = (row.get("score") or "").strip()
    try:
        score = float(raw_score)
    except ValueError:
        raise ValueError(f"row {row_number}: invalid score {raw_score!r}") from None
    if not math.isfinite(score):
        raise ValueError(f"row {row_number}: non-finite score {raw_score!r}")

    label = (row.get("label") or "").strip().lower()
    if label not in LABELS:
        raise ValueError(f"row {row_number}: unknown label {row.get('label')!r}")

    optional = {}
    for field in CSV_COLUMNS[2:]:
        value = (row.get(field) or "").strip()
        optional[field] = value or None

    try:
        return ComparisonRecord(score=score, label=label, **optional)
    except ValueError as exc:
        raise ValueError(f"row {row_number}: {exc}") from None


def load_scores(path: str | Path, format: str = "csv") -> LabeledScoreSet:
    """Load a labeled score set from a CSV file.

    The file must carry a header with at least ``score`` and ``label``
    columns; ``probe_id``, ``reference_id``, ``subject_a``, ``subject_b``
    are optional. Labels are case-insensitive and canonicalized on load.
    """
    if format != "csv":
        raise ValueError(f"unsupported format {format!r}, only 'csv' is available")
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: no records (empty file)")
        fields = [f.strip().lower() for f in reader.fieldnames]
        if "score" not in fields or "label" not in fields:
            raise ValueError(f"{path}: header must include 'score' and 'label' columns")
        records = []
        for i, row in enumerate(reader, start=1):
            normalized = {k.strip().lower(): v for k, v in row.items() if k is not None}
            records.append(_parse_row(normalized, i))
    if not records:
        raise ValueError(f"{path}: no records")
    return LabeledScoreSet(records)


def save_scores(score_set: LabeledScoreSet, path: str | Path) -> None:
    """Write a score set as CSV with the canonical column layout."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in score_set.records:
            writer.writerow(
                [
                    f"{r.score:.6f}",
                    r.label,
                    r.probe_id or "",
                    r.reference_id or "",
                    r.subject_a or "",
                    r.subject_b or "",
                ]
            )


def split_subject_exclusive(
    records: Sequence[ComparisonRecord],
    train_fraction: float = 0.5,
    seed: int = 0,
) -> tuple[LabeledScoreSet, LabeledScoreSet]:
    """Partition records into train/test with no subject shared across sides.

    Subjects are assigned greedily: sorted by their genuine (within-subject)
    comparison count descending, each subject goes to the side whose
    weighted fill is currently lower, so both sides end up with a similar
    genuine comparison total. Cross-subject comparisons whose two subjects
    land on different sides are dropped; the caller can recover the drop
    count as ``len(records) - len(train) - len(test)``.

    Deterministic for a fixed (records, train_fraction, seed): the seed only
    controls tie ordering among subjects with equal counts.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not records:
        raise ValueError("cannot split an empty record list")

    for i, r in enumerate(records, start=1):
        if not r.subject_a or not r.subject_b:
            raise ValueError(f"record {i}: subject_a and subject_b are required for splitting")

    weight: dict[str, int] = {}
    for r in records:
        weight.setdefault(r.subject_a, 0)
        weight.setdefault(r.subject_b, 0)
        if r.label == GENUINE and r.subject_a == r.subject_b:
            weight[r.subject_a] += 1

    if len(weight) < 2:
        raise ValueError("cannot split: all records belong to a single subject")

    subjects = sorted(weight)
    random.Random(seed).shuffle(subjects)
    subjects.sort(key=lambda s: -weight[s])  # stable: shuffled order breaks ties

    test_fraction = 1.0 - train_fraction
    train_subjects: set[str] = set()
    test_subjects: set[str] = set()
    train_load = 0.0
    test_load = 0.0
    for subj in subjects:
        if train_load / train_fraction <= test_load / test_fraction:
            train_subjects.add(subj)
            train_load += weight[subj]
        else:
            test_subjects.add(subj)
            test_load += weight[subj]

    train_records = []
    test_records = []
    for r in records:
        in_train = (r.subject_a in train_subjects) and (r.subject_b in train_subjects)
        in_test = (r.subject_a in test_subjects) and (r.subject_b in test_subjects)
        if in_train:
            train_records.append(r)
        elif in_test:
            test_records.append(r)
        # else: cross-partition pair, dropped to preserve exclusivity

    if not train_records or not test_records:
        raise ValueError("cannot split: one side would be empty")

    return LabeledScoreSet(train_records), LabeledScoreSet(test_records)
