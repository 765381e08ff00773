"""CSV ingestion, corruption injection, standardization and detection metrics."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

MAX_REJECTED_FRACTION = 0.10
MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class CsvSchema:
    """Which columns of a CSV file mean what.

    ``feature_columns=None`` takes every column except the timestamp and
    label columns. Label tokens are compared case-insensitively after
    stripping whitespace.
    """

    feature_columns: Sequence[str] | None = None
    timestamp_column: str | None = None
    label_column: str | None = None
    normal_token: str = "Normal"
    attack_token: str = "Attack"
    delimiter: str = ","


@dataclass(frozen=True)
class RejectedRow:
    row_index: int  # 0-based position among data rows
    line_number: int  # 1-based line in the file, header is line 1
    reason: str


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus optional timestamps and labels.

    ``labels`` is a boolean array, ``True`` marking ATTACK rows. Labels are
    only ever used for evaluation.
    """

    matrix: np.ndarray
    column_names: tuple[str, ...]
    timestamps: tuple[str, ...] | None = None
    labels: np.ndarray | None = None
    rejected: tuple[RejectedRow, ...] = ()
    # 0-based data-row index in the source file of each kept row
    source_rows: np.ndarray | None = None

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=np.float64)
        if M.ndim != 2:
            raise DataError(f"matrix must be 2-D, got shape {M.shape}")
        names = tuple(self.column_names)
        if len(names) != M.shape[1]:
            raise DataError(f"{len(names)} column names for {M.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=bool)
            if labels.shape != (M.shape[0],):
                raise DataError(f"{labels.shape[0]} labels for {M.shape[0]} rows")
            object.__setattr__(self, "labels", labels)
        if self.timestamps is not None and len(self.timestamps) != M.shape[0]:
            raise DataError(f"{len(self.timestamps)} timestamps for {M.shape[0]} rows")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


def load_csv(path, schema: CsvSchema | None = None) -> Dataset:
    """Read a CSV file with a header row.

    Rows with a non-numeric or non-finite feature, an unknown label or the
    wrong field count are skipped and listed in ``Dataset.rejected``.

    Raises:
        DataError: missing columns, no data rows, or more than 10% of rows
            rejected ("corrupt input file").
    """
    schema = schema or CsvSchema()
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        features, f_idx, t_idx, l_idx = _resolve_columns(header, schema, path)

        normal = schema.normal_token.strip().lower()
        attack = schema.attack_token.strip().lower()
        rows: list[list[float]] = []
        kept: list[int] = []
        stamps: list[str] = []
        labels: list[bool] = []
        rejected: list[RejectedRow] = []
        n_seen = 0
        for fields in reader:
            if not fields or (len(fields) == 1 and not fields[0].strip()):
                continue
            i = n_seen
            n_seen += 1
            line = reader.line_num
            if len(fields) != len(header):
                rejected.append(RejectedRow(i, line, f"expected {len(header)} fields, got {len(fields)}"))
                continue
            try:
                values = [_parse_float(fields[j], header[j]) for j in f_idx]
            except ValueError as exc:
                rejected.append(RejectedRow(i, line, str(exc)))
                continue
            if l_idx is not None:
                token = fields[l_idx].strip().lower()
                if token == attack:
                    labels.append(True)
                elif token == normal:
                    labels.append(False)
                else:
                    rejected.append(RejectedRow(i, line, f"unknown label {fields[l_idx]!r}"))
                    continue
            if t_idx is not None:
                stamps.append(fields[t_idx].strip())
            rows.append(values)
            kept.append(i)

    for rej in rejected:
        logger.warning("%s: rejected row %d (line %d): %s", path, rej.row_index, rej.line_number, rej.reason)
    if n_seen == 0:
        raise DataError(f"{path}: empty file (no data rows)")
    if len(rejected) > MAX_REJECTED_FRACTION * n_seen:
        first = rejected[0]
        raise DataError(
            f"{path}: corrupt input file: {len(rejected)} of {n_seen} rows rejected "
            f"(first: row {first.row_index}, line {first.line_number}: {first.reason})"
        )
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(features))
    return Dataset(
        matrix,
        tuple(features),
        tuple(stamps) if t_idx is not None else None,
        np.array(labels, dtype=bool) if l_idx is not None else None,
        tuple(rejected),
        np.array(kept, dtype=np.int64),
    )


def load_labels(path, schema: CsvSchema) -> np.ndarray:
    """Only the label column of a CSV file, as a boolean ATTACK mask."""
    if schema.label_column is None:
        raise DataError("a label column is required")
    normal = schema.normal_token.strip().lower()
    attack = schema.attack_token.strip().lower()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        header = [h.strip() for h in next(reader, [])]
        if schema.label_column not in header:
            raise DataError(f"{path}: missing column(s): {schema.label_column}")
        j = header.index(schema.label_column)
        labels = []
        for fields in reader:
            if not fields or (len(fields) == 1 and not fields[0].strip()):
                continue
            token = fields[j].strip().lower() if j < len(fields) else ""
            if token not in (normal, attack):
                raise DataError(f"{path}: line {reader.line_num}: unknown label {token!r}")
            labels.append(token == attack)
    return np.array(labels, dtype=bool)


def _resolve_columns(header, schema: CsvSchema, path):
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    position = {name: j for j, name in enumerate(header)}
    wanted = [c for c in (schema.timestamp_column, schema.label_column) if c is not None]
    if schema.feature_columns is not None:
        wanted += list(schema.feature_columns)
    missing = [c for c in wanted if c not in position]
    if missing:
        raise DataError(f"{path}: missing column(s): {', '.join(missing)}")
    if schema.feature_columns is None:
        skip = {schema.timestamp_column, schema.label_column}
        features = [h for h in header if h not in skip]
    else:
        features = list(schema.feature_columns)
    if not features:
        raise DataError(f"{path}: no feature columns")
    f_idx = [position[c] for c in features]
    t_idx = position[schema.timestamp_column] if schema.timestamp_column else None
    l_idx = position[schema.label_column] if schema.label_column else None
    return features, f_idx, t_idx, l_idx


def _parse_float(text: str, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"column {column!r}: not a number: {text.strip()!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"column {column!r}: non-finite value {text.strip()!r}")
    return value


def write_csv(ds: Dataset, path, schema: CsvSchema | None = None) -> None:
    """Write ``ds`` as CSV. Floats use their shortest round-trip repr."""
    schema = schema or CsvSchema()
    t_col = schema.timestamp_column or "timestamp"
    l_col = schema.label_column or "label"
    header = list(ds.column_names)
    if ds.timestamps is not None:
        header.insert(0, t_col)
    if ds.labels is not None:
        header.append(l_col)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(ds.matrix.tolist()):
            out = [repr(v) for v in row]
            if ds.timestamps is not None:
                out.insert(0, ds.timestamps[i])
            if ds.labels is not None:
                out.append(schema.attack_token if ds.labels[i] else schema.normal_token)
            writer.writerow(out)


@dataclass(frozen=True)
class CorruptionSpec:
    """Training-data pollution: dense Gaussian noise plus periodic bursts.

    Each burst column gets ``burst_magnitude * stdev(column)`` added on rows
    ``k*burst_period .. k*burst_period + burst_length - 1``.
    """

    gaussian_sigma: float = 0.0
    burst_columns: tuple[str, ...] = ()
    burst_period: int = 25
    burst_length: int = 1
    burst_magnitude: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError(f"gaussian_sigma must be non-negative, got {self.gaussian_sigma}")
        if self.burst_period < 1 or self.burst_length < 1:
            raise ValueError("burst_period and burst_length must be positive")
        if self.burst_length > self.burst_period:
            raise ValueError("burst_length must not exceed burst_period")
        object.__setattr__(self, "burst_columns", tuple(self.burst_columns))


def burst_rows(n_rows: int, period: int, length: int) -> np.ndarray:
    starts = np.arange(0, n_rows, period)
    rows = (starts[:, None] + np.arange(length)).ravel()
    return rows[rows < n_rows]


def inject_corruption(ds: Dataset, spec: CorruptionSpec) -> Dataset:
    """Return a corrupted copy of ``ds``; labels are left untouched.

    Burst amplitudes use each column's standard deviation before any noise
    is added; a constant column uses 1 instead of 0.
    """
    unknown = [c for c in spec.burst_columns if c not in ds.column_names]
    if unknown:
        raise DataError(f"unknown burst column(s): {', '.join(unknown)}")
    M = ds.matrix.copy()
    if spec.burst_columns:
        stdev = ds.matrix.std(axis=0)
    if spec.gaussian_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        M += rng.normal(0.0, spec.gaussian_sigma, size=M.shape)
    if spec.burst_columns:
        rows = burst_rows(ds.n_rows, spec.burst_period, spec.burst_length)
        for name in spec.burst_columns:
            j = ds.column_names.index(name)
            scale = stdev[j] if stdev[j] > 0 else 1.0
            M[rows, j] += spec.burst_magnitude * scale
    return replace(ds, matrix=M)


@dataclass(frozen=True)
class Scaler:
    center: np.ndarray
    scale: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.center) / self.scale

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> Scaler:
        return cls(np.array(data["center"], dtype=np.float64), np.array(data["scale"], dtype=np.float64))


def fit_scaler(X) -> Scaler:
    """Robust per-column centre (median) and scale (1.4826 * MAD).

    Constant columns get centre 0 and scale 1, so they pass through. A
    column that varies but has zero MAD keeps its median as centre with
    scale 1.
    """
    X = np.asarray(X, dtype=np.float64)
    center = np.median(X, axis=0)
    mad = np.median(np.abs(X - center), axis=0)
    scale = MAD_TO_SIGMA * mad
    constant = np.ptp(X, axis=0) == 0
    center = np.where(constant, 0.0, center)
    scale = np.where(scale > 0, scale, 1.0)
    return Scaler(center, scale)


def standardize(ds: Dataset) -> tuple[Dataset, Scaler]:
    scaler = fit_scaler(ds.matrix)
    return replace(ds, matrix=scaler.transform(ds.matrix)), scaler


@dataclass(frozen=True)
class SegmentResult:
    start: int
    end: int  # exclusive
    delay: int | None  # rows from start to first alarm; None means missed

    @property
    def missed(self) -> bool:
        return self.delay is None


@dataclass(frozen=True)
class DetectionMetrics:
    precision: float
    recall: float
    f1: float
    false_alarm_rate: float
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    segments: tuple[SegmentResult, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "false_alarm_rate": self.false_alarm_rate,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "true_negatives": self.true_negatives,
            "segments": [
                {"start": s.start, "end": s.end, "delay": "MISSED" if s.missed else s.delay}
                for s in self.segments
            ],
        }


def attack_segments(labels) -> list[tuple[int, int]]:
    """Contiguous runs of ATTACK rows as ``(start, end)`` with ``end`` exclusive."""
    y = np.asarray(labels, dtype=np.int8)
    edges = np.diff(np.concatenate(([0], y, [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def evaluate(records, labels, segments=None) -> DetectionMetrics:
    """Row-level precision/recall/F1 plus per-segment detection delay.

    ``records`` is either a sequence of objects with ``row_index`` and
    ``verdict`` attributes, or a boolean array of alarms. ``labels[k]``
    belongs to ``records[k]``; both are put in row order first. Ratios with
    a zero denominator are reported as 0.
    """
    labels = np.asarray(labels, dtype=bool)
    if isinstance(records, np.ndarray) and records.dtype == bool:
        flags = records
        order = np.arange(len(flags))
    else:
        records = list(records)
        flags = np.array([str(getattr(r.verdict, "value", r.verdict)) == "ANOMALY" for r in records], dtype=bool)
        order = np.argsort([r.row_index for r in records], kind="stable")
    if flags.shape != labels.shape:
        raise DataError(f"{flags.shape[0]} records but {labels.shape[0]} labels")
    flags = flags[order]
    labels = labels[order]

    tp = int(np.sum(flags & labels))
    fp = int(np.sum(flags & ~labels))
    fn = int(np.sum(~flags & labels))
    tn = int(np.sum(~flags & ~labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    far = fp / (fp + tn) if fp + tn else 0.0

    if segments is None:
        segments = attack_segments(labels)
    results = []
    for start, end in segments:
        hits = np.flatnonzero(flags[start:end])
        results.append(SegmentResult(start, end, int(hits[0]) if hits.size else None))
    return DetectionMetrics(precision, recall, f1, far, tp, fp, fn, tn, tuple(results))
