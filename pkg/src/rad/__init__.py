"""Robust subspace anomaly detection for multivariate cyber-physical sensor data."""

from .data import (
    CorruptionSpec,
    CsvSchema,
    Dataset,
    DetectionMetrics,
    Scaler,
    evaluate,
    inject_corruption,
    load_csv,
    standardize,
)
from .errors import (
    DataError,
    DegenerateMatrixError,
    DimensionError,
    ModelFormatError,
    RadError,
    SolverDivergedError,
)
from .linalg import orthonormal_basis, project, soft_threshold, subspace_angle, svt
from .median import MedianConfig, MedianResult, geometric_median
from .model import (
    RadModel,
    ScoreRecord,
    ThresholdMode,
    Verdict,
    classify,
    classify_rows,
    score,
    score_rows,
    train,
    train_pca_baseline,
)
from .pcp import PcpConfig, PcpResult, default_lambda, pcp_decompose

__version__ = "0.1.0"
