"""Boarding-house rent price prediction toolkit.

End-to-end pipeline: CSV ingestion and cleansing, categorical encoding
with frozen normalization, a from-scratch dense-network regressor trained
with Adam on mean absolute error, morphism-based architecture search, the
portable .kosm inference bundle, and a small HTTP prediction service.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bundle import ModelBundle, Prediction, export_lite, load_lite, predict
from .dataset import (
    CleanDataset,
    RawRecord,
    SplitSpec,
    StatsReport,
    cleanse,
    describe,
    parse_raw_csv,
    split,
)
from .encoding import FeatureEncoder, Vocabulary, encode_matrix, encode_row, fit_encoder
from .errors import KospredError
from .nas import SearchBudget, SearchSpace, deepen, random_arch, search, widen
from .neuralnet import (
    ArchSpec,
    MLPModel,
    TrainConfig,
    backward,
    evaluate,
    forward,
    init_model,
    mae_loss,
    param_count,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ArchSpec",
    "CleanDataset",
    "FeatureEncoder",
    "KERNEL_BACKEND",
    "KospredError",
    "MLPModel",
    "ModelBundle",
    "Prediction",
    "RawRecord",
    "SearchBudget",
    "SearchSpace",
    "SplitSpec",
    "StatsReport",
    "TrainConfig",
    "Vocabulary",
    "backward",
    "cleanse",
    "deepen",
    "describe",
    "encode_matrix",
    "encode_row",
    "evaluate",
    "export_lite",
    "fit_encoder",
    "forward",
    "init_model",
    "load_lite",
    "mae_loss",
    "param_count",
    "parse_raw_csv",
    "predict",
    "random_arch",
    "search",
    "split",
    "train",
    "widen",
]
