"""lightids: lightweight intrusion-detection experiments on flow CSVs.

Pipeline pieces: schema/dataset (ingest, encode, scale, balance), featsel
(MI ranking + RFECV), models (six compact classifier families), metrics
(quality + deployment cost), experiment (orchestration), cli.
"""

from .dataset import (
    Dataset,
    Preprocessor,
    RawTable,
    balance,
    deduplicate,
    drop_classes,
    fit_preprocessor,
    load_csv,
    transform,
)
from .errors import DataError
from .featsel import FeatureSubset, MiScores, mutual_information, project, rank_by_mi, rfecv
from .metrics import ConfusionMatrix, CostReport, QualityReport, confusion, profile_cost, quality
from .models import ModelSpec, TrainedModel, deserialize, serialize, train
from .schema import ColumnSchema, load_schema_file, unsw_nb15_schema

__version__ = "0.1.0"

__all__ = [
    "ColumnSchema",
    "ConfusionMatrix",
    "CostReport",
    "DataError",
    "Dataset",
    "FeatureSubset",
    "MiScores",
    "ModelSpec",
    "Preprocessor",
    "QualityReport",
    "RawTable",
    "TrainedModel",
    "balance",
    "confusion",
    "deduplicate",
    "deserialize",
    "drop_classes",
    "fit_preprocessor",
    "load_csv",
    "load_schema_file",
    "mutual_information",
    "profile_cost",
    "project",
    "quality",
    "rank_by_mi",
    "rfecv",
    "serialize",
    "train",
    "transform",
    "unsw_nb15_schema",
    "__version__",
]
