"""Preprocessing chain: ingest, impute, encode, augment, split, standardize, SMOTE, partition."""

from .dataset import ATTACK, BENIGN, Dataset
from .ingest import (
    ColumnSpec,
    FeatureSchema,
    RawTable,
    freeze_categories,
    load_csv,
    load_schema,
    numeric_schema,
    schema_from_dict,
    write_csv,
)
from .partition import Partition, allocate_benign, linear_ramp, partition_iid, partition_noniid
from .preprocess import ScalerParams, apply_standardize, encode, fit_standardize, impute, split
from .resample import copula_augment, smote
from .synth import synth_evcs_dataset

__all__ = [
    "ATTACK", "BENIGN", "ColumnSpec", "Dataset", "FeatureSchema", "Partition", "RawTable",
    "ScalerParams", "allocate_benign", "apply_standardize", "copula_augment", "encode", "fit_standardize",
    "freeze_categories", "impute", "linear_ramp", "load_csv", "load_schema", "numeric_schema",
    "partition_iid", "partition_noniid", "schema_from_dict", "smote", "split",
    "synth_evcs_dataset", "write_csv",
]
