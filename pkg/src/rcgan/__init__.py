"""Selectivity-preserving synthetic tables from a range-count-aware GAN."""

from .data import ColumnSpec, Schema, Table, decode, encode, infer_schema, load_table
from .gan import GanConfig, Generator, TrainConfig, sample, train
from .workload import RangeQuery, Workload, exact_count, generate_workload, qerror, selectivity

__all__ = [
    "ColumnSpec",
    "Schema",
    "Table",
    "decode",
    "encode",
    "infer_schema",
    "load_table",
    "GanConfig",
    "Generator",
    "TrainConfig",
    "sample",
    "train",
    "RangeQuery",
    "Workload",
    "exact_count",
    "generate_workload",
    "qerror",
    "selectivity",
]

__version__ = "0.1.0"
