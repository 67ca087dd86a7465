"""Provably optimal small decision trees for categorical data.

Categorical columns become groups of one-hot features; each decision node
tests membership of a sample's category in a chosen subset of one group.
Training builds an integer program over a fixed tree shape and solves it to
optimality, with an exhaustive-search oracle for independent verification.
"""

from .encoding import (
    EncodedDataset,
    GroupSchema,
    RawTable,
    binarize_for_simple_branching,
    build_schema,
    encode,
    parse_table,
)
from .experiments import (
    CrossValidationResult,
    SweepRow,
    TrainTestResult,
    cross_validate_topology,
    protocol_split,
    sensitivity_sweep,
    train_test_run,
)
from .model import BuildConfig, MilpModel, build_model, model_stats
from .mps import export_lp, export_mps, parse_mps
from .oracle import enumerate_optimal, symmetry_reduced_count
from .solver import SolveConfig, SolveResult, extract_tree, solve_lp, solve_milp
from .topology import TreeTopology, parse_shape, preset
from .tree import DecisionTree, Metrics, evaluate

__version__ = "0.1.0"

__all__ = [
    "BuildConfig",
    "CrossValidationResult",
    "DecisionTree",
    "EncodedDataset",
    "GroupSchema",
    "Metrics",
    "MilpModel",
    "RawTable",
    "SolveConfig",
    "SolveResult",
    "SweepRow",
    "TrainTestResult",
    "TreeTopology",
    "binarize_for_simple_branching",
    "build_model",
    "build_schema",
    "cross_validate_topology",
    "encode",
    "enumerate_optimal",
    "evaluate",
    "export_lp",
    "export_mps",
    "extract_tree",
    "model_stats",
    "parse_mps",
    "parse_shape",
    "parse_table",
    "preset",
    "protocol_split",
    "sensitivity_sweep",
    "solve_lp",
    "solve_milp",
    "symmetry_reduced_count",
    "train_test_run",
]
