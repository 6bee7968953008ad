"""Affine connections on Galilei manifolds, computed and checked in a coordinate chart."""

from .checks import CheckResult, Report, sample_points
from .connection import (
    Connection,
    ConnectionData,
    build_connection,
    extract_data,
    special_connection,
)
from .expr import Evaluator, parse_expression
from .frames import GalileiFrame, local_connection_form
from .galilei import GalileiStructure, Observer, covariant_space_metric, flat_structure, rest_observer
from .milne import boost, verify_milne_invariance
from .tensor import TensorField

__all__ = [
    "CheckResult",
    "Report",
    "sample_points",
    "Connection",
    "ConnectionData",
    "build_connection",
    "extract_data",
    "special_connection",
    "Evaluator",
    "parse_expression",
    "GalileiFrame",
    "local_connection_form",
    "GalileiStructure",
    "Observer",
    "covariant_space_metric",
    "flat_structure",
    "rest_observer",
    "boost",
    "verify_milne_invariance",
    "TensorField",
]
