"""Exact posterior probabilities of structural features in Bayesian networks."""

from .dataset import Dataset, family_counts, load_dataset
from .engine import all_edge_posteriors, feature_posterior, log_evidence
from .errors import (BnExactError, CapExceeded, CompleteDataViolation, ConfigError,
                     InfeasibleFeatureUnderBound, InvalidFamily, InvalidFeature,
                     NumericalBreakdown, SchemaError)
from .kernels import BACKEND
from .model import FeatureSpec, assemble_B, edge_feature
from .oracle import count_dags, oracle_posterior
from .scoring import bde_log_score, build_score_tables

__version__ = "0.1.0"
