"""Acoustic scene classification from auditory summary statistics, LDA and an RBF SVM."""

from asslda.config import Config
from asslda.stats import AssVector, FeatureLayout, compute_ass_vector

__version__ = "0.1.0"

__all__ = ["AssVector", "Config", "FeatureLayout", "compute_ass_vector"]
