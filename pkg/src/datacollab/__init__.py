"""Collaborative data analysis without model sharing.

Parties reduce their private data with individual maps and share only the
reduced encodings (of their data and of a common random anchor dataset).
An analyst aligns the encodings into one collaboration representation,
trains a kernel ridge classifier on it, and returns each party its
alignment map and the model. The package also quantifies how close the
collaboration comes to the equivalent centralized analysis (alignment
diagnostics) and how much an attacker holding a stolen map can recover
(recovery-error privacy metrics, down-sampling defense).
"""

from . import analysis, bundle, data, learner, mappings, numerics, privacy, protocol
from .config import ExperimentConfig
from .errors import (
    DegenerateDataError,
    DegenerateSampleError,
    IdxFormatError,
    IntegrationRankError,
)

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "bundle",
    "data",
    "learner",
    "mappings",
    "numerics",
    "privacy",
    "protocol",
    "ExperimentConfig",
    "DegenerateDataError",
    "DegenerateSampleError",
    "IdxFormatError",
    "IntegrationRankError",
    "__version__",
]
