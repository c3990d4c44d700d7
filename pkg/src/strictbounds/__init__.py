"""Frequentist confidence sets for simulator parameters from gridded observations.

Per-cell Gaussian-process emulators are trained on a perturbed-parameter
ensemble, outlying cells are screened out, a model-discrepancy variance is
estimated by maximum likelihood, and each test parameter vector is kept or
rejected by a chi-square plausibility test. History-matching style order
statistic tests are provided for comparison.
"""

from .confset import ConfidenceSet, invert, project_1d, project_2d
from .data import ObservationSet, ParameterSpace, TrainingSet, sample_test_parameters
from .discrepancy import DiscrepancyEstimate, estimate
from .errors import (
    ConfigMismatch,
    DomainError,
    EstimationError,
    FitError,
    NoOverlap,
    NotPositiveDefinite,
    NumericalError,
    OptError,
    PipelineError,
    PreconditionError,
    RangeViolation,
    SchemaError,
    StageDependencyError,
    UnknownPoint,
)
from .fleet import EmulatorFleet, PredictionTable, predict_fleet, train_fleet
from .gp import CellEmulator, FitConfig, Hyperparameters, fit, predict
from .grid import MatchedGrid, RegularGrid, SpaceTimePoint, match_grids
from .history_matching import HMConfig, hm_critical, hm_test_all
from .outliers import FilterReport, find_outliers
from .plausibility import TestOutcome, critical_value, implausibility, test_all

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
