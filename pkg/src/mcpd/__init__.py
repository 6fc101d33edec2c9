"""Online Bayesian change-point detection over latent-class posteriors.

The detector consumes a stream of categorical posteriors p(z_t | x_t),
converts each into a pseudo-observation (a multinomial count vector of S
posterior samples, or the single MAP class), and maintains the exact
run-length posterior under a conjugate Dirichlet model with a constant
change hazard.  Includes a synthetic benchmark harness, evaluation metrics,
and a mixture-model front end for raw heterogeneous observations.
"""

from .dirichlet_multinomial import (
    ALPHA_FLOOR,
    log_predictive_binomial,
    log_predictive_categorical,
    log_predictive_stable,
    log_predictive_stable_batch,
    posterior_update,
)
from .engine import HazardSpec, RunLengthEngine, RunLengthPosterior
from .errors import ContractViolation, DataFormatError, NumericalError
from .metrics import DetectionEvent, EvalReport, detect, evaluate
from .mixture import MixtureModel, ObservationRecord, fit_em, ingest_csv, planted_stream
from .runner import CellResult, run_benchmark, run_cell, run_detection
from .sampler import as_posterior, map_class, sample_counts, seeded_rng
from .synthetic import GroundTruth, SyntheticConfig, flatness_stats, generate

__version__ = "0.1.0"

__all__ = [
    "ALPHA_FLOOR",
    "CellResult",
    "ContractViolation",
    "DataFormatError",
    "DetectionEvent",
    "EvalReport",
    "GroundTruth",
    "HazardSpec",
    "MixtureModel",
    "NumericalError",
    "ObservationRecord",
    "RunLengthEngine",
    "RunLengthPosterior",
    "SyntheticConfig",
    "as_posterior",
    "detect",
    "evaluate",
    "fit_em",
    "flatness_stats",
    "generate",
    "ingest_csv",
    "log_predictive_binomial",
    "log_predictive_categorical",
    "log_predictive_stable",
    "log_predictive_stable_batch",
    "map_class",
    "planted_stream",
    "posterior_update",
    "run_benchmark",
    "run_cell",
    "run_detection",
    "sample_counts",
    "seeded_rng",
]
