"""Birth-death stochastic block models for temporal networks.

Simulation, variational EM inference of latent communities, closed-form
birth and death rate estimates, ICL model selection and a publication-record
ingestion pipeline.
"""
from .estimator import BDSBM
from .evaluation import AlignedReport, align_labels, report
from .exceptions import (
    BDSBMError,
    EstimationError,
    IngestError,
    InputError,
    SelectionError,
    SolverError,
)
from .initialization import InitOptions, initialize
from .model import (
    EventHistory,
    ModelParams,
    SnapshotSeries,
    TemporalNetwork,
    complete_log_likelihood,
    edge_log_prob,
    upsilon,
)
from .rates import RateEstimate, estimate_rates, integrated_exposure
from .selection import IclTable, icl, select_k
from .simulator import SimConfig, simulate
from .vem import FitOptions, FitResult, elbo, fit, map_labels

__version__ = "0.1.0"

__all__ = [
    "BDSBM", "AlignedReport", "align_labels", "report", "BDSBMError", "EstimationError",
    "IngestError", "InputError", "SelectionError", "SolverError", "InitOptions", "initialize",
    "EventHistory", "ModelParams", "SnapshotSeries", "TemporalNetwork",
    "complete_log_likelihood", "edge_log_prob", "upsilon", "RateEstimate", "estimate_rates",
    "integrated_exposure", "IclTable", "icl", "select_k", "SimConfig", "simulate",
    "FitOptions", "FitResult", "elbo", "fit", "map_labels",
]
