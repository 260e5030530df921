"""Clustering of marked event streams into latent sources with a
Dirichlet-Hawkes process and sequential Monte Carlo."""

from .events import EventStream, Transaction, ingest_stream, mix_ground_truth, tokenize
from .evaluation import MetricsReport, report
from .generator import GeneratorConfig, generate, make_scenario
from .hawkes import HawkesParams, KernelConfig, KernelWeights, fit_weights_mle
from .smc import ClusteringResult, SmcConfig, fit_sequence

__version__ = "0.1.0"
