"""Exact and grid-approximated MCMC for latent position network models."""

__version__ = "0.1.0"

from .graph import DataError, Network, from_edges, load_edge_list, write_edge_list
from .grid import BoxGrid, InternalConsistencyError
from .likelihood import LatentState, exact_log_lik, noisy_log_lik
from .model import HOFF, TWO_PARAM, LinkFunction, ParameterSpace, study_space
from .sampler import ChainSample, SamplerConfig, run
from .synth import SynthSpec, generate

__all__ = [
    "__version__",
    "DataError",
    "Network",
    "from_edges",
    "load_edge_list",
    "write_edge_list",
    "BoxGrid",
    "InternalConsistencyError",
    "LatentState",
    "exact_log_lik",
    "noisy_log_lik",
    "HOFF",
    "TWO_PARAM",
    "LinkFunction",
    "ParameterSpace",
    "study_space",
    "ChainSample",
    "SamplerConfig",
    "run",
    "SynthSpec",
    "generate",
]
