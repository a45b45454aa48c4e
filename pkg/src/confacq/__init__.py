"""Confounder acquisition for treatment-effect estimation.

Simulates observational data whose confounder is missing not at random,
acquires confounder values in batches (random, uncertainty, covariate
balancing, outcome error) and tracks how quickly effect estimates approach
the fully observed optimum.
"""

__version__ = "0.1.0"

from ._accel import backend
from .acquire import AcquisitionRequest, KernelSpec, mmd, select
from .data_model import CovariateTable, DataPartition, load_covariates, normalize, partition, synthesize_covariates
from .evaluate import AcquisitionTrace, MetricsRecord, eps_ate, pehe, samples_to_within, summarize
from .runner import ExperimentConfig, run_experiment, run_realization
from .simulate import SimulationConfig, build_world

__all__ = [
    "AcquisitionRequest", "AcquisitionTrace", "CovariateTable", "DataPartition", "ExperimentConfig",
    "KernelSpec", "MetricsRecord", "SimulationConfig", "backend", "build_world", "eps_ate",
    "load_covariates", "mmd", "normalize", "partition", "pehe", "run_experiment", "run_realization",
    "samples_to_within", "select", "summarize", "synthesize_covariates",
]
