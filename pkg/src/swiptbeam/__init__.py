"""Robust secure SWIPT beamforming: models, conic engine, design search."""

from .builder import VariableLayout, beta_bounds, build_p4, map_solution
from .config import ConfigError, baseline_params, load_params
from .design import DesignOutcome, design, extract_beamformer, rank_report
from .experiments import ExperimentConfig, run_cdf, run_k_sweep, run_rmin_sweep
from .model import ChannelSet, SystemParams, TransmitDesign, generate_channels
from .solver import ConicProblem, ConicSolution, check_certificate, solve
from .worstcase import (
    QuadraticBallExtremum,
    RobustReport,
    extremize_quadratic_over_ball,
    verify_robust_design,
    worst_case_eav_sinr,
)

__all__ = [
    "ChannelSet",
    "ConfigError",
    "ConicProblem",
    "ConicSolution",
    "DesignOutcome",
    "ExperimentConfig",
    "QuadraticBallExtremum",
    "RobustReport",
    "SystemParams",
    "TransmitDesign",
    "VariableLayout",
    "baseline_params",
    "beta_bounds",
    "build_p4",
    "check_certificate",
    "design",
    "extract_beamformer",
    "extremize_quadratic_over_ball",
    "generate_channels",
    "load_params",
    "map_solution",
    "rank_report",
    "run_cdf",
    "run_k_sweep",
    "run_rmin_sweep",
    "solve",
    "verify_robust_design",
    "worst_case_eav_sinr",
]

__version__ = "0.1.0"
