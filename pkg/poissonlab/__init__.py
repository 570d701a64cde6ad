"""poissonlab: simulator and analytics for the continuous-time Poisson channel with dark current and noiseless feedback.

You can import the schemes, the channel simulator, closed forms and the harness commands directly from top level.
"""

from .process import Timeline, RateSegment, RandomSource, sample_homogeneous, sample_next_event, poisson_pmf
from .channel import (
    ChannelParams, TrialResult, PolicyViolationError, RunawayIntensityError,
    run_trial, path_energy, verify_intensity_identity,
)
from .schemes import SchemeSpec, Scheme, make_binary, make_binary_dark, make_mary, make_mary_dark, build_scheme
from .analytics import (
    PerfReport, Estimate, closed_form_binary, closed_form_binary_dark, closed_form_mary, converse_energy_bound,
    estimate_bernoulli, estimate_mean,
)
from .harness import cmd_simulate, cmd_sweep, cmd_frontier, cmd_verify
from ._base.settings import ExperimentConfig, FrontierQuery, VerifyConfig, ConfigError, load_config, dump_config
from .__version__ import __version__

version = __version__ # add a public attribute

__all__ = [
    "Timeline", "RateSegment", "RandomSource", "sample_homogeneous", "sample_next_event", "poisson_pmf",
    "ChannelParams", "TrialResult", "PolicyViolationError", "RunawayIntensityError", "run_trial", "path_energy",
    "verify_intensity_identity", "SchemeSpec", "Scheme", "make_binary", "make_binary_dark", "make_mary", "make_mary_dark",
    "build_scheme", "PerfReport", "Estimate", "closed_form_binary", "closed_form_binary_dark", "closed_form_mary",
    "converse_energy_bound", "estimate_bernoulli", "estimate_mean", "cmd_simulate", "cmd_sweep", "cmd_frontier",
    "cmd_verify", "ExperimentConfig", "FrontierQuery", "VerifyConfig", "ConfigError", "load_config", "dump_config",
]
