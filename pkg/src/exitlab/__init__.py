"""Monte Carlo laboratory for first-exit asymptotics of reaction-diffusion
equations driven by small multiplicative heavy-tailed jump noise."""

__version__ = "0.1.0"

from .coefficient import CoefficientSpec, apply
from .noise import JumpEvent, LargeJumpStream, LevyMeasureSpec, substream
from .solver import ExitProblem, PathState, SolverConfig, run_trial
from .spectral import (Domain, FixedPoint, HilbertVector, NonlinearitySpec,
                       ReactionDiffusion, h_norm, l2_norm)
from .theory import ScaleParams, choose_scales, exit_rate, limit_measure

__all__ = [
    "CoefficientSpec", "apply", "JumpEvent", "LargeJumpStream",
    "LevyMeasureSpec", "substream", "ExitProblem", "PathState", "SolverConfig",
    "run_trial", "Domain", "FixedPoint", "HilbertVector", "NonlinearitySpec",
    "ReactionDiffusion", "h_norm", "l2_norm", "ScaleParams", "choose_scales",
    "exit_rate", "limit_measure", "__version__",
]
