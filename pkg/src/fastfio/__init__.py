"""Fast application of 2-D Fourier integral operators."""

from .evaluator import FioOperator, apply_adjoint, apply_direct, apply_forward, build_operator
from .grid import dft_forward, dft_inverse
from .nufft import make_plan, nufft_type1, nufft_type2
from .phases import AmplitudeSpec, PhaseSpec, builtin
from .separation import SeparationConfig, separate_partition
from .wedges import build_partition, wedge_of

__version__ = "0.1.0"

__all__ = [
    "AmplitudeSpec",
    "FioOperator",
    "PhaseSpec",
    "SeparationConfig",
    "apply_adjoint",
    "apply_direct",
    "apply_forward",
    "build_operator",
    "build_partition",
    "builtin",
    "dft_forward",
    "dft_inverse",
    "make_plan",
    "nufft_type1",
    "nufft_type2",
    "separate_partition",
    "wedge_of",
]
