"""Closed-form damping-basis solution of a two-level emitter coupled to one
damped vibrational mode, with a brute-force Fock-space oracle for
cross-validation."""

__version__ = "0.1.0"

from .basis import (
    BasisCatalogue,
    BranchLabel,
    JointOperator,
    ResonanceError,
    joint_eigenvalue,
    joint_left,
    joint_right,
    pairing,
    weight_W,
    weight_W_prime,
)
from .dynamics import (
    PhaseSpaceGrid,
    TlsState,
    evolve_expansion,
    expand,
    osc_evolve,
    tls_evolve,
    wigner,
)
from .fock import Cutoff, annihilation, displacement, thermal_state
from .model import DerivedParams, ModelParams, derive, mean_occupation, validate
from .oracle import (
    Superoperator,
    build_liouvillian,
    correlation_spectrum,
    propagate,
    steady_state,
)
from .spectra import SpectrumSeries, absorption, emission, sideband_intensity

__all__ = [
    "ModelParams",
    "DerivedParams",
    "derive",
    "mean_occupation",
    "validate",
    "Cutoff",
    "annihilation",
    "displacement",
    "thermal_state",
    "BranchLabel",
    "JointOperator",
    "BasisCatalogue",
    "ResonanceError",
    "joint_eigenvalue",
    "joint_right",
    "joint_left",
    "pairing",
    "weight_W",
    "weight_W_prime",
    "TlsState",
    "PhaseSpaceGrid",
    "tls_evolve",
    "osc_evolve",
    "expand",
    "evolve_expansion",
    "wigner",
    "Superoperator",
    "build_liouvillian",
    "propagate",
    "steady_state",
    "correlation_spectrum",
    "SpectrumSeries",
    "absorption",
    "emission",
    "sideband_intensity",
    "__version__",
]
