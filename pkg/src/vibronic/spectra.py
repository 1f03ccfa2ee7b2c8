"""Closed-form absorption and emission spectra from the eigenelement overlaps.

The stationary absorption spectrum is a superposition of complex-weighted
Lorentzian resolvents, one per oscillator eigenlabel (n, l):

    A(w_L) = Re sum_nl W_nl / (i w_L - lam_nl)

with lam_nl the coherence-branch eigenvalue that peaks at the shifted line
w_tilde - l nu.  The emission spectrum after an excited-state preparation
carries the conjugate-mirrored weights W'_nl = conj(W_{n,-l}) and a 1/Gamma
prefactor from the integrated decay transient; as closed forms the two are
exact mirror images about w_tilde.

Frequency grids here are absolute probe frequencies in the same units as
the model parameters; reporting as detunings from the bare line is left to
the caller (the CLI does that).  The (n, l) sum is truncated in shells of
n + |l|, stopping once a shell's total |W| drops below a tail threshold;
the factorial decay of the weights guarantees termination.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import iv

from .basis import joint_eigenvalue, weight_W, weight_W_prime
from .model import DerivedParams

__all__ = [
    "SpectrumSeries",
    "absorption",
    "emission",
    "spectrum_components",
    "sideband_intensity",
    "sideband_weight_sum",
]


@dataclass
class SpectrumSeries:
    """Spectrum sampled on a frequency grid, optionally split per (n, l).

    ``grid`` holds absolute probe frequencies; ``meta['axis']`` records
    that convention.  When components are emitted their sum reproduces
    ``total`` exactly.  ``meta['weights']`` keeps the complex weight table
    and ``meta['sum_rule']`` the value a normalization should divide by.
    """

    kind: str
    grid: np.ndarray
    total: np.ndarray
    components: Optional[Dict[Tuple[int, int], np.ndarray]] = None
    meta: Dict[str, object] = field(default_factory=dict)

    def normalized(self) -> "SpectrumSeries":
        """Divide by the sum-rule value (integral over pi)."""
        scale = float(self.meta.get("sum_rule", 1.0))
        if scale == 0.0:
            raise ZeroDivisionError("sum rule vanished; cannot normalize")
        comps = None
        if self.components is not None:
            comps = {k: v / scale for k, v in self.components.items()}
        meta = dict(self.meta)
        meta["normalized"] = True
        return SpectrumSeries(self.kind, self.grid, self.total / scale, comps, meta)


def _shell_labels(s: int) -> Iterable[Tuple[int, int]]:
    """All (n, l) with n + |l| = s."""
    for n in range(s + 1):
        r = s - n
        if r == 0:
            yield (n, 0)
        else:
            yield (n, -r)
            yield (n, r)


def _collect_weights(
    d: DerivedParams, tail: float, max_shell: int, kind: str
) -> Dict[Tuple[int, int], complex]:
    """Weights surviving the shell truncation, in shell order."""
    pick = weight_W if kind == "absorption" else weight_W_prime
    out: Dict[Tuple[int, int], complex] = {}
    for s in range(max_shell + 1):
        shell = {(n, l): pick(n, l, d) for (n, l) in _shell_labels(s)}
        total = sum(abs(w) for w in shell.values())
        if s > 0 and total < tail:
            return out
        out.update(shell)
    raise RuntimeError(
        f"weight tail still {total:.3e} >= {tail:.1e} after {max_shell} shells"
    )


def _resolvent_sum(
    grid: np.ndarray,
    weights: Dict[Tuple[int, int], complex],
    d: DerivedParams,
    scale: float,
    want_components: bool,
) -> Tuple[np.ndarray, Optional[Dict[Tuple[int, int], np.ndarray]]]:
    total = np.zeros_like(grid)
    comps: Optional[Dict[Tuple[int, int], np.ndarray]] = {} if want_components else None
    for (n, l), w in weights.items():
        lam = joint_eigenvalue("coh-", n, l, d)
        curve = scale * np.real(w / (1j * grid - lam))
        total += curve
        if comps is not None:
            comps[(n, l)] = curve
    return total, comps


def absorption(
    grid: Sequence[float],
    d: DerivedParams,
    tail: float = 1e-12,
    max_shell: int = 200,
    components: bool = False,
) -> SpectrumSeries:
    """Stationary absorption spectrum A(w_L) on absolute frequencies.

    Peaks sit at w_tilde + |l| nu for the thermally occupied sidebands,
    each with half width at half maximum (n + |l|/2) gamma + Gamma_tilde/2.
    """
    if d.Gamma_tilde <= 0:
        raise ValueError("absorption needs Gamma_tilde > 0 (no poles on the real axis)")
    grid = np.asarray(grid, dtype=float)
    weights = _collect_weights(d, tail, max_shell, "absorption")
    total, comps = _resolvent_sum(grid, weights, d, 1.0, components)
    meta = {
        "axis": "absolute",
        "omega": d.omega,
        "weights": weights,
        "sum_rule": float(sum(w.real for w in weights.values())),
    }
    return SpectrumSeries("absorption", grid, total, comps, meta)


def emission(
    grid: Sequence[float],
    d: DerivedParams,
    tail: float = 1e-12,
    max_shell: int = 200,
    components: bool = False,
) -> SpectrumSeries:
    """Emission spectrum E(w_p) of an initially excited emitter.

    Uses the mirrored weight table W'_nl = conj(W_{n,-l}) and the 1/Gamma
    prefactor of the integrated decay; identical in shape to the
    absorption spectrum reflected about w_tilde.
    """
    if d.Gamma_tilde <= 0:
        raise ValueError("emission needs Gamma_tilde > 0")
    if d.Gamma <= 0:
        raise ValueError("emission needs Gamma > 0")
    grid = np.asarray(grid, dtype=float)
    weights = _collect_weights(d, tail, max_shell, "emission")
    total, comps = _resolvent_sum(grid, weights, d, 1.0 / d.Gamma, components)
    meta = {
        "axis": "absolute",
        "omega": d.omega,
        "weights": weights,
        "sum_rule": float(sum(w.real for w in weights.values())) / d.Gamma,
    }
    return SpectrumSeries("emission", grid, total, comps, meta)


def spectrum_components(
    grid: Sequence[float],
    d: DerivedParams,
    which: Sequence[Tuple[int, int]],
    kind: str = "absorption",
) -> SpectrumSeries:
    """Individual resolvent curves for chosen (n, l) labels.

    The returned total is the sum of exactly the requested components; the
    single contributions can be negative or Fano-asymmetric when their
    weight is complex.
    """
    grid = np.asarray(grid, dtype=float)
    if kind == "absorption":
        pick, scale = weight_W, 1.0
    elif kind == "emission":
        pick, scale = weight_W_prime, 1.0 / d.Gamma
    else:
        raise ValueError(f"kind must be 'absorption' or 'emission', got {kind!r}")
    weights = {(n, l): pick(n, l, d) for (n, l) in which}
    total, comps = _resolvent_sum(grid, weights, d, scale, True)
    meta = {"axis": "absolute", "omega": d.omega, "weights": weights}
    return SpectrumSeries(kind, grid, total, comps, meta)


def sideband_intensity(l: int, d: DerivedParams, warn_sign: bool = True) -> float:
    """Relative weight of the l-th vibronic sideband (resolved-line regime).

    With x = (1/2) ln(1 + 1/m), the weight of the line at w_tilde - l nu is

        I_l = exp(-Re beta^2 coth x) I_|l|(|beta|^2 / sinh x) e^{-l x} cos th_l

    with th_l = Im beta^2 + arg beta^{2l}.  The l indexing matches the
    weight table: l <= 0 labels the anti-Stokes-side absorption peaks and
    reduces to the Poissonian e^{-S} S^{|l|} / |l|! as m -> 0.  The value
    is signed; cos th_l < 0 flags an unresolved/interfering regime.
    """
    m = d.m_bar
    if m <= 0:
        raise ValueError(
            "sideband_intensity needs m_bar > 0; at T = 0 the weights are "
            "Poissonian (see weight_W / sideband_weight_sum)"
        )
    x = 0.5 * math.log1p(1.0 / m)
    beta_sq = d.beta * d.beta
    z = d.beta_abs_sq / math.sinh(x)
    u = d.beta / abs(d.beta) if d.beta != 0 else 1.0
    phase = cmath.phase(u ** (2 * l)) if l >= 0 else cmath.phase((u.conjugate()) ** (-2 * l))
    theta = beta_sq.imag + phase
    c = math.cos(theta)
    if warn_sign and c < 0:
        warnings.warn(
            f"cos(theta_{l}) = {c:.3f} < 0: signed sideband weight; "
            "lines are not cleanly resolved at these parameters",
            stacklevel=2,
        )
    coth = 1.0 / math.tanh(x)
    return math.exp(-(beta_sq.real) * coth - l * x) * float(iv(abs(l), z)) * c


def sideband_weight_sum(
    l: int, d: DerivedParams, tail: float = 1e-14, max_n: int = 400
) -> float:
    """Companion diagnostic: integrated weight sum_n Re W_nl at fixed l.

    Equals the area (over pi) under the l-th family of absorption
    components; approaches sideband_intensity(l, d) when the sidebands are
    spectrally resolved (gamma, Gamma << nu).
    """
    total = 0.0
    small = 0
    for n in range(max_n + 1):
        w = weight_W(n, l, d)
        total += w.real
        small = small + 1 if abs(w) < tail else 0
        if small >= 3 and n >= 2:
            return total
    raise RuntimeError(f"weight column l={l} did not fall below {tail:.1e} by n={max_n}")
