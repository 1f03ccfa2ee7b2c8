"""Truncated Fock-space operator algebra.

Dense complex matrices on the first N+1 number states stand in for mode
operators.  Everything here is plain construction: ladder operators,
displacement operators, thermal states, the non-unitary similarity shift
e^{s*varsigma*b} X e^{-s*varsigma*b}, associated Laguerre polynomials, and
the Hilbert-Schmidt pairing Tr[X^dag Y].

FockOperator is simply an ndarray of shape (N+1, N+1); no wrapper class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

FockOperator = np.ndarray


@dataclass(frozen=True)
class Cutoff:
    """Fock truncation N (matrices act on the N+1 states |0>..|N>)."""

    N: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"cutoff N must be >= 1, got {self.N}")

    @property
    def dim(self) -> int:
        return self.N + 1

    @classmethod
    def suggest(cls, beta_abs_sq: float, m_bar: float) -> "Cutoff":
        """Heuristic N >= 4|beta|^2 + 10*m_bar + 10.

        Displaced thermal states carry mean occupation |beta|^2 + m_bar and
        factorially decaying tails; the margin keeps edge effects out of the
        trusted block.
        """
        return cls(math.ceil(4.0 * beta_abs_sq + 10.0 * m_bar + 10.0))


def annihilation(N: int) -> FockOperator:
    """Mode annihilation operator b with <n-1|b|n> = sqrt(n)."""
    if N < 1:
        raise ValueError(f"cutoff N must be >= 1, got {N}")
    b = np.zeros((N + 1, N + 1), dtype=complex)
    ns = np.arange(1, N + 1)
    b[ns - 1, ns] = np.sqrt(ns)
    return b


def displacement(alpha: complex, N: int) -> FockOperator:
    """Displacement operator D(alpha) = exp(alpha*b^dag - conj(alpha)*b).

    Entries are the exact infinite-dimensional matrix elements

        <n+d|D|n> = sqrt(n!/(n+d)!) alpha^d e^{-|alpha|^2/2} L_n^d(|alpha|^2)

    (and the conjugate-mirrored form above the diagonal) restricted to the
    cutoff.  Exponentiating the truncated generator instead reflects off the
    boundary and corrupts entries well inside the cutoff, which poisons
    products of displacement matrices.
    """
    dim = N + 1
    a = complex(alpha)
    if a == 0:
        return np.eye(dim, dtype=complex)
    r = abs(a)
    x = r * r
    # unit phasors e^{i*d*arg(alpha)} by repeated multiplication
    up = np.empty(dim, dtype=complex)
    up[0] = 1.0
    for d in range(1, dim):
        up[d] = up[d - 1] * (a / r)
    lg = gammaln(np.arange(dim) + 1.0)
    out = np.empty((dim, dim), dtype=complex)
    for d in range(dim):
        s = np.arange(dim - d)
        amp = np.exp(0.5 * (lg[s] - lg[s + d]) + d * math.log(r) - 0.5 * x)
        vals = amp * eval_genlaguerre(s, d, x)
        out[s + d, s] = vals * up[d]
        if d:
            out[s, s + d] = vals * (-1) ** d * np.conj(up[d])
    return out


def thermal_state(m_bar: float, N: int) -> FockOperator:
    """Thermal mode state, diagonal p_n ~ m_bar^n/(m_bar+1)^(n+1).

    Renormalized to unit trace after truncation, which also makes it the
    exact stationary state of the truncated damped mode.
    """
    if m_bar < 0.0:
        raise ValueError(f"m_bar must be >= 0, got {m_bar!r}")
    q = m_bar / (m_bar + 1.0)
    p = q ** np.arange(N + 1) / (m_bar + 1.0)
    p /= p.sum()
    return np.diag(p).astype(complex)


def _expm_nilpotent(A: np.ndarray) -> np.ndarray:
    """exp(A) for strictly triangular (nilpotent) A as an exact finite sum."""
    n = A.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, n):
        term = term @ A / k
        if not term.any():
            break
        out += term
    return out


def similarity_shift(X: FockOperator, varsigma: complex, direction: int) -> FockOperator:
    """Conjugate X by e^{s*varsigma*b}: maps b^dag -> b^dag + s*varsigma, b -> b.

    Parameters
    ----------
    X : FockOperator
    varsigma : complex
        Shift parameter.
    direction : +1 or -1
        Sign s of the shift applied to b^dag.

    Notes
    -----
    b is nilpotent on the truncated space, so both exponentials are exact
    finite polynomials and the conjugation inverts exactly (up to roundoff).
    """
    if direction not in (+1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction!r}")
    if varsigma == 0:
        return X.copy()
    b = annihilation(X.shape[0] - 1)
    E = _expm_nilpotent(direction * varsigma * b)
    Einv = _expm_nilpotent(-direction * varsigma * b)
    return E @ X @ Einv


def laguerre(n: int, l: int, x):
    """Associated Laguerre polynomial L_n^l(x) by the three-term recurrence.

    x may be a real/complex scalar or ndarray.  Upward recurrence in n is
    numerically stable for the polynomial family.
    """
    if n < 0 or l < 0:
        raise ValueError(f"need n >= 0 and l >= 0, got n={n}, l={l}")
    x = np.asarray(x)
    prev = np.ones_like(x, dtype=complex if np.iscomplexobj(x) else float)
    if n == 0:
        return prev if prev.shape else prev[()]
    cur = 1 + l - x
    for j in range(1, n):
        prev, cur = cur, ((2 * j + l + 1 - x) * cur - (j + l) * prev) / (j + 1)
    return cur if cur.shape else cur[()]


def hs_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr[X^dag Y]."""
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return complex(np.vdot(X, Y))


def edge_mask(N: int, fraction: float = 0.2) -> np.ndarray:
    """Boolean (N+1, N+1) mask, True on the trusted interior block.

    Entries with either Fock index in the top `fraction` of the range are
    masked out; truncation artifacts concentrate there.
    """
    keep = np.arange(N + 1) < math.ceil((N + 1) * (1.0 - fraction))
    return np.outer(keep, keep)
