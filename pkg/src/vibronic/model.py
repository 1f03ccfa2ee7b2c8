"""Model parameters and closed-form derived quantities.

A two-level emitter (ground |g>, excited |e>) couples to a single damped
vibrational mode of frequency nu.  The excited state displaces the mode
equilibrium via the linear coupling eta * sigma_e * (b + b^dag); the mode
relaxes at rate gamma toward a thermal occupation m_bar, and the emitter
decays radiatively at rate Gamma (plus optional pure dephasing Gamma_star).

Everything downstream of :func:`derive` is expressed through the complex
displacement ``beta = -eta / (nu - i*gamma/2)`` and a handful of
combinations of it.  Rates and frequencies are in units of the caller's
choice; only ratios matter.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field


def mean_occupation(x: float) -> float:
    """Bose-Einstein occupation 1/(e^x - 1) for the ratio x = hbar*nu/(k_B T).

    Parameters
    ----------
    x : float
        Mode quantum energy over thermal energy.  Must be positive and
        finite; zero or negative temperature ratios are rejected.

    Returns
    -------
    float
        Mean thermal occupation m_bar >= 0.
    """
    if not math.isfinite(x):
        raise ValueError(f"temperature ratio must be finite, got {x!r}")
    if x <= 0.0:
        raise ValueError(f"temperature ratio must be > 0, got {x!r}")
    # expm1 keeps precision for small x (high temperature)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class ModelParams:
    """Bare parameters of the emitter-mode master equation.

    Exactly one of ``m_bar`` (mean bath occupation) or ``temperature_ratio``
    (x = hbar*nu/k_B T, converted via :func:`mean_occupation`) must be given.
    """

    omega: float
    nu: float
    eta: float
    Gamma: float
    gamma: float
    m_bar: float | None = None
    temperature_ratio: InitVar[float | None] = None
    Gamma_star: float = 0.0

    def __post_init__(self, temperature_ratio: float | None) -> None:
        if (self.m_bar is None) == (temperature_ratio is None):
            raise ValueError("specify exactly one of m_bar or temperature_ratio")
        if self.m_bar is None:
            object.__setattr__(self, "m_bar", mean_occupation(temperature_ratio))
        problems = _field_errors(
            omega=self.omega,
            nu=self.nu,
            eta=self.eta,
            Gamma=self.Gamma,
            gamma=self.gamma,
            m_bar=self.m_bar,
            Gamma_star=self.Gamma_star,
        )
        if problems:
            raise ValueError("; ".join(problems))


def _field_errors(**fields: float) -> list[str]:
    """Validation messages shared by ModelParams and validate()."""
    errors = []
    for name, value in fields.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            errors.append(f"{name}: expected a real number, got {value!r}")
        elif not math.isfinite(value):
            errors.append(f"{name}: must be finite, got {value!r}")
    if errors:
        return errors
    if fields["nu"] <= 0.0:
        errors.append(f"nu: mode frequency must be > 0, got {fields['nu']!r}")
    if fields["gamma"] <= 0.0:
        # gamma = 0 leaves the mode undamped; the damping-basis construction
        # needs gamma > 0 (limits are taken analytically where they exist).
        errors.append(f"gamma: mode damping must be > 0, got {fields['gamma']!r}")
    if fields["Gamma"] < 0.0:
        errors.append(f"Gamma: decay rate must be >= 0, got {fields['Gamma']!r}")
    if fields["Gamma_star"] < 0.0:
        errors.append(
            f"Gamma_star: dephasing rate must be >= 0, got {fields['Gamma_star']!r}"
        )
    if fields["m_bar"] < 0.0:
        errors.append(f"m_bar: occupation must be >= 0, got {fields['m_bar']!r}")
    return errors


@dataclass(frozen=True)
class DerivedParams:
    """Derived quantities used by the closed-form solution.

    Attributes
    ----------
    beta : complex
        Complex equilibrium displacement -eta/(nu - i*gamma/2) of the mode
        while the emitter is excited.
    S : float
        Huang-Rhys factor (eta/nu)**2 of the undamped limit.
    omega_R : float
        Bare reorganization shift S*nu.
    omega_tilde : float
        Renormalized transition frequency omega - |beta|^2 * nu.
    Gamma_tilde : float
        Total coherence decay rate
        Gamma + |beta|^2 * gamma * (2*m_bar + 1) + Gamma_star.
    alpha_plus, beta_plus, alpha_minus, beta_minus : complex
        Displacements entering the coherence-sector eigenelements.
    varsigma : complex
        Similarity-shift parameter (conj(beta) - beta)*(2*m_bar + 1);
        purely imaginary.
    m_bar : float
        Mean bath occupation (copied from the input for convenience).
    params : ModelParams
        The bare parameters this table was derived from.
    """

    params: ModelParams = field(repr=False)
    beta: complex
    S: float
    omega_R: float
    omega_tilde: float
    Gamma_tilde: float
    alpha_plus: complex
    beta_plus: complex
    alpha_minus: complex
    beta_minus: complex
    varsigma: complex
    m_bar: float

    @property
    def beta_abs_sq(self) -> float:
        return abs(self.beta) ** 2

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def nu(self) -> float:
        return self.params.nu

    @property
    def eta(self) -> float:
        return self.params.eta

    @property
    def Gamma(self) -> float:
        return self.params.Gamma

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def Gamma_star(self) -> float:
        return self.params.Gamma_star


def derive(p: ModelParams) -> DerivedParams:
    """Compute the derived-parameter table for a set of bare parameters.

    The displacement beta solves (nu - i*gamma/2)*beta = -eta, so that
    (conj(beta) - beta)*(-i*nu + gamma/2) = -gamma*beta holds identically;
    the remaining fields are polynomial in beta and m_bar.
    """
    m = p.m_bar
    beta = -p.eta / (p.nu - 0.5j * p.gamma)
    babs2 = abs(beta) ** 2
    cbeta = beta.conjugate()
    return DerivedParams(
        params=p,
        beta=beta,
        S=(p.eta / p.nu) ** 2,
        omega_R=(p.eta / p.nu) ** 2 * p.nu,
        omega_tilde=p.omega - babs2 * p.nu,
        Gamma_tilde=p.Gamma + babs2 * p.gamma * (2.0 * m + 1.0) + p.Gamma_star,
        alpha_plus=beta * (m + 1.0) - cbeta * m,
        beta_plus=(beta - cbeta) * (m + 1.0),
        alpha_minus=(cbeta - beta) * m,
        beta_minus=cbeta * (m + 1.0) - beta * m,
        varsigma=(cbeta - beta) * (2.0 * m + 1.0),
        m_bar=m,
    )


@dataclass
class Diagnostics:
    """Outcome of :func:`validate`: field errors, regime warnings, flags."""

    ok: bool
    errors: list[str]
    warnings: list[str]
    flags: list[str]

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "flags": list(self.flags),
        }


def validate(
    omega: float = 0.0,
    nu: float = 1.0,
    eta: float = 0.0,
    Gamma: float = 0.0,
    gamma: float = 0.0,
    m_bar: float | None = None,
    temperature_ratio: float | None = None,
    Gamma_star: float = 0.0,
) -> Diagnostics:
    """Report problems and regime flags for raw parameter values.

    Unlike the ModelParams constructor this never raises; it collects
    field-level error messages (for config handling) plus advisory flags
    about the physical regime.
    """
    errors: list[str] = []
    warnings: list[str] = []
    flags: list[str] = []

    if (m_bar is None) == (temperature_ratio is None):
        errors.append("occupation: specify exactly one of m_bar or temperature_ratio")
        m = None
    elif m_bar is None:
        try:
            m = mean_occupation(temperature_ratio)
        except ValueError as exc:
            errors.append(f"temperature_ratio: {exc}")
            m = None
    else:
        m = m_bar
    if m is not None:
        errors.extend(
            _field_errors(
                omega=omega, nu=nu, eta=eta, Gamma=Gamma, gamma=gamma,
                m_bar=m, Gamma_star=Gamma_star,
            )
        )
    if errors:
        return Diagnostics(ok=False, errors=errors, warnings=warnings, flags=flags)

    if gamma < 0.5 * nu:
        flags.append("resolved-sidebands")
    else:
        warnings.append(
            "gamma >= nu/2: mode damping comparable to the mode frequency, "
            "sidebands overlap"
        )
    S = (eta / nu) ** 2
    if S >= 1.0:
        flags.append("strong-coupling")
    if m > 1.0:
        flags.append("high-temperature")
    babs2 = eta * eta / (nu * nu + 0.25 * gamma * gamma)
    Gamma_tilde = Gamma + babs2 * gamma * (2.0 * m + 1.0) + Gamma_star
    if Gamma_tilde >= nu:
        warnings.append(
            "Gamma_tilde >= nu: zero-phonon line broader than the sideband spacing"
        )
    return Diagnostics(ok=True, errors=errors, warnings=warnings, flags=flags)
