"""Brute-force Lindblad reference on the truncated joint space.

These tests pin the oracle itself: exact limits where the generator is
triangular, internal consistency between the two propagation routes, and
the physicality of everything it produces.  The closed-form modules are
judged against this oracle elsewhere.
"""

import math

import numpy as np
import pytest

from vibronic import fock, model, oracle

from conftest import TAU, dynamics_params


def _plus_state(N: int, m_bar: float) -> np.ndarray:
    """(|g>+|e>)/sqrt2 electronic state over a thermal mode."""
    psi = np.full((2, 2), 0.5)
    return np.kron(psi, fock.thermal_state(m_bar, N))


def test_liouvillian_preserves_trace():
    L = oracle.build_liouvillian(dynamics_params(0.7), 18)
    assert L.trace_residual() < 1e-13
    assert L.D == 38 and L.dim == 38 * 38


def test_dense_matrix_guard():
    L = oracle.build_liouvillian(dynamics_params(0.5), 70)
    with pytest.raises(MemoryError):
        L.matrix
    # sparse application still works at that size
    rho = _plus_state(70, 0.5)
    out = L.apply(rho)
    assert out.shape == rho.shape
    assert abs(np.trace(out)) < 1e-12


def test_sector_matrices_agree_with_full_generator():
    """A state confined to one electronic sector stays there under L."""
    p = dynamics_params(0.4)
    N = 12
    dim = N + 1
    L = oracle.build_liouvillian(p, N)
    rng = np.random.default_rng(5)
    blk = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))

    # ge sector
    rho = np.zeros((2 * dim, 2 * dim), dtype=complex)
    rho[:dim, dim:] = blk
    full = L.apply(rho)
    sect = L.sector_matrix("ge") @ blk.flatten(order="F")
    assert np.abs(full[:dim, dim:].flatten(order="F") - sect).max() < 1e-12
    assert np.abs(full[dim:, :dim]).max() == 0.0  # eg untouched

    # population pair, stacked gg then ee
    rho2 = np.zeros_like(rho)
    rho2[:dim, :dim] = blk
    rho2[dim:, dim:] = blk.conj().T
    v = np.concatenate(
        [blk.flatten(order="F"), blk.conj().T.flatten(order="F")]
    )
    full2 = L.apply(rho2)
    sect2 = L.sector_matrix("pop") @ v
    got = np.concatenate(
        [full2[:dim, :dim].flatten(order="F"), full2[dim:, dim:].flatten(order="F")]
    )
    assert np.abs(got - sect2).max() < 1e-12


def test_eigenvalues_exact_in_the_triangular_limit():
    """At eta = 0, m_bar = 0 the sector generators are triangular.

    Their truncated eigenvalues are then the closed-form ones with no
    truncation error at all: lambda_nl = -i l nu - (n + |l|/2) gamma plus
    the branch offset.
    """
    p = model.ModelParams(
        omega=0.7, nu=1.3, eta=0.0, Gamma=0.15, gamma=0.31, m_bar=0.0,
        Gamma_star=0.05,
    )
    N = 7
    L = oracle.build_liouvillian(p, N)

    def mode_lams():
        out = []
        for jj in range(N + 1):
            for kk in range(N + 1):
                n, l = min(jj, kk), jj - kk
                out.append(-1j * l * p.nu - (n + 0.5 * abs(l)) * p.gamma)
        return out

    def ordered(vals):
        # sort on rounded keys so roundoff cannot flip degenerate pairs
        v = np.asarray(vals)
        return v[np.lexsort((v.imag.round(9), v.real.round(9)))]

    got = ordered(L.eigenvalues("ge"))
    want = ordered(
        np.array(mode_lams()) + 1j * p.omega - 0.5 * (p.Gamma + p.Gamma_star)
    )
    assert np.abs(got - want).max() < 1e-10

    got_pop = ordered(L.eigenvalues("pop"))
    lams = np.array(mode_lams())
    want_pop = ordered(np.concatenate([lams, lams - p.Gamma]))
    assert np.abs(got_pop - want_pop).max() < 1e-10


def test_steady_state_is_ground_times_thermal():
    p = dynamics_params(0.8)
    N = 30
    ss = oracle.steady_state(oracle.build_liouvillian(p, N))
    th = fock.thermal_state(0.8, N)
    assert np.abs(ss.gg - th).max() < 1e-12
    assert np.abs(ss.ee).max() < 1e-12
    assert np.abs(ss.ge).max() < 1e-12


def test_steady_state_without_decay_is_still_stationary():
    """Gamma = 0 leaves a whole family of fixed points.

    The solver then returns one unit-trace member of the family; whatever
    mixture it lands on must still be annihilated by the generator.
    """
    p = model.ModelParams(omega=0.0, nu=1.0, eta=0.5, Gamma=0.0, gamma=0.2, m_bar=0.3)
    L = oracle.build_liouvillian(p, 10)
    ss = oracle.steady_state(L)
    assert abs(ss.trace() - 1.0) < 1e-10
    assert np.abs(L.apply(ss.full())).max() < 1e-9


def test_propagate_expm_and_ode_agree():
    p = dynamics_params(0.3)
    N = 14
    L = oracle.build_liouvillian(p, N)
    rho0 = _plus_state(N, 0.3)
    times = np.linspace(0.0, 2 * TAU, 9)
    a = oracle.propagate(L, rho0, times, method="expm")
    b = oracle.propagate(L, rho0, times, method="ode")
    worst = max(np.abs(x - y).max() for x, y in zip(a.states, b.states))
    assert worst < 1e-8
    rep = a.validate()
    assert rep["trace"] < 1e-12
    assert rep["hermiticity"] < 1e-10
    assert rep["min_eigenvalue"] > -1e-8


def test_propagate_input_validation():
    p = dynamics_params(0.3)
    L = oracle.build_liouvillian(p, 6)
    rho0 = _plus_state(6, 0.3)
    with pytest.raises(ValueError):
        oracle.propagate(L, rho0, [])
    with pytest.raises(ValueError):
        oracle.propagate(L, rho0, [1.0, 0.5])
    with pytest.raises(ValueError):
        oracle.propagate(L, rho0[:-1, :-1], [0.0, 1.0])
    with pytest.raises(ValueError):
        oracle.propagate(L, rho0, [0.0, 1.0], method="teleport")


def test_propagation_result_partial_traces():
    p = dynamics_params(0.3)
    N = 10
    L = oracle.build_liouvillian(p, N)
    res = oracle.propagate(L, _plus_state(N, 0.3), [0.0, 1.5])
    tls = res.tls_states()
    assert tls.shape == (2, 2, 2)
    assert np.abs(tls[0] - np.full((2, 2), 0.5)).max() < 1e-12
    modes = res.mode_states()
    assert len(modes) == 2 and modes[0].shape == (N + 1, N + 1)
    assert abs(np.trace(modes[1]) - 1.0) < 1e-12


def test_resolvent_solve_inverts_the_shifted_generator():
    p = dynamics_params(0.3)
    N = 8
    D = 2 * (N + 1)
    L = oracle.build_liouvillian(p, N)
    rng = np.random.default_rng(2)
    rhs = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    s = 0.4 + 1.1j
    x = L.resolvent_solve(s, rhs)
    assert x.shape == (D, D)
    back = s * x - L.apply(x)
    assert np.abs(back - rhs).max() < 1e-10


def test_absorption_is_a_lorentzian_without_coupling():
    """eta = 0 decouples the mode: A is exactly the radiative Lorentzian."""
    p = model.ModelParams(
        omega=0.4, nu=1.0, eta=0.0, Gamma=0.2, gamma=0.3, m_bar=0.2, Gamma_star=0.1
    )
    half = 0.5 * (p.Gamma + p.Gamma_star)
    w = np.linspace(-2.0, 3.0, 41)
    got = oracle.correlation_spectrum("absorption", w, p, 10)
    want = half / ((w - p.omega) ** 2 + half**2)
    assert np.abs(got - want).max() < 1e-10


def test_correlation_spectrum_validation():
    p = dynamics_params(0.3)
    with pytest.raises(ValueError, match="kind"):
        oracle.correlation_spectrum("fluorescence", [0.0], p, 8)
    p0 = model.ModelParams(omega=0.0, nu=1.0, eta=0.5, Gamma=0.0, gamma=0.2, m_bar=0.3)
    with pytest.raises(ValueError, match="Gamma"):
        oracle.correlation_spectrum("emission", [0.0], p0, 8)


def test_emission_mirrors_absorption_inside_the_oracle():
    """Gamma E(w) = A(2*omega_tilde - w), checked with oracle data only."""
    p = model.ModelParams(omega=0.0, nu=1.0, eta=1.5, Gamma=0.01, gamma=0.2, m_bar=0.05)
    d = model.derive(p)
    N = 36
    w = np.linspace(-5.0, 5.0, 41)
    em = oracle.correlation_spectrum("emission", w, p, N)
    ab = oracle.correlation_spectrum("absorption", 2 * d.omega_tilde - w, p, N)
    rel = np.abs(p.Gamma * em - ab).max() / np.abs(ab).max()
    assert rel < 1e-6


def test_time_integrated_route_matches_resolvent_route():
    p = dynamics_params(0.2)
    N = 16
    w = np.array([-1.2, 0.0, 0.9])
    a = oracle.correlation_spectrum("absorption", w, p, N)
    b = oracle.spectrum_time_integrated("absorption", w, p, N)
    assert np.abs(a - b).max() < 1e-6
