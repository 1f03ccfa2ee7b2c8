"""End-to-end validation gate.

Eleven pinned checks, one test each, cross-validating the closed-form
damping-basis solution against the brute-force Fock-space oracle.  Every
test prints a single ``[PASS] criterion k`` line once its tolerance holds,
so a verbose run doubles as a checklist.  The whole file takes roughly a
minute on one core; the heavyweight items are the biorthogonality table at
N = 80 and the random-parameter trace-overlap sweep.
"""

import cmath
import math
import time

import numpy as np

from conftest import TAU, dynamics_params, sideband_params
from vibronic import basis, dynamics, fock, model, oracle, spectra


def _report(num, text):
    print(f"[PASS] criterion {num}: {text}")


# ---------------------------------------------------------------------------
# 1. closed-form eigenpairs against the oracle generator
# ---------------------------------------------------------------------------


def test_c01_closed_form_eigenpairs_satisfy_the_master_equation():
    t0 = time.monotonic()
    worst = 0.0
    for m_bar in (0.05, 1.0):
        d = model.derive(dynamics_params(m_bar))
        N = 40
        L = oracle.build_liouvillian(dynamics_params(m_bar), N)
        cat = basis.BasisCatalogue(d, N)
        mask = fock.edge_mask(N)
        jmask = np.block([[mask, mask], [mask, mask]])
        for entry in cat.entries(3, 3):
            R = entry.right.full()
            resid = (L.apply(R) - entry.eigenvalue * R) * jmask
            worst = max(worst, np.linalg.norm(resid) / np.linalg.norm(R * jmask))
    elapsed = time.monotonic() - t0
    assert worst < 1e-7
    assert elapsed < 60.0
    _report(1, f"all 4 branches, n<=3, |l|<=3, both temperatures: "
               f"max residual {worst:.2e} in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2. biorthonormality of the full duality table
# ---------------------------------------------------------------------------


def test_c02_left_right_eigenpairs_are_biorthonormal():
    # the m_bar = 1 pairing tails decay slowly with cutoff, so that
    # temperature gets a larger truncation than the cold one
    worst = 0.0
    for m_bar, N in ((0.05, 40), (1.0, 80)):
        d = model.derive(dynamics_params(m_bar))
        ents = list(basis.BasisCatalogue(d, N).entries(3, 3))
        for a in ents:
            for b in ents:
                want = 1.0 if (a.branch, a.n, a.l) == (b.branch, b.n, b.l) else 0.0
                worst = max(worst, abs(basis.pairing(a.left, b.right) - want))
    assert worst < 1e-7
    _report(2, f"(4 branches x n<=3 x |l|<=3)^2 duality table: "
               f"max abs err {worst:.2e}")


# ---------------------------------------------------------------------------
# 3. closed-form trace overlaps against direct Fock-space traces
# ---------------------------------------------------------------------------


def test_c03_trace_overlap_closed_forms_match_fock_space():
    rng = np.random.default_rng(20260814)
    worst = {"A": 0.0, "B": 0.0, "C": 0.0}
    for _ in range(5):
        babs2 = rng.uniform(0.2, 3.0)
        gamma = rng.uniform(0.05, 0.4)
        m_bar = rng.uniform(0.0, 1.0)
        eta = math.sqrt(babs2 * (1.0 + gamma**2 / 4))
        p = model.ModelParams(
            omega=float(rng.uniform(-1, 1)), nu=1.0, eta=float(eta),
            Gamma=float(rng.uniform(0.0, 0.3)), gamma=float(gamma),
            m_bar=float(m_bar),
        )
        d = model.derive(p)
        N = 60
        th = fock.thermal_state(m_bar, N)
        for s, br in ((+1, "coh+"), (-1, "coh-")):
            for n in range(4):
                for l in range(-3, 4):
                    R = basis.joint_right(br, n, l, d, N)
                    Lf = basis.joint_left(br, n, l, d, N)
                    blockR = R.eg if s > 0 else R.ge
                    blockL = Lf.ge if s > 0 else Lf.eg
                    worst["A"] = max(
                        worst["A"],
                        abs(basis.overlap_A(n, l, s, d) - np.trace(blockR)),
                    )
                    worst["B"] = max(
                        worst["B"],
                        abs(basis.overlap_B(n, l, s, d) - np.trace(blockL @ th)),
                    )
        Nw = 100
        D = fock.displacement(d.beta, Nw)
        rights = {
            (m, k): D @ basis.osc_right(m, k, m_bar, Nw) @ D.conj().T
            for m in range(4) for k in range(-3, 4)
        }
        for n in range(4):
            for l in range(-3, 4):
                Lm = basis.osc_left(n, l, m_bar, Nw)
                for (m, k), Rm in rights.items():
                    C_dir = np.einsum("ij,ji->", Lm, Rm)
                    worst["C"] = max(
                        worst["C"], abs(basis.overlap_C(n, l, m, k, d) - C_dir)
                    )
    assert max(worst.values()) < 1e-8
    _report(3, "5 random parameter sets, n,m<=3, |l|,|k|<=3: "
               + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


# ---------------------------------------------------------------------------
# 4. absorption weight sum rule
# ---------------------------------------------------------------------------


def test_c04_absorption_weights_sum_to_one():
    cases = [(1.5, 0.05), (1.5, 0.0), (1.5, 0.25), (1.5, 1.0),
             (0.9, 0.05), (1.2, 0.05)]
    worst = 0.0
    for eta, m_bar in cases:
        d = model.derive(sideband_params(m_bar=m_bar, eta=eta))
        sr = spectra.absorption(np.array([0.0]), d).meta["sum_rule"]
        worst = max(worst, abs(sr - 1.0))
    assert worst < 1e-8
    _report(4, f"sum rule over {len(cases)} parameter sets: max dev {worst:.2e}")


# ---------------------------------------------------------------------------
# 5. reduced dynamics against brute-force propagation
# ---------------------------------------------------------------------------


def test_c05_reduced_dynamics_matches_brute_force_propagation():
    N = 40
    times = np.linspace(0.0, 3 * TAU, 60)
    tls_err = osc_err = 0.0
    s0 = dynamics.TlsState(rho_gg=0.5, rho_ee=0.5, rho_ge=0.5)
    for m_bar in (0.05, 1.0):
        p = dynamics_params(m_bar)
        d = model.derive(p)
        L = oracle.build_liouvillian(p, N)
        rho0 = np.kron(s0.matrix(), fock.thermal_state(m_bar, N))
        res = oracle.propagate(L, rho0, times)
        tls_ref = res.tls_states()
        osc_ref = res.mode_states()
        for i, t in enumerate(times):
            st = dynamics.tls_evolve(s0, float(t), d)
            tls_err = max(tls_err, np.abs(st.matrix() - tls_ref[i]).max())
            mu = dynamics.osc_evolve(s0, float(t), d, N)
            osc_err = max(osc_err, np.abs(mu - osc_ref[i]).max())
    assert tls_err < 1e-6
    assert osc_err < 1e-6

    d = model.derive(dynamics_params(1.0))
    pop = dynamics.tls_evolve(s0, TAU, d).rho_ee
    assert abs(pop - 0.5 * math.exp(-0.2 * math.pi)) < 1e-9
    _report(5, f"60 samples over 3 periods, both temperatures: "
               f"tls {tls_err:.2e}, mode {osc_err:.2e}, "
               f"rho_ee(tau) dev {abs(pop - 0.5 * math.exp(-0.2 * math.pi)):.1e}")


# ---------------------------------------------------------------------------
# 6. analytic absorption against the oracle resolvent
# ---------------------------------------------------------------------------


def test_c06_absorption_matches_oracle_resolvent():
    t0 = time.monotonic()
    p = sideband_params()
    d = model.derive(p)
    grid = np.linspace(-6.0, 6.0, 601) + p.omega
    ana = spectra.absorption(grid, d).total
    orc = oracle.correlation_spectrum("absorption", grid, p, 40)
    rel = np.abs(ana - orc).max() / np.abs(orc).max()
    elapsed = time.monotonic() - t0
    assert rel < 1e-3
    assert elapsed < 300.0
    _report(6, f"601 points over +-6 nu: relative Linf {rel:.2e} "
               f"in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 7. sideband ladder structure of the strong-coupling absorption
# ---------------------------------------------------------------------------


def test_c07_sideband_ladder_structure():
    """Line positions are eigenvalue imaginary parts; overlapping
    Lorentzians shift the argmax of the summed curve, so structure is
    read off the ladder itself and cross-checked against the local
    maxima of the total."""
    d = model.derive(sideband_params())

    # zero-phonon line sits at the dressed transition frequency
    zpl = basis.joint_eigenvalue("coh-", 0, 0, d).imag
    assert abs(zpl - (-2.2277)) <= 0.01

    # at least four phonon satellites, exactly one mode quantum apart
    centers = [basis.joint_eigenvalue("coh-", 0, -ell, d).imag
               for ell in range(5)]
    gaps = np.diff(centers)
    assert len(gaps) >= 4
    assert np.all(np.abs(gaps - 1.0) <= 0.02)

    # the summed curve shows a local maximum near each of the first
    # four ladder rungs (higher rungs merge into shoulders)
    fine = np.linspace(-6.0, 6.0, 24001)
    tot = spectra.absorption(fine + d.omega, d).total
    ismax = (tot[1:-1] > tot[:-2]) & (tot[1:-1] > tot[2:])
    peaks = fine[1:-1][ismax]
    for c in centers[:4]:
        assert np.abs(peaks - c).min() < 0.30

    # quasi-Poissonian height profile: rise to ell ~ S, then fall
    I = [spectra.sideband_intensity(-ell, d, warn_sign=False)
         for ell in range(6)]
    assert I[0] < I[1] < I[2]
    assert I[2] > I[3] > I[4]
    pois = [math.exp(-d.S) * d.S**k / math.factorial(k) for k in range(5)]
    ratio_dev = max(abs(I[k] / pois[k] - 1.0) for k in range(5))
    assert ratio_dev < 0.10

    # cold mode: almost no red-side weight
    red = sum(spectra.sideband_intensity(ell, d, warn_sign=False)
              for ell in range(1, 6))
    blue = sum(spectra.sideband_intensity(-ell, d, warn_sign=False)
               for ell in range(1, 6))
    assert red < 0.05 * blue
    _report(7, f"ZPL at {zpl:.4f}, 4 satellites nu-spaced, heights within "
               f"{100 * ratio_dev:.1f}% of Poisson, red/blue {red / blue:.3f}")


# ---------------------------------------------------------------------------
# 8. emission mirrors absorption
# ---------------------------------------------------------------------------


def test_c08_emission_mirrors_absorption():
    p = sideband_params()
    d = model.derive(p)
    wp = np.linspace(-6.0, 6.0, 601) + p.omega
    em = spectra.emission(wp, d)
    ab = spectra.absorption(2 * d.omega_tilde - wp, d)
    dev = np.abs(d.Gamma * em.total - ab.total).max()
    assert dev < 1e-10
    _report(8, f"Gamma*E(w) vs A(2*omega_tilde - w) on 601 points: "
               f"max abs dev {dev:.2e}")


# ---------------------------------------------------------------------------
# 9. zero-temperature collapse of the weight table
# ---------------------------------------------------------------------------


def test_c09_zero_temperature_weights_collapse_to_poisson():
    d0 = model.derive(sideband_params(m_bar=0.0))
    stray = max(abs(basis.weight_W(n, l, d0))
                for n in range(5) for l in range(-4, 5) if n > 0 or l > 0)
    assert stray < 1e-14

    bc2 = d0.beta.conjugate() ** 2
    werr = max(
        abs(basis.weight_W(0, -ell, d0)
            - cmath.exp(-bc2) * bc2**ell / math.factorial(ell))
        for ell in range(7)
    )
    assert werr < 1e-14

    dt = model.derive(model.ModelParams(
        omega=0.0, nu=1.0, eta=1.5, Gamma=0.01, gamma=1e-12, m_bar=0.0))
    perr = max(
        abs(basis.weight_W(0, -ell, dt)
            - math.exp(-dt.S) * dt.S**ell / math.factorial(ell))
        for ell in range(7)
    )
    assert perr < 1e-10
    _report(9, f"m_bar=0: stray weights {stray:.1e}, displaced-vacuum "
               f"ladder dev {werr:.1e}, gamma->0 Poisson dev {perr:.1e}")


# ---------------------------------------------------------------------------
# 10. oracle hygiene and steady state
# ---------------------------------------------------------------------------


def test_c10_oracle_hygiene_and_steady_state():
    p = dynamics_params(1.0)
    N = 30
    L = oracle.build_liouvillian(p, N)
    th = fock.thermal_state(1.0, N)
    rho0 = np.kron(np.array([[0.5, 0.5], [0.5, 0.5]]), th)
    res = oracle.propagate(L, rho0, np.linspace(0.0, 3 * TAU, 40))
    hyg = res.validate()
    assert hyg["trace"] < 1e-12
    assert hyg["hermiticity"] < 1e-10
    assert hyg["min_eigenvalue"] > -1e-8

    ss = oracle.steady_state(L)
    dev = max(
        np.abs(ss.gg - th).max(), np.abs(ss.ge).max(),
        np.abs(ss.eg).max(), np.abs(ss.ee).max(),
    )
    assert dev < 1e-9
    _report(10, f"trace {hyg['trace']:.1e}, hermiticity "
                f"{hyg['hermiticity']:.1e}, min eig "
                f"{hyg['min_eigenvalue']:.1e}, steady state dev {dev:.1e}")


# ---------------------------------------------------------------------------
# 11. phase-space snapshots: thermal peak and lobe tracking
# ---------------------------------------------------------------------------


def test_c11_wigner_peak_and_lobe_tracking():
    m_bar = 1.0
    mu = fock.thermal_state(m_bar, 40)
    g = dynamics.wigner(mu, extent=6.0, step=0.05)
    peak_dev = abs(g.values.max() - 2.0 / (math.pi * (2 * m_bar + 1)))
    assert peak_dev < 1e-6
    assert abs(g.integral() - 1.0) < 1e-3

    p = dynamics_params(m_bar)
    d = model.derive(p)
    N = 34
    L = oracle.build_liouvillian(p, N)
    rho0 = np.kron(np.array([[0.5, 0.5], [0.5, 0.5]]),
                   fock.thermal_state(m_bar, N))
    snaps = [0.0, TAU / 3, 2 * TAU / 3, TAU]
    res = oracle.propagate(L, rho0, snaps)
    worst = 0.0
    for i, t in enumerate(snaps):
        mode_ee = res.states[i][N + 1:, N + 1:]
        gi = dynamics.wigner(mode_ee / np.trace(mode_ee).real,
                             extent=6.0, step=0.05)
        assert abs(gi.integral() - 1.0) < 1e-3
        idx = np.unravel_index(np.argmax(gi.values), gi.values.shape)
        c = d.beta * (1.0 - np.exp(-(1j * p.nu + p.gamma / 2) * t))
        worst = max(worst, abs(gi.x[idx[1]] - c.real), abs(gi.p[idx[0]] - c.imag))
    assert worst <= 0.05  # one grid cell
    _report(11, f"thermal peak dev {peak_dev:.1e}, excited lobe tracks "
                f"beta - beta(t) within {worst:.3f} (cell 0.05)")
