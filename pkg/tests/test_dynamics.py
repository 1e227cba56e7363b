import numpy as np
import pytest

from inertial_ch.dynamics import (
    IntegratorConfig,
    State,
    Trace,
    TraceError,
    integrate,
    integrate_auxiliary,
    integrate_parabolic,
    step_reference,
)
from inertial_ch.equilibria import enumerate_equilibria
from inertial_ch.model import Nonlinearity, ProblemConfig
from inertial_ch.spectral import DomainSpec, SpectralField

D1 = DomainSpec(1)
ZERO = Nonlinearity.zero()


def oscillator(eps, c, a0, b0, t):
    """Solution of eps a'' + a' + c a = 0, a(0) = a0, a'(0) = b0 (closed form via eigenvalues)."""
    r = np.roots([eps, 1.0, c]).astype(complex)
    M = np.array([[1, 1], [r[0], r[1]]])
    k = np.linalg.solve(M, [a0, b0])
    return np.real(k[0] * np.exp(r[0] * t) + k[1] * np.exp(r[1] * t))


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.02])
def test_reference_matches_closed_form_all_modes(eps):
    n = 4
    cfg = ProblemConfig.simple(n, eps)
    u0 = np.array([1.0, -0.5, 0.25, 0.1])
    rec = integrate(State.from_arrays(D1, u0), 3.0, IntegratorConfig("reference", dt=0.05), cfg, ZERO)
    for k in range(n):
        c = float(k + 1) ** 4
        exact = oscillator(eps, c, u0[k], 0.0, rec.times)
        assert np.max(np.abs(rec.u[:, k] - exact)) < 1e-8


def test_etd_exact_for_linear_problems():
    cfg = ProblemConfig.simple(3, 0.5)
    u0 = np.array([1.0, 0.2, -0.1])
    rec = integrate(State.from_arrays(D1, u0), 2.0, IntegratorConfig("etd", dt=0.1), cfg, ZERO)
    for k in range(3):
        exact = oscillator(0.5, float(k + 1) ** 4, u0[k], 0.0, rec.times)
        assert np.max(np.abs(rec.u[:, k] - exact)) < 1e-12


def test_imex_first_order_convergence():
    cfg = ProblemConfig.simple(1, 1.0)
    errs = []
    for dt in (0.02, 0.01):
        rec = integrate(State.from_arrays(D1, [1.0]), 2.0, IntegratorConfig("imex", dt=dt), cfg, ZERO)
        errs.append(abs(rec.u[-1, 0] - oscillator(1.0, 1.0, 1.0, 0.0, 2.0)))
    assert 1.5 < errs[0] / errs[1] < 2.5


@pytest.mark.parametrize("scheme", ["imex", "etd", "reference"])
def test_fixed_point_preserved(scheme):
    f = Nonlinearity([0, -2, 0, 1])
    cfg = ProblemConfig.simple(16, 1.0)
    eq = [e for e in enumerate_equilibria(cfg, f, seed_count=2) if e.u_star.coeffs[0] > 0.1][0]
    rec = integrate(eq.state(), 1.0, IntegratorConfig(scheme, dt=0.05), cfg, f)
    # the fixed-step schemes keep stationary points exactly; the adaptive one to its tolerance
    tol = 1e-8 if scheme == "reference" else 1e-12
    assert np.max(np.abs(rec.u - eq.u_star.coeffs)) < tol
    assert np.max(np.abs(rec.v)) < tol


def test_forced_linear_steady_state():
    g = SpectralField(D1, np.array([2.0, 0.0]))
    cfg = ProblemConfig.simple(2, 1.0, g=g)
    rec = integrate(State.rest(D1, 2), 40.0, IntegratorConfig("reference", dt=1.0), cfg, ZERO)
    assert rec.u[-1, 0] == pytest.approx(2.0, abs=1e-8)  # A^2 u = g with lambda_1 = 1


def test_record_every_and_times():
    cfg = ProblemConfig.simple(2, 1.0)
    rec = integrate(State.from_arrays(D1, [1.0, 0.0]), 1.0, IntegratorConfig("etd", dt=0.01, record_every=10), cfg, ZERO)
    assert len(rec) == 11
    assert rec.times[-1] == pytest.approx(1.0)
    assert rec.window(0.5).size == 6


def test_reference_lands_on_sample_times_and_counts_steps(cubic):
    cfg = ProblemConfig.simple(8, 0.5)
    rec = integrate(State.from_arrays(D1, np.ones(8) / np.arange(1, 9) ** 2), 0.5, IntegratorConfig("reference", dt=0.1), cfg, cubic)
    assert np.allclose(rec.times, np.linspace(0, 0.5, 6), atol=1e-14)
    assert rec.meta["nsteps_internal"] >= 5


def test_step_reference_matches_integrate(cubic):
    cfg = ProblemConfig.simple(4, 1.0)
    s0 = State.from_arrays(D1, [0.5, 0.1, 0.0, 0.0])
    s1 = step_reference(s0, 0.2, cfg, cubic)
    rec = integrate(s0, 0.2, IntegratorConfig("reference", dt=0.2), cfg, cubic)
    assert np.allclose(s1.u.coeffs, rec.u[-1], atol=1e-9)


def test_invalid_inputs():
    cfg = ProblemConfig.simple(2, 1.0)
    with pytest.raises(ValueError):
        IntegratorConfig("rk4", dt=0.1)
    with pytest.raises(ValueError):
        integrate(State.rest(D1, 3), 1.0, IntegratorConfig("etd", dt=0.1), cfg, ZERO)
    with pytest.raises(ValueError):
        integrate(State.rest(D1, 2), -1.0, IntegratorConfig("etd", dt=0.1), cfg, ZERO)


def test_parabolic_linear_decay():
    cfg = ProblemConfig.simple(2, 1.0)
    u0 = SpectralField(D1, np.array([1.0, 1.0]))
    rec = integrate_parabolic(u0, 0.5, cfg, ZERO, dt=0.01)
    assert rec.u[-1, 0] == pytest.approx(np.exp(-0.5), rel=1e-10)
    assert rec.u[-1, 1] == pytest.approx(np.exp(-16 * 0.5), rel=1e-9)


def test_trace_interpolation():
    t = np.linspace(0, 1, 11)
    vals = np.sin(t)[:, None]
    lin = Trace(t, vals)
    herm = Trace(t, vals, np.cos(t)[:, None])
    assert abs(lin(0.55)[0] - np.sin(0.55)) < 1e-3
    assert abs(herm(0.55)[0] - np.sin(0.55)) < 0.1**4 / 384 * 1.01
    assert herm.covers(0.0, 1.0) and not herm.covers(0.0, 1.5)
    with pytest.raises(TraceError):
        herm(1.5)
    with pytest.raises(TraceError):
        Trace(t, vals[:5])


def test_auxiliary_with_zero_source_is_pure_damped():
    # f = 0, g = 0, v(0) = u(0): v and u solve the same equation up to the L A^{-1}(v - u) coupling
    cfg = ProblemConfig.simple(3, 1.0)
    s0 = State.from_arrays(D1, [1.0, 0.5, 0.2])
    integ = IntegratorConfig("reference", dt=0.01)
    rec = integrate(s0, 1.0, integ, cfg, ZERO)
    aux = integrate_auxiliary(Trace.from_record(rec), s0, 2.0, 1.0, cfg, ZERO, integ)
    assert np.max(np.abs(aux.u - rec.u)) < 1e-8


def test_auxiliary_etd_second_order():
    cfg = ProblemConfig.simple(3, 1.0)
    s0 = State.from_arrays(D1, [1.0, 0.5, 0.2])
    errs = []
    for dt in (0.02, 0.01):
        integ = IntegratorConfig("etd", dt=dt)
        rec = integrate(s0, 1.0, integ, cfg, ZERO)
        aux = integrate_auxiliary(Trace.from_record(rec), s0, 2.0, 1.0, cfg, ZERO, integ)
        errs.append(np.max(np.abs(aux.u - rec.u)))
    assert 3.0 < errs[0] / errs[1] < 5.0
