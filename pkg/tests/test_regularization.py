import numpy as np
import pytest

from inertial_ch.dynamics import IntegratorConfig, State, integrate
from inertial_ch.equilibria import enumerate_equilibria
from inertial_ch.model import Nonlinearity, ProblemConfig
from inertial_ch.regularization import (
    EpsScalingReport,
    backward_bound_check,
    eps_comparison,
    linear_decay_rate,
    second_derivative,
    smooth_ball_distance,
    split_trajectory,
)
from inertial_ch.spectral import DomainSpec, SpectralField

D1 = DomainSpec(1)


def slowest_root(eps, c):
    return min(-np.real(np.roots([eps, 1.0, ci])).max() for ci in np.atleast_1d(c))


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_linear_decay_rate_against_polynomial_roots(eps):
    cfg = ProblemConfig.simple(6, eps)
    lam = np.arange(1, 7, dtype=float) ** 2
    c = lam**2 + 0.5 * lam + 2.0 / lam
    assert linear_decay_rate(cfg, 2.0, a1=0.5) == pytest.approx(slowest_root(eps, c), rel=1e-12)
    mask = np.arange(6) >= 3
    assert linear_decay_rate(cfg, 2.0, mask, a1=0.5) == pytest.approx(slowest_root(eps, c[mask]), rel=1e-12)


@pytest.fixture(scope="module")
def linear_run():
    cfg = ProblemConfig.simple(16, 0.1)
    u0 = 1.0 / np.arange(1, 17) ** 1.5
    f = Nonlinearity([0.0, 1.0])
    rec = integrate(State.from_arrays(D1, u0), 4.0, IntegratorConfig("etd", dt=1e-3, record_every=10), cfg, f)
    return cfg, rec


def test_split_linear_rate_and_reconstruction(linear_run):
    cfg, rec = linear_run
    m = 4
    rep = split_trajectory(rec, 2.0, 0.0, m)
    analytic = linear_decay_rate(cfg, 2.0, np.arange(16) >= m, a1=1.0)
    assert rep.decay is not None
    assert rep.decay.rate == pytest.approx(analytic, rel=0.02)
    assert rep.reconstruction_error < 1e-12
    assert np.all(rep.in_ball[len(rep.times) // 2 :])
    d = smooth_ball_distance(rep, 2.0)
    assert d["upper_bound"] >= 0 and d["certified"]
    with pytest.raises(ValueError):
        smooth_ball_distance(rep, 10.0)


def test_split_rejects_bad_parameters(linear_run):
    _, rec = linear_run
    with pytest.raises(ValueError):
        split_trajectory(rec, 0.0, 0.0, 4)
    with pytest.raises(ValueError):
        split_trajectory(rec, 1.0, 0.0, 17)
    with pytest.raises(ValueError):
        split_trajectory(rec, 1.0, 9.0, 4)


def oscillator(eps, t):
    r = np.roots([eps, 1.0, 1.0]).astype(complex)
    k = np.linalg.solve(np.array([[1, 1], r]), [1.0, 0.0])
    return np.real(k[0] * np.exp(r[0] * t) + k[1] * np.exp(r[1] * t))


def test_eps_comparison_single_mode_closed_form():
    cfg = ProblemConfig.simple(2, 1.0)
    u0 = SpectralField.mode(D1, 2, 1)
    eps_list = [0.1, 0.01]
    rep = eps_comparison(u0, eps_list, 1.0, 0.0, cfg, Nonlinearity.zero(), dt=1e-4)
    t = np.linspace(0, 1, 10001)
    for e, got in zip(rep.eps_values, rep.sup_diff_hminus1):
        assert got == pytest.approx(np.max(np.abs(oscillator(e, t) - np.exp(-t))), rel=1e-6)
    assert rep.eps_values == [0.1, 0.01]
    assert rep.slope == pytest.approx(np.log(rep.sup_diff_hminus1[0] / rep.sup_diff_hminus1[1]) / np.log(10))


def test_eps_comparison_validation():
    cfg = ProblemConfig.simple(2, 1.0)
    u0 = SpectralField.mode(D1, 2, 1)
    with pytest.raises(ValueError):
        eps_comparison(u0, [2.0], 1.0, 0.0, cfg, Nonlinearity.zero())
    with pytest.raises(ValueError):
        eps_comparison(u0, [0.1], 1.0, -1.0, cfg, Nonlinearity.zero())
    with pytest.raises(ValueError):
        EpsScalingReport([0.01, 0.1], [1, 1], [1, 1], None, None)


def test_backward_bound_at_equilibrium():
    f = Nonlinearity([0, -2, 0, 1])
    cfg = ProblemConfig.simple(16, 0.5)
    eq = [e for e in enumerate_equilibria(cfg, f, seed_count=2) if e.u_star.coeffs[0] > 0.1][0]
    rec = integrate(eq.state(), 1.0, IntegratorConfig("etd", dt=0.01), cfg, f)
    lam = np.arange(1, 17, dtype=float) ** 2
    expected = np.sum(lam**4 * eq.u_star.coeffs**2)
    bb = backward_bound_check(rec, 0.5, threshold=2 * expected)
    assert bb.sup_level == pytest.approx(expected, rel=1e-8)
    assert bb.passed
    assert np.max(np.abs(second_derivative(rec.u[-1], rec.v[-1], cfg, f))) < 1e-7
    with pytest.raises(ValueError):
        backward_bound_check(rec, 5.0)
