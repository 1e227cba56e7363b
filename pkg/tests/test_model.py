import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from inertial_ch.dynamics import State
from inertial_ch.model import (
    AssumptionViolation,
    Nonlinearity,
    ProblemConfig,
    energy,
    lebesgue_power,
    potential_integral,
    validate_assumptions,
    x0_norm,
)
from inertial_ch.spectral import DomainSpec, SpectralField


def test_nonlinearity_derivatives():
    f = Nonlinearity([0, -1, 0, 1])
    r = np.linspace(-2, 2, 7)
    assert np.allclose(f.f(r), r**3 - r)
    assert np.allclose(f.df(r), 3 * r**2 - 1)
    assert np.allclose(f.d2f(r), 6 * r)
    assert np.allclose(f.d3f(r), 6)
    assert np.allclose(f.F(r), r**4 / 4 - r**2 / 2)
    assert f.degree == 3 and f.p == 0
    assert Nonlinearity.zero().is_zero


def test_cubic_accepted_with_constants():
    rep = validate_assumptions(Nonlinearity([0, -1, 0, 1]), 1.0)
    assert rep.lam == pytest.approx(1.0)
    assert rep.delta > 0
    assert rep.kappa < 1.0


def test_quintic_accepted():
    rep = validate_assumptions(Nonlinearity([0, -3, 0, 0, 0, 1]), 1.0)
    assert rep.p == 2
    assert rep.delta > 0


@pytest.mark.parametrize(
    "coeffs, kind",
    [([0, 0, 1], "f1"), ([1, 0, 0, 1], "f(0)"), ([0, 0, 0, -1], "f1"), ([0, -1.5], "f1")],
)
def test_rejections(coeffs, kind):
    with pytest.raises(AssumptionViolation) as ei:
        validate_assumptions(Nonlinearity(coeffs), 1.0)
    assert ei.value.kind == kind


def test_linear_accepted_above_minus_lambda1():
    validate_assumptions(Nonlinearity([0, -0.5]), 1.0)
    validate_assumptions(Nonlinearity.zero(), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2.0))
def test_one_sided_lipschitz_constant(a1, a3):
    f = Nonlinearity([0, a1, 0, a3])
    rep = validate_assumptions(f, 10.0)
    r = np.linspace(-5, 5, 2001)
    assert np.min(f.df(r)) + rep.lam >= -1e-9


def _synth(c, x):
    k = np.arange(1, len(c) + 1)
    return np.sqrt(2 / np.pi) * np.sin(np.outer(np.atleast_1d(x), k)) @ c


def test_potential_and_lebesgue_against_quad():
    c = np.array([0.9, -0.3, 0.2])
    f = Nonlinearity([0, -1, 0, 1])
    ref = quad(lambda x: f.F(_synth(c, x)[0]), 0, np.pi, epsabs=1e-14)[0]
    assert potential_integral(c, f) == pytest.approx(ref, rel=1e-12)
    ref4 = quad(lambda x: abs(_synth(c, x)[0]) ** 3.5, 0, np.pi, epsabs=1e-13, limit=200)[0]
    assert lebesgue_power(c, 3.5) == pytest.approx(ref4, rel=1e-6)


def test_energy_brute_force():
    d = DomainSpec(1)
    cfg = ProblemConfig(epsilon=0.3, g=SpectralField(d, np.array([0.2, 0.0, 0.1])), domain=d)
    f = Nonlinearity([0, -1, 0, 1])
    u = np.array([0.5, 0.1, -0.2])
    v = np.array([0.3, -0.4, 0.05])
    lam = np.array([1.0, 4.0, 9.0])
    F = quad(lambda x: f.F(_synth(u, x)[0]), 0, np.pi, epsabs=1e-14)[0]
    ref = 0.5 * np.sum(lam * u * u) + 0.5 * 0.3 * np.sum(v * v / lam) + F - np.sum(cfg.g.coeffs * u / lam)
    assert energy(State.from_arrays(d, u, v), cfg, f) == pytest.approx(ref, rel=1e-12)


def test_x0_norm_zero_state_and_positivity():
    d = DomainSpec(1)
    cfg = ProblemConfig.simple(4, 1.0)
    f = Nonlinearity([0, -1, 0, 1])
    assert x0_norm(State.rest(d, 4), cfg, f) == 0.0
    assert x0_norm(State.from_arrays(d, [1, 0, 0, 0]), cfg, f) > 0


def test_problem_config_validation():
    with pytest.raises(ValueError):
        ProblemConfig.simple(4, 0.0)
    cfg = ProblemConfig.simple(4, 0.5)
    assert cfg.with_(epsilon=0.25).epsilon == 0.25
    assert cfg.n == 4
