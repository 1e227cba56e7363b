import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from inertial_ch.dynamics import State
from inertial_ch.equilibria import (
    CutoffProfile,
    EquilibriumError,
    distance_to_equilibria,
    enumerate_equilibria,
    equilibrium_at_gap,
    equilibrium_family,
    equilibrium_residual,
    glue_quasi_trajectory,
    interpolation_c3,
    select_L,
    solve_equilibrium,
)
from inertial_ch.model import Nonlinearity, ProblemConfig
from inertial_ch.spectral import DomainSpec, SpectralField

D1 = DomainSpec(1)
F2 = Nonlinearity([0, -2, 0, 1])


@pytest.fixture(scope="module")
def catalog():
    cfg = ProblemConfig.simple(32, 1.0)
    return cfg, enumerate_equilibria(cfg, F2, seed_count=4)


def shoot(x):
    def end(s, dense=False):
        sol = solve_ivp(lambda _, y: [y[1], y[0] ** 3 - 2 * y[0]], (0, np.pi), [0, s], method="DOP853",
                        rtol=1e-13, atol=1e-14, t_eval=x if dense else None)
        return sol if dense else sol.y[0, -1]

    return end(brentq(end, 0.1, 3.0, xtol=1e-15), dense=True).y[0]


def test_catalog_is_zero_and_symmetric_pair(catalog):
    cfg, cat = catalog
    assert len(cat) == 3
    assert np.all(cat[0].u_star.coeffs == 0)
    assert np.allclose(cat[1].u_star.coeffs, -cat[2].u_star.coeffs, atol=1e-10)
    assert max(e.residual for e in cat) < 1e-10


def test_positive_branch_matches_shooting(catalog):
    cfg, cat = catalog
    pos = max(cat, key=lambda e: e.u_star.coeffs[0])
    x = np.linspace(0, np.pi, 201)
    k = np.arange(1, 33)
    galerkin = np.sqrt(2 / np.pi) * np.sin(np.outer(x, k)) @ pos.u_star.coeffs
    assert np.max(np.abs(galerkin - shoot(x))) < 1e-9


def test_newton_converges_quadratically():
    cfg = ProblemConfig.simple(16, 1.0)
    eq = solve_equilibrium(SpectralField.mode(D1, 16, 1, 1.2), cfg, F2)
    h = np.asarray(eq.history)
    assert h[-1] < 1e-10
    # once in the basin each residual is bounded by a constant times the previous one squared
    tail = h[(h < 1e-2) & (h > 1e-14)]
    assert len(tail) >= 2 and np.all(tail[1:] <= 10 * tail[:-1] ** 2 + 1e-13)


def test_newton_failure_raises():
    cfg = ProblemConfig.simple(4, 1.0)
    with pytest.raises(EquilibriumError):
        solve_equilibrium(SpectralField.mode(D1, 4, 1, 1e8), cfg, F2, max_iter=2)


def test_linear_catalog_is_zero():
    cfg = ProblemConfig.simple(8, 1.0)
    cat = enumerate_equilibria(cfg, Nonlinearity([0, 1]), seed_count=3)
    assert len(cat) == 1 and np.all(cat[0].u_star.coeffs == 0)


def test_forced_linear_equilibrium():
    g = SpectralField(D1, np.array([1.0, 4.0, 0.0]))
    cfg = ProblemConfig.simple(3, 1.0, g=g)
    eq = solve_equilibrium(SpectralField.zeros(D1, 3), cfg, Nonlinearity.zero())
    lam = np.array([1.0, 4.0, 9.0])
    assert np.allclose(eq.u_star.coeffs, g.coeffs / lam**2)
    assert equilibrium_residual(eq.u_star, cfg, Nonlinearity.zero()) < 1e-14


def test_distance_to_equilibria(catalog):
    cfg, cat = catalog
    assert distance_to_equilibria(cat[1].state(), cat, 0.5, cfg, F2) == 0.0
    s = State(cat[0].u_star, SpectralField.mode(D1, 32, 1, 1.0), 0.0)
    # u = u*, so only eps |A^{-(1+b)/2} u_t|^2 = 1 remains (lambda_1 = 1)
    assert distance_to_equilibria(s, cat[:1], 0.5, cfg, F2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        distance_to_equilibria(s, [], 0.5, cfg, F2)


@pytest.mark.parametrize("kind", ["bump", "smoothstep"])
def test_cutoff_profile_derivatives_by_differences(kind):
    th = CutoffProfile(kind)
    t = np.linspace(0.05, 0.95, 19)
    h = 1e-5
    for order in range(3):
        fd = (th(t + h, order) - th(t - h, order)) / (2 * h)
        assert np.max(np.abs(fd - th(t, order + 1))) < 1e-4 * (1 + np.max(np.abs(fd)))
    assert th(0.0) == 0.0 and th(1.0) == 1.0 and th(-1.0) == 0.0 and th(2.0) == 1.0
    assert np.all(np.diff(th(np.linspace(0, 1, 101))) >= 0)


def test_cutoff_profile_rejects_bad_input():
    with pytest.raises(ValueError):
        CutoffProfile("step")
    with pytest.raises(ValueError):
        CutoffProfile()(0.5, 4)


def test_glue_between_identical_equilibria_vanishes(catalog):
    cfg, cat = catalog
    g = glue_quasi_trajectory(cat[1], cat[1], CutoffProfile(), cfg, F2, samples=51)
    assert g.max_phi < 1e-12 and g.max_phi_t < 1e-12
    assert np.allclose(g.sampler(0.5).coeffs, cat[1].u_star.coeffs)


def test_glue_residual_linear_in_gap(catalog):
    cfg, cat = catalog
    base = cat[2] if cat[2].u_star.coeffs[0] > 0 else cat[1]
    direction = SpectralField.mode(D1, 32, 1)
    phis = []
    for gap in (1e-2, 1e-3):
        eb, _ = equilibrium_at_gap(base, direction, gap, cfg, F2)
        phis.append(glue_quasi_trajectory(base, eb, CutoffProfile(), cfg, F2, samples=101).max_phi)
    assert phis[0] / phis[1] == pytest.approx(10.0, rel=0.05)


def test_equilibrium_family_orders(catalog):
    cfg, cat = catalog
    base = cat[2] if cat[2].u_star.coeffs[0] > 0 else cat[1]
    fam = equilibrium_family(base, SpectralField.mode(D1, 32, 1), [0.2, 0.0, 0.1], cfg, F2)
    assert np.allclose(fam[1].u_star.coeffs, base.u_star.coeffs, atol=1e-9)
    assert fam[0].u_star.coeffs[0] > fam[2].u_star.coeffs[0] > fam[1].u_star.coeffs[0]


def test_select_L_constants():
    c3, theta = interpolation_c3()
    assert c3 == pytest.approx(16 / 27)
    assert theta == pytest.approx(0.75 ** (2 / 3))
    assert select_L(1.0).L == pytest.approx(32 / 27)
    small = select_L(0.1)
    assert small.L == 1.0 and small.floor_applied
    with pytest.raises(ValueError):
        select_L(-1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=30), st.floats(0.01, 10))
def test_interpolation_inequality_holds(w, lam):
    # lam |W|^2 <= 1/2 |A^{1/2} W|^2 + c3 lam^3 |A^{-1} W|^2 on the sine spectrum
    w = np.asarray(w)
    k2 = np.arange(1, w.size + 1, dtype=float) ** 2
    c3, _ = interpolation_c3()
    lhs = lam * np.sum(w**2)
    rhs = 0.5 * np.sum(k2 * w**2) + c3 * lam**3 * np.sum(w**2 / k2**2)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
