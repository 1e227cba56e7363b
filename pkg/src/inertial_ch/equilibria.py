"""Stationary solutions, their catalog, and the glued quasi-trajectory.

Equilibria solve ``A^2 u + A P_n f(u) = g``. Newton runs on the
``A^{-1}``-preconditioned form ``A u + P_n f(u) = A^{-1} g``, whose Jacobian
``A + P_n f'(u) P_n`` is assembled densely from Gauss-Legendre quadrature
(exact for polynomial ``f``).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import expit

from .dynamics import State
from .model import Nonlinearity, ProblemConfig, _nonlinear_coeffs, lebesgue_power
from .rng import make_rng
from .spectral import SpectralField, eigenvalues, gauss_grid

__all__ = [
    "Equilibrium",
    "EquilibriumError",
    "CutoffProfile",
    "GlueResult",
    "LSelection",
    "equilibrium_residual",
    "jacobian",
    "solve_equilibrium",
    "enumerate_equilibria",
    "distance_to_equilibria",
    "glue_quasi_trajectory",
    "equilibrium_family",
    "equilibrium_at_gap",
    "select_L",
    "interpolation_c3",
]

DEDUP_TOL = 1e-6


class EquilibriumError(RuntimeError):
    """Newton did not converge; carries the last residual."""

    def __init__(self, message: str, residual: float, history: Sequence[float] = ()):
        super().__init__(message)
        self.residual = residual
        self.history = list(history)


@dataclass(frozen=True)
class Equilibrium:
    u_star: SpectralField
    residual: float
    basin_tag: str = ""
    history: tuple = field(default=(), repr=False, compare=False)

    def state(self, t: float = 0.0) -> State:
        return State(self.u_star, SpectralField.zeros(self.u_star.domain, self.u_star.n), t)

    def to_dict(self) -> dict:
        return {
            "coeffs": self.u_star.coeffs.tolist(),
            "residual": self.residual,
            "seed": self.basin_tag,
        }


# ----------------------------------------------------------------------------
# Newton
# ----------------------------------------------------------------------------


def _residual_vec(u: np.ndarray, lam: np.ndarray, g: np.ndarray, f: Nonlinearity) -> np.ndarray:
    return lam * u + _nonlinear_coeffs(u, f) - g / lam


def equilibrium_residual(u: SpectralField, config: ProblemConfig, f: Nonlinearity) -> float:
    """``|A u + P_n f(u) - A^{-1} g|_{L2}``."""
    lam = eigenvalues(config.domain, u.n)
    r = _residual_vec(u.coeffs, lam, config.g.coeffs, f)
    return float(np.sqrt(np.sum(r * r)))


def jacobian(u: np.ndarray, f: Nonlinearity, lam: np.ndarray) -> np.ndarray:
    """Dense ``A + P_n f'(u) P_n`` on raveled coefficients."""
    m = u.size
    J = np.diag(lam.ravel()).astype(float)
    if f.degree <= 0 or f.is_zero:
        return J
    if f.degree == 1:
        return J + f.coeffs[1] * np.eye(m)
    n = u.shape[0]
    grid = gauss_grid(u.ndim, n, (f.degree + 1) * n)
    B = grid.basis_matrix()
    w = grid.weights.ravel() * f.df(grid.values(u)).ravel()
    return J + B.T @ (w[:, None] * B)


def solve_equilibrium(
    guess: SpectralField,
    config: ProblemConfig,
    f: Nonlinearity,
    tol: float = 1e-10,
    max_iter: int = 60,
    tag: str = "",
) -> Equilibrium:
    """Damped Newton for ``A u + P_n f(u) = A^{-1} g``.

    The step is halved until the residual decreases. Raises
    :class:`EquilibriumError` after ``max_iter`` iterations or when no
    decreasing step exists.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if guess.domain != config.domain:
        raise ValueError("guess lives on a different domain")
    n = config.n
    if guess.n != n:
        guess = guess.resized(n)
    lam = eigenvalues(config.domain, n)
    g = config.g.coeffs
    u = guess.coeffs.copy()
    r = _residual_vec(u, lam, g, f)
    res = float(np.sqrt(np.sum(r * r)))
    history = [res]
    for _ in range(max_iter):
        if res <= tol:
            break
        J = jacobian(u, f, lam)
        try:
            du = np.linalg.solve(J, r.ravel()).reshape(u.shape)
        except np.linalg.LinAlgError as exc:
            raise EquilibriumError(f"singular Jacobian: {exc}", res, history) from exc
        step = 1.0
        while True:
            trial = u - step * du
            rt = _residual_vec(trial, lam, g, f)
            rest = float(np.sqrt(np.sum(rt * rt)))
            if rest < res or (rest <= tol):
                break
            step *= 0.5
            if step < 1e-12:
                if res <= 10 * tol:
                    break
                raise EquilibriumError(f"line search failed at residual {res:.3e}", res, history)
        if step < 1e-12:
            break
        u, r, res = trial, rt, rest
        history.append(res)
    if res > tol:
        raise EquilibriumError(f"no convergence in {max_iter} iterations (residual {res:.3e})", res, history)
    return Equilibrium(SpectralField(config.domain, u), res, tag, tuple(history))


def _low_mode_field(domain, n, coeffs_low: np.ndarray) -> SpectralField:
    c = np.zeros((n,) * domain.dim)
    m = coeffs_low.shape[0]
    c[(slice(0, m),) * domain.dim] = coeffs_low
    return SpectralField(domain, c)


def enumerate_equilibria(
    config: ProblemConfig,
    f: Nonlinearity,
    seed_count: int = 8,
    rng_seed: int = 0,
    tol: float = 1e-10,
    amplitude: float = 2.0,
    signed_modes: int = 3,
    low_modes: int = 4,
    workers: int = 1,
) -> list[Equilibrium]:
    """Multi-start Newton; returns the deduplicated catalog.

    Seeds are ``0``, ``+-amplitude e_k`` for the first ``signed_modes``
    modes (per axis in 2-D, diagonal modes), and ``seed_count`` random
    guesses supported on the first ``low_modes`` modes. Converged solutions
    are sorted by ``(residual, first coefficient)`` and merged when their
    ``L2`` distance is at most ``1e-6``.
    """
    if seed_count < 1:
        raise ValueError("seed_count must be >= 1")
    d, n = config.domain, config.n
    seeds: list[tuple[str, SpectralField]] = [("zero", SpectralField.zeros(d, n))]
    for k in range(min(signed_modes, n)):
        idx = (k + 1,) * d.dim
        for sign, lab in ((1.0, "+"), (-1.0, "-")):
            seeds.append((f"{lab}e{k + 1}", SpectralField.mode(d, n, idx, sign * amplitude)))
    rng = make_rng(rng_seed, "enumerate_equilibria")
    m = min(low_modes, n)
    for j in range(seed_count):
        low = rng.standard_normal((m,) * d.dim) * amplitude / np.arange(1, m + 1) ** 0.5
        seeds.append((f"rand{j}", _low_mode_field(d, n, low)))

    def run(item):
        tag, guess = item
        try:
            return solve_equilibrium(guess, config, f, tol=tol, tag=tag)
        except EquilibriumError:
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    found = [r for r in results if r is not None]
    found.sort(key=lambda e: (e.residual, float(e.u_star.coeffs.ravel()[0])))
    catalog: list[Equilibrium] = []
    for e in found:
        if all(np.sqrt(np.sum((e.u_star.coeffs - c.u_star.coeffs) ** 2)) > DEDUP_TOL for c in catalog):
            catalog.append(e)
    catalog.sort(key=lambda e: (float(np.sum(e.u_star.coeffs**2)), float(e.u_star.coeffs.ravel()[0])))
    return catalog


def distance_to_equilibria(
    state: State,
    equilibria: Sequence[Equilibrium | SpectralField],
    beta: float,
    config: ProblemConfig,
    f: Nonlinearity,
) -> float:
    """Distance from ``state`` to the nearest equilibrium in the mixed metric

    ``|A^{(1-b)/2}(u-u*)|^2 + |u-u*|_{L^{p+4-b}}^2 + eps|A^{-(1+b)/2}u_t|^2``.
    """
    if not equilibria:
        raise ValueError("equilibrium set is empty")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    lam = eigenvalues(config.domain, state.n)
    q = f.p + 4 - beta
    v = state.v.coeffs
    kin = config.epsilon * float(np.sum(lam ** (-(1.0 + beta)) * v * v))
    best = np.inf
    for e in equilibria:
        us = e.u_star if isinstance(e, Equilibrium) else e
        du = state.u.coeffs - us.coeffs
        pot = float(np.sum(lam ** (1.0 - beta) * du * du))
        leb = lebesgue_power(du, q) ** (2.0 / q) if np.any(du) else 0.0
        best = min(best, pot + leb + kin)
    return float(np.sqrt(best))


# ----------------------------------------------------------------------------
# cutoff profiles and gluing
# ----------------------------------------------------------------------------

# C^4 smoothstep t^5 (126 - 420 t + 540 t^2 - 315 t^3 + 70 t^4)
_SMOOTHSTEP = np.array([0, 0, 0, 0, 0, 126, -420, 540, -315, 70], dtype=float)


@dataclass(frozen=True)
class CutoffProfile:
    """Monotone transition ``theta`` from 0 (t <= 0) to 1 (t >= 1).

    ``kind='bump'`` is the C-infinity ``s(t)/(s(t) + s(1-t))`` with
    ``s(t) = exp(-1/t)``; ``kind='smoothstep'`` is the degree-9 C^4
    polynomial.
    """

    kind: str = "bump"

    def __post_init__(self):
        if self.kind not in ("bump", "smoothstep"):
            raise ValueError("cutoff kind must be 'bump' or 'smoothstep'")

    def __call__(self, t, order: int = 0):
        if order not in (0, 1, 2, 3):
            raise ValueError("derivative order must be 0..3")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if order == 0:
            out[t >= 1.0] = 1.0
        inside = (t > 0.0) & (t < 1.0)
        if np.any(inside):
            out[inside] = self._inner(t[inside], order)
        return out if out.ndim else float(out)

    def _inner(self, t, order):
        if self.kind == "smoothstep":
            return P.polyval(t, P.polyder(_SMOOTHSTEP, order) if order else _SMOOTHSTEP)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            s = 1.0 / (1.0 - t) - 1.0 / t
            sig = expit(s)
            if order == 0:
                return sig
            q = sig * (1.0 - sig)
            s1 = 1.0 / (1.0 - t) ** 2 + 1.0 / t**2
            if order == 1:
                out = q * s1
            else:
                s2 = 2.0 / (1.0 - t) ** 3 - 2.0 / t**3
                q2 = q * (1.0 - 2.0 * sig)
                if order == 2:
                    out = q2 * s1**2 + q * s2
                else:
                    s3 = 6.0 / (1.0 - t) ** 4 + 6.0 / t**4
                    q3 = q * (1.0 - 6.0 * q)
                    out = q3 * s1**3 + 3.0 * q2 * s1 * s2 + q * s3
        return np.where(q > 0, out, 0.0)


@dataclass
class GlueResult:
    times: np.ndarray
    phi_norms: np.ndarray
    phi_t_norms: np.ndarray
    sampler: Callable[[float], SpectralField] = field(repr=False)

    @property
    def max_phi(self) -> float:
        return float(np.max(self.phi_norms))

    @property
    def max_phi_t(self) -> float:
        return float(np.max(self.phi_t_norms))


def _project_product(values: np.ndarray, grid, shape) -> np.ndarray:
    B = grid.basis_matrix()
    return (B.T @ (grid.weights.ravel() * values.ravel())).reshape(shape)


def glue_quasi_trajectory(
    u_a: Equilibrium | SpectralField,
    u_b: Equilibrium | SpectralField,
    theta: CutoffProfile,
    config: ProblemConfig,
    f: Nonlinearity,
    samples: int = 401,
) -> GlueResult:
    """Path ``theta(t) u_b + (1 - theta(t)) u_a`` on [0, 1] and its equation residual.

    With ``D = u_b - u_a`` the residual is
    ``phi = (eps theta'' + theta') D + A[P f(u~) - theta P f(u_b) - (1-theta) P f(u_a)]``
    (exact when both ends are equilibria) and its time derivative
    ``phi_t = (eps theta''' + theta'') D + A[P(f'(u~) D) - (P f(u_b) - P f(u_a))] theta'``.
    """
    a = u_a.u_star if isinstance(u_a, Equilibrium) else u_a
    b = u_b.u_star if isinstance(u_b, Equilibrium) else u_b
    if a.domain != config.domain or b.domain != config.domain or a.n != b.n:
        raise ValueError("equilibria must share the problem domain and cutoff")
    n = a.n
    lam = eigenvalues(config.domain, n)
    eps = config.epsilon
    D = b.coeffs - a.coeffs
    fa = _nonlinear_coeffs(a.coeffs, f)
    fb = _nonlinear_coeffs(b.coeffs, f)
    deg = max(f.degree, 1)
    grid = gauss_grid(config.domain.dim, n, (deg + 1) * n)
    Dvals = grid.values(D)
    ts = np.linspace(0.0, 1.0, samples)
    th = [theta(ts, k) for k in range(4)]
    phi_n = np.empty(samples)
    phit_n = np.empty(samples)
    for i in range(samples):
        ut = th[0][i] * b.coeffs + (1.0 - th[0][i]) * a.coeffs
        fu = _nonlinear_coeffs(ut, f)
        phi = (eps * th[2][i] + th[1][i]) * D + lam * (fu - th[0][i] * fb - (1.0 - th[0][i]) * fa)
        if f.is_zero or f.degree == 0:
            prod = np.zeros_like(D)
        else:
            prod = _project_product(f.df(grid.values(ut)) * Dvals, grid, D.shape)
        phit = (eps * th[3][i] + th[2][i]) * D + lam * (prod - (fb - fa)) * th[1][i]
        phi_n[i] = np.sqrt(np.sum(phi * phi))
        phit_n[i] = np.sqrt(np.sum(phit * phit))

    def sampler(t: float) -> SpectralField:
        w = float(theta(np.asarray(t, dtype=float)))
        return SpectralField(config.domain, w * b.coeffs + (1.0 - w) * a.coeffs)

    return GlueResult(ts, phi_n, phit_n, sampler)


# ----------------------------------------------------------------------------
# continuation in the forcing
# ----------------------------------------------------------------------------


def _h_norm(x: np.ndarray, lam: np.ndarray, order: float) -> float:
    return float(np.sqrt(np.sum(lam**order * x * x)))


def equilibrium_family(
    base: Equilibrium,
    g_direction: SpectralField,
    scales: Sequence[float],
    config: ProblemConfig,
    f: Nonlinearity,
    tol: float = 1e-10,
) -> list[Equilibrium]:
    """Equilibria for ``g = g0 + s * g_direction``, continued from ``base``.

    Each solve starts from the previous member (natural continuation in
    ascending ``|s|``).
    """
    order = np.argsort(np.abs(np.asarray(scales, dtype=float)))
    out: list[Equilibrium | None] = [None] * len(scales)
    guess = base.u_star
    for j in order:
        s = float(scales[j])
        cfg = config.with_(g=config.g + g_direction * s)
        e = solve_equilibrium(guess, cfg, f, tol=tol, tag=f"g-scale {s:.6g}")
        out[j] = e
        guess = e.u_star
    return out


def equilibrium_at_gap(
    base: Equilibrium,
    g_direction: SpectralField,
    gap: float,
    config: ProblemConfig,
    f: Nonlinearity,
    norm_order: float = 3.0,
    rtol: float = 1e-3,
    tol: float = 1e-10,
) -> tuple[Equilibrium, float]:
    """Member of the forcing family at ``H^{norm_order}`` distance ``gap`` from ``base``.

    Returns ``(equilibrium, s)``. The scale is found by secant iteration on
    ``log(distance)`` against ``log(s)``.
    """
    if not gap > 0:
        raise ValueError("gap must be positive")
    lam = eigenvalues(config.domain, config.n)

    def dist(s):
        e = solve_equilibrium(base.u_star, config.with_(g=config.g + g_direction * s), f, tol=tol)
        return e, _h_norm(e.u_star.coeffs - base.u_star.coeffs, lam, norm_order)

    s0 = 1e-3 * gap / max(_h_norm(g_direction.coeffs, lam, norm_order - 4.0), 1e-300)
    e0, d0 = dist(s0)
    if d0 == 0:
        raise EquilibriumError("forcing direction does not move the equilibrium", 0.0)
    s1 = s0 * gap / d0
    e1, d1 = dist(s1)
    for _ in range(40):
        if abs(d1 - gap) <= rtol * gap:
            return e1, s1
        slope = (np.log(d1) - np.log(d0)) / (np.log(s1) - np.log(s0)) if s1 != s0 else 1.0
        if not np.isfinite(slope) or slope <= 0:
            slope = 1.0
        s2 = s1 * np.exp((np.log(gap) - np.log(d1)) / slope)
        s0, d0 = s1, d1
        s1 = s2
        e1, d1 = dist(s1)
    raise EquilibriumError(f"could not reach gap {gap:g} (last {d1:g})", d1)


# ----------------------------------------------------------------------------
# the damping constant for the auxiliary equation
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LSelection:
    L: float
    lam: float
    c2: float
    c3: float
    young_theta: float
    floor_applied: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def interpolation_c3(c2: float = 1.0) -> tuple[float, float]:
    """Constant in ``lam |W|^2 <= 1/2 |A^{1/2}W|^2 + c3 lam^3 |A^{-1}W|^2``.

    From ``|W|^2 <= c2 |A^{1/2}W|^{4/3} |A^{-1}W|^{2/3}`` (``c2 = 1`` for the
    sine spectrum, by Hölder over modes) and Young's inequality with
    exponents 3/2 and 3, the weight ``theta`` with ``(2/3)(c2 theta)^{3/2} = 1/2``
    gives ``c3 = 1 / (3 theta^3)``. Returns ``(c3, theta)``.
    """
    theta = (0.75) ** (2.0 / 3.0) / c2
    c3 = 1.0 / (3.0 * theta**3)
    return c3, theta


def select_L(lam: float, c3: float | None = None, floor: float = 1.0) -> LSelection:
    """``L = 2 c3 lam^3`` (at least ``floor``; the floor only binds for small ``lam``)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    c2 = 1.0
    c3_, theta = interpolation_c3(c2)
    if c3 is not None:
        c3_ = float(c3)
    L = 2.0 * c3_ * lam**3
    floored = L < floor
    return LSelection(max(L, floor), float(lam), c2, c3_, theta, bool(floored))
