"""Scalar functionals, identity residuals and inequality monitors.

Everything here reads a :class:`~inertial_ch.dynamics.TrajectoryRecord` or a
single :class:`~inertial_ch.dynamics.State` and never mutates it. Constants
that the theory leaves implicit (decay rates, amplitudes, the constant in the
dissipation bound) are fitted and reported; the monitors only check the form
of each inequality.

Norm conventions: ``|u|_{H^s} = |A^{s/2} u|`` and the graph norm of the
scale ``V^s_eps`` is ``|A^{(s+1)/2} u|^2 + eps |A^{(s-1)/2} u_t|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .dynamics import State, TrajectoryRecord
from .model import Nonlinearity, ProblemConfig, _nonlinear_coeffs, energy, x0_norm, y_functional
from .spectral import SpectralField, eigenvalues, gauss_grid, to_grid

__all__ = [
    "DiagnosticsError",
    "ResolutionError",
    "DecayFit",
    "DissipationCheck",
    "EnergyReport",
    "graph_norm",
    "sup_norm",
    "energy_report",
    "energy_series",
    "energy_equality_residual",
    "energy_increase",
    "second_identity_residual",
    "dissipation_check",
    "m_proxy",
    "fit_exponential",
    "hausdorff_semidistance",
    "z_functional",
    "z_equivalence_constant",
    "brezis_gallouet_monitor",
    "OBSERVERS",
    "make_observers",
]

GRAPH_ORDERS = (-2, -1, 0, 1, 2, 3)
MIN_SAMPLES_PER_UNIT_TIME = 100


class DiagnosticsError(ValueError):
    """Input outside the domain of a diagnostic (empty set, bad samples, wrong dimension)."""


class ResolutionError(DiagnosticsError):
    """Trajectory sampled too coarsely for trapezoid time integrals."""


# ----------------------------------------------------------------------------
# norms and per-state reports
# ----------------------------------------------------------------------------


def graph_norm(state: State, epsilon: float, s: float) -> float:
    """Norm of ``(u, u_t)`` in ``V^s_eps``."""
    u, v = state.u.coeffs, state.v.coeffs
    lam = eigenvalues(state.domain, state.n)
    a = float(np.dot((lam ** (s + 1) * u).ravel(), u.ravel()))
    b = float(np.dot((lam ** (s - 1) * v).ravel(), v.ravel()))
    return float(np.sqrt(a + epsilon * b))


def sup_norm(u: SpectralField, oversample: int | None = None) -> float:
    """``max |u|`` on a uniform interior grid (8x oversampled in 1D, 4x in 2D)."""
    if not np.any(u.coeffs):
        return 0.0
    if oversample is None:
        oversample = 8 if u.domain.dim == 1 else 4
    return float(np.max(np.abs(to_grid(u, oversample))))


@dataclass(frozen=True)
class EnergyReport:
    """Snapshot of the standard functionals at one state."""

    E_eps: float
    Y_eps: float
    x0_norm: float
    v_norms: dict
    Linf_u: float
    Linf_ut: float
    dissipation_integral: float = 0.0

    def __post_init__(self):
        vals = [self.E_eps, self.Y_eps, self.x0_norm, self.Linf_u, self.Linf_ut, self.dissipation_integral]
        vals += list(self.v_norms.values())
        if not all(np.isfinite(vals)):
            raise DiagnosticsError("non-finite entry in energy report")

    def to_dict(self) -> dict:
        out = {
            "E_eps": self.E_eps,
            "Y_eps": self.Y_eps,
            "x0_norm": self.x0_norm,
            "Linf_u": self.Linf_u,
            "Linf_ut": self.Linf_ut,
            "dissipation_integral": self.dissipation_integral,
        }
        out.update({f"v_norm_{s}": val for s, val in self.v_norms.items()})
        return out


def energy_report(
    state: State,
    config: ProblemConfig,
    f: Nonlinearity,
    dissipation_integral: float = 0.0,
    alpha: float = 0.1,
    cstar: float = 0.0,
) -> EnergyReport:
    return EnergyReport(
        E_eps=energy(state, config, f),
        Y_eps=y_functional(state, config, f, alpha, cstar),
        x0_norm=x0_norm(state, config, f),
        v_norms={s: graph_norm(state, config.epsilon, s) for s in GRAPH_ORDERS},
        Linf_u=sup_norm(state.u),
        Linf_ut=sup_norm(state.v),
        dissipation_integral=float(dissipation_integral),
    )


# ----------------------------------------------------------------------------
# observers (callables (state, config, f) -> dict) for integrate()
# ----------------------------------------------------------------------------


def _obs_energy(state, config, f):
    return {"E_eps": energy(state, config, f)}


def _obs_x0(state, config, f):
    return {"x0_norm": x0_norm(state, config, f)}


def _obs_v_norms(state, config, f):
    return {f"v_norm_{s}": graph_norm(state, config.epsilon, s) for s in GRAPH_ORDERS}


def _obs_linf(state, config, f):
    return {"Linf_u": sup_norm(state.u), "Linf_ut": sup_norm(state.v)}


def _obs_y(state, config, f):
    return {"Y_eps": y_functional(state, config, f, 0.1, 0.0)}


OBSERVERS: dict[str, Callable] = {
    "energy": _obs_energy,
    "x0_norm": _obs_x0,
    "v_norms": _obs_v_norms,
    "linf": _obs_linf,
    "y_functional": _obs_y,
}


def make_observers(names: Iterable[str]) -> list[Callable]:
    out = []
    for name in names:
        if name not in OBSERVERS:
            raise KeyError(f"unknown observer {name!r}; available: {sorted(OBSERVERS)}")
        out.append(OBSERVERS[name])
    return out


# ----------------------------------------------------------------------------
# identity residuals
# ----------------------------------------------------------------------------


def _check_density(traj: TrajectoryRecord):
    t = traj.times
    if t.size < 2:
        raise ResolutionError("need at least two samples")
    span = t[-1] - t[0]
    if (t.size - 1) < MIN_SAMPLES_PER_UNIT_TIME * span * (1.0 - 1e-9):
        raise ResolutionError(
            f"{t.size} samples over a span of {span:g} is below "
            f"{MIN_SAMPLES_PER_UNIT_TIME} samples per unit time"
        )


def _cumtrapz(t, y):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def energy_series(traj: TrajectoryRecord) -> np.ndarray:
    """``E_eps`` at every sample (reuses a recorded ``E_eps`` column)."""
    if "E_eps" in traj.diagnostics:
        return np.asarray(traj.diagnostics["E_eps"])
    return np.array([energy(s, traj.config, traj.f) for s in traj.states()])


def _dissipation_rate(traj):
    lam = eigenvalues(traj.config.domain, traj.config.n)
    axes = tuple(range(1, traj.v.ndim))
    return np.sum(traj.v**2 / lam, axis=axes)


def dissipation_integral(traj: TrajectoryRecord, quadrature: str = "auto") -> np.ndarray:
    """Running ``int_0^t |u_t|_{V'}^2``.

    ``quadrature='recorded'`` uses the integral carried by the integrator,
    ``'trapezoid'`` recomputes it from the samples, ``'auto'`` prefers the
    recorded column.
    """
    if quadrature not in ("auto", "recorded", "trapezoid"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    if quadrature != "trapezoid" and "dissipation_integral" in traj.diagnostics:
        return np.asarray(traj.diagnostics["dissipation_integral"])
    if quadrature == "recorded":
        raise DiagnosticsError("trajectory carries no recorded dissipation integral")
    return _cumtrapz(traj.times, _dissipation_rate(traj))


def energy_equality_residual(traj: TrajectoryRecord, quadrature: str = "auto") -> float:
    """``max_t |E(t) - E(0) + int_0^t |u_t|_{V'}^2|``."""
    _check_density(traj)
    E = energy_series(traj)
    D = dissipation_integral(traj, quadrature)
    return float(np.max(np.abs(E - E[0] + D)))


def energy_increase(traj: TrajectoryRecord) -> float:
    """Largest increase of the energy between consecutive samples (<= 0 if monotone)."""
    E = energy_series(traj)
    if E.size < 2:
        return 0.0
    return float(np.max(np.diff(E)))


def _second_bracket(traj):
    lam = eigenvalues(traj.config.domain, traj.config.n)
    eps = traj.config.epsilon
    axes = tuple(range(1, traj.u.ndim))
    return eps * np.sum(traj.v * traj.u / lam, axis=axes) + 0.5 * np.sum(traj.u**2 / lam, axis=axes)


def _second_integrand(traj):
    cfg = traj.config
    lam = eigenvalues(cfg.domain, cfg.n)
    g = cfg.g.coeffs
    out = np.empty(len(traj))
    for i in range(len(traj)):
        u, v = traj.u[i], traj.v[i]
        pf = _nonlinear_coeffs(u, traj.f)
        out[i] = (
            cfg.epsilon * float(np.dot((v / lam).ravel(), v.ravel()))
            - float(np.dot((lam * u).ravel(), u.ravel()))
            - float(np.dot(pf.ravel(), u.ravel()))
            + float(np.dot((g / lam).ravel(), u.ravel()))
        )
    return out


def second_identity_residual(traj: TrajectoryRecord, quadrature: str = "auto") -> float:
    """Residual of the ``A^{-1}u`` identity in integral form.

    With ``Q = eps<u_t, A^{-1}u> + 1/2 |u|_{V'}^2`` the identity reads
    ``Q(t) - Q(0) = int_0^t (eps|u_t|_{V'}^2 - |u|_V^2 - <f(u),u> + <g,A^{-1}u>)``.
    """
    _check_density(traj)
    Q = _second_bracket(traj)
    if quadrature != "trapezoid" and "second_identity_integral" in traj.diagnostics:
        S = np.asarray(traj.diagnostics["second_identity_integral"])
    elif quadrature == "recorded":
        raise DiagnosticsError("trajectory carries no recorded second-identity integral")
    else:
        S = _cumtrapz(traj.times, _second_integrand(traj))
    return float(np.max(np.abs(Q - Q[0] - S)))


# ----------------------------------------------------------------------------
# rate fitting and the dissipation bound
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """``y ~ amplitude * exp(-rate * t)`` on ``window``."""

    rate: float
    amplitude: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        if not self.window[1] >= self.window[0]:
            raise DiagnosticsError("empty fit window")
        if not 0.0 <= self.r_squared <= 1.0:
            raise DiagnosticsError("r_squared outside [0, 1]")

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float))

    def to_dict(self) -> dict:
        return {"rate": self.rate, "amplitude": self.amplitude, "r_squared": self.r_squared, "window": list(self.window)}


def fit_exponential(t, y, window: tuple | None = None) -> DecayFit:
    """Least-squares line through ``(t, log y)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DiagnosticsError("t and y must be 1-D arrays of equal length")
    if window is not None:
        sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, y = t[sel], y[sel]
    if t.size < 2:
        raise DiagnosticsError("need at least two samples in the fit window")
    if np.any(~(y > 0)):
        raise DiagnosticsError("fit_exponential needs strictly positive samples")
    ly = np.log(y)
    X = np.column_stack([np.ones_like(t), t])
    (b0, b1), *_ = np.linalg.lstsq(X, ly, rcond=None)
    res = ly - (b0 + b1 * t)
    ss_res = float(np.dot(res, res))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot <= 1e-28 * max(1.0, float(np.dot(ly, ly))):
        r2 = 1.0
        b1 = 0.0 if abs(b1) < 1e-12 else b1
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return DecayFit(rate=float(-b1) + 0.0, amplitude=float(np.exp(b0)), r_squared=r2, window=(float(t[0]), float(t[-1])))


@dataclass(frozen=True)
class DissipationCheck:
    """Outcome of fitting ``|U(t)|^2 <= C |U0|^2 e^{-kappa t} + C (1 + |g|^2)``."""

    C_fit: float
    kappa_fit: float
    floor: float
    satisfied: bool
    degenerate: bool
    fit: DecayFit | None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "C_fit": self.C_fit,
            "kappa_fit": self.kappa_fit,
            "floor": self.floor,
            "satisfied": self.satisfied,
            "degenerate": self.degenerate,
            "fit": None if self.fit is None else self.fit.to_dict(),
            "note": self.note,
        }


def dissipation_check(
    traj: TrajectoryRecord,
    fit_window: tuple | None = None,
    tail_fraction: float = 0.2,
    c_max: float = 1e3,
) -> DissipationCheck:
    """Fit and check the dissipation bound in the ``X0`` metric.

    The series is ``y(t) = |U(t)|_{X0}^2``. Its asymptotic level is the
    maximum over the last ``tail_fraction`` of the run; the excess over that
    level is fitted by an exponential on ``fit_window`` (default: the first
    half of the run), giving ``kappa_fit``. ``C_fit`` is then the smallest
    constant for which the bound with that rate holds at every sample, and
    the check is satisfied iff ``kappa_fit > 0`` and ``C_fit <= c_max``.
    A flat series (relative variation below 1e-8) is reported as degenerate
    and satisfied with ``kappa_fit = 0``.
    """
    cfg = traj.config
    t = traj.times - traj.times[0]
    y = np.array([x0_norm(s, cfg, traj.f) for s in traj.states()])
    g2 = float(np.sum(cfg.g.coeffs**2))
    y0 = y[0]
    scale = max(abs(y0), 1e-300)
    if t.size < 3:
        raise DiagnosticsError("trajectory too short for a dissipation fit")
    if fit_window is None:
        fit_window = (0.0, 0.5 * t[-1])
    elif not fit_window[1] < t[-1] + 1e-12:
        raise DiagnosticsError("fit window extends past the end of the trajectory")

    def bound_constant(kappa):
        return float(np.max(y / (y0 * np.exp(-kappa * t) + 1.0 + g2)))

    if np.max(np.abs(y - y0)) <= 1e-8 * max(scale, 1.0):
        return DissipationCheck(bound_constant(0.0), 0.0, float(y0), True, True, None, "flat series, rate not identifiable")

    ntail = max(1, int(np.ceil(tail_fraction * t.size)))
    floor = float(np.max(y[-ntail:]))
    excess = y - floor
    sel = (t >= fit_window[0] - 1e-12) & (t <= fit_window[1] + 1e-12) & (excess > 1e-12 * scale)
    if np.count_nonzero(sel) < 3:
        return DissipationCheck(np.inf, 0.0, floor, False, True, None, "no decaying transient in the fit window")
    fit = fit_exponential(t[sel], excess[sel])
    kappa = fit.rate
    if not kappa > 0:
        return DissipationCheck(np.inf, kappa, floor, False, False, fit, "transient does not decay")
    C = bound_constant(kappa)
    ok = bool(np.isfinite(C) and C <= c_max)
    return DissipationCheck(C, kappa, floor, ok, False, fit, "" if ok else f"C_fit exceeds {c_max:g}")


def m_proxy(state: State, config: ProblemConfig, f: Nonlinearity) -> float:
    """Fixed-``n`` proxy of the M-functional: the squared ``X0`` metric of the state.

    The true functional takes an infimum over all Galerkin subsequences
    converging to the solution and is not computable; at a fixed cutoff the
    state itself is the only available approximation.
    """
    return x0_norm(state, config, f)


# ----------------------------------------------------------------------------
# set distances
# ----------------------------------------------------------------------------


def _metric_fn(metric, config, f) -> Callable[[State], float]:
    if callable(metric):
        return metric
    if isinstance(metric, str):
        key = metric.strip().upper()
        if key == "X0":
            if config is None or f is None:
                raise DiagnosticsError("the X0 metric needs config and f")
            return lambda d: float(np.sqrt(x0_norm(d, config, f)))
        if key.startswith("V"):
            s = float(key[1:]) if len(key) > 1 else 0.0
            eps = 1.0 if config is None else config.epsilon
            return lambda d: graph_norm(d, eps, s)
    raise DiagnosticsError(f"unknown metric {metric!r}; use 'V<s>', 'X0' or a callable")


def hausdorff_semidistance(
    setA: Sequence[State],
    setB: Sequence[State],
    metric="V0",
    config: ProblemConfig | None = None,
    f: Nonlinearity | None = None,
) -> float:
    """``sup_{a in A} inf_{b in B} |a - b|`` over finite sets of states."""
    A, B = list(setA), list(setB)
    if not A or not B:
        raise DiagnosticsError("both sets must be nonempty")
    norm = _metric_fn(metric, config, f)
    worst = 0.0
    for a in A:
        best = np.inf
        for b in B:
            d = State(a.u - b.u, a.v - b.v, a.t)
            best = min(best, norm(d))
            if best == 0.0:
                break
        worst = max(worst, best)
    return float(worst)


# ----------------------------------------------------------------------------
# higher-order functionals
# ----------------------------------------------------------------------------


def _gradient_term(u: np.ndarray, f: Nonlinearity) -> float:
    """``int f'(u) |grad u|^2`` by Gauss quadrature exact for polynomial ``f``."""
    if not np.any(u):
        return 0.0
    n = u.shape[0]
    deg = max(f.degree, 1)
    grid = gauss_grid(u.ndim, n, (deg + 1) * n)
    vals = grid.values(u)
    grad2 = sum(gk**2 for gk in grid.gradient(u))
    fp = f.df(vals) if not f.is_zero else np.zeros_like(vals)
    return grid.integrate(fp * grad2)


def z_functional(state: State, config: ProblemConfig, f: Nonlinearity, L0: float, gamma: float) -> float:
    """``1/2(eps|u_t|^2 + |u|_{H^2}^2 + (f'(u) grad u, grad u) + L0|u|^2 + 2 gamma eps (u, u_t))``."""
    u, v = state.u.coeffs, state.v.coeffs
    lam = eigenvalues(state.domain, state.n)
    eps = config.epsilon
    return 0.5 * (
        eps * float(np.sum(v * v))
        + float(np.sum(lam**2 * u * u))
        + _gradient_term(u, f)
        + L0 * float(np.sum(u * u))
        + 2.0 * gamma * eps * float(np.sum(u * v))
    )


def z_equivalence_constant(
    states: Iterable[State], config: ProblemConfig, f: Nonlinearity, L0: float, gamma: float
) -> float:
    """Fitted ``k`` in ``k |U|^2 <= Z_u``: the minimum ratio over ``states``.

    The ratio is taken against the squared ``V^1_eps`` norm
    ``|u|_{H^2}^2 + eps |u_t|^2``, the norm that ``Z_u`` controls.
    Zero states are skipped; returns ``inf`` if every state is zero.
    """
    k = np.inf
    for s in states:
        n2 = graph_norm(s, config.epsilon, 1.0) ** 2
        if n2 > 0:
            k = min(k, z_functional(s, config, f, L0, gamma) / n2)
    return float(k)


@dataclass(frozen=True)
class BrezisGallouetResult:
    max_ratio: float
    ratios: np.ndarray = field(repr=False)

    @property
    def growth(self) -> float:
        """``max ratio / initial ratio`` (inf if the initial ratio is zero and later ones are not)."""
        r0 = self.ratios[0]
        if r0 > 0:
            return float(self.max_ratio / r0)
        return 0.0 if self.max_ratio == 0 else np.inf


def brezis_gallouet_ratio(u: SpectralField) -> float:
    """``|u|_inf^2 / ((1 + |u|_{H^1}^2) ln(e + |u|_{H^2}^2))`` for a 2-D field.

    ``ln(e + x)`` replaces ``ln(1 + x)`` so the denominator stays positive at
    ``u = 0``.
    """
    if u.domain.dim != 2:
        raise DiagnosticsError("the logarithmic inequality is monitored in 2-D only")
    lam = eigenvalues(u.domain, u.n)
    c2 = u.coeffs**2
    h1 = float(np.sum(lam * c2))
    h2 = float(np.sum(lam**2 * c2))
    return sup_norm(u) ** 2 / ((1.0 + h1) * np.log(np.e + h2))


def brezis_gallouet_monitor(traj: TrajectoryRecord) -> BrezisGallouetResult:
    if traj.config.domain.dim != 2:
        raise DiagnosticsError("the logarithmic inequality is monitored in 2-D only")
    r = np.array([brezis_gallouet_ratio(s.u) for s in traj.states()])
    return BrezisGallouetResult(float(np.max(r)), r)
