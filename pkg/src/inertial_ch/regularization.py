"""Splitting into smooth and decaying parts, and the singular limit eps -> 0.

``split_trajectory`` integrates the auxiliary equation
``eps v_tt + v_t + A(Av + f(v)) + L A^{-1} v = g + L A^{-1} u(t)`` along a
recorded trajectory ``u`` and monitors ``w = u - v``; ``eps_comparison``
measures how far the hyperbolic solution is from the (optionally coupled)
parabolic one as eps shrinks; ``backward_bound_check`` evaluates the
higher-order norms along the tail of a run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diagnostics import DecayFit, fit_exponential
from .dynamics import IntegratorConfig, State, Trace, TrajectoryRecord, integrate, integrate_auxiliary, integrate_parabolic
from .model import Nonlinearity, ProblemConfig, _nonlinear_coeffs, lebesgue_power
from .spectral import SpectralField, eigenvalues

__all__ = [
    "SplitReport",
    "split_trajectory",
    "smooth_ball_distance",
    "linear_decay_rate",
    "EpsScalingReport",
    "eps_comparison",
    "BackwardBound",
    "backward_bound_check",
    "second_derivative",
]


def _uniform_spacing(times: np.ndarray) -> float:
    dt = np.diff(times)
    if dt.size == 0:
        raise ValueError("trajectory has a single sample")
    h = float(np.median(dt))
    # the last interval may be shorter when T is not a multiple of the sample step
    if np.any(np.abs(dt[:-1] - h) > 1e-9 * max(1.0, h)):
        raise ValueError("trajectory samples must be uniformly spaced")
    return h


def _x0_series(du: np.ndarray, dv: np.ndarray, config: ProblemConfig, f: Nonlinearity) -> np.ndarray:
    lam = eigenvalues(config.domain, config.n)
    axes = tuple(range(1, du.ndim))
    q = f.p + 4
    a = np.sum(lam * du * du, axis=axes) + config.epsilon * np.sum(dv * dv / lam, axis=axes)
    leb = np.array([lebesgue_power(x, q) for x in du])
    return np.sqrt(a + leb)


# ----------------------------------------------------------------------------
# splitting
# ----------------------------------------------------------------------------


@dataclass
class SplitReport:
    """Series on the trajectory samples from ``t0`` on.

    ``w_x0`` is ``|w|_{X0}``; ``v_h4`` and ``v_t_h2`` are ``|A^2 v|`` and
    ``|A v_t|``. ``ball_radius_used`` is the radius ``R0`` of the
    ``H^4 x H^2`` ball and ``in_ball`` flags membership of ``(v, v_t)``.
    """

    times: np.ndarray
    w_x0: np.ndarray
    v_h4: np.ndarray
    v_t_h2: np.ndarray
    decay: DecayFit | None
    ball_radius_used: float
    in_ball: np.ndarray
    L: float
    lowpass_m: int
    t0: float
    reconstruction_error: float
    auxiliary: TrajectoryRecord = field(repr=False)
    w_u: np.ndarray = field(repr=False)
    note: str = ""

    @property
    def v_ball_norm(self) -> np.ndarray:
        return np.sqrt(self.v_h4**2 + self.v_t_h2**2)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "lowpass_m": self.lowpass_m,
            "t0": self.t0,
            "decay": None if self.decay is None else self.decay.to_dict(),
            "ball_radius_used": self.ball_radius_used,
            "all_in_ball": bool(np.all(self.in_ball)),
            "reconstruction_error": self.reconstruction_error,
            "note": self.note,
        }


def split_trajectory(
    traj: TrajectoryRecord,
    L: float,
    t0: float,
    lowpass_m: int,
    config: ProblemConfig | None = None,
    f: Nonlinearity | None = None,
    scheme: str = "etd",
    substeps: int | None = None,
    fit_start: float | None = None,
    floor_rel: float = 1e-9,
    ball_tail: float = 0.5,
    radius: float | None = None,
) -> SplitReport:
    """Split ``u = v + w`` from ``t0`` on, ``v(t0) = (P_m u(t0), P_m u_t(t0))``.

    The auxiliary solution is integrated with ``substeps`` steps per sample
    interval of ``traj`` (default: the step count of the source run, so both
    integrations share a step size), so ``v`` lands on the recorded times.
    The decay fit of ``|w|_{X0}`` stops where ``|w|`` first drops below
    ``floor_rel`` times its maximum (rounding floor) and starts at
    ``fit_start``, by default halfway between ``t0`` and that cut, so only
    the tail is fitted. ``R0`` is the largest ``(v, v_t)`` norm over the last
    ``ball_tail`` fraction of the run unless ``radius`` is given.
    """
    config = traj.config if config is None else config
    f = traj.f if f is None else f
    if not L > 0:
        raise ValueError("the auxiliary damping L must be positive")
    n = config.n
    if not 1 <= lowpass_m <= n:
        raise ValueError(f"lowpass_m must lie in [1, {n}]")
    if substeps is None:
        substeps = int(traj.meta.get("record_every", 1)) if traj.meta.get("scheme") != "reference" else 4
    if int(substeps) != substeps or substeps < 1:
        raise ValueError("substeps must be a positive integer")
    if t0 < traj.times[0] - 1e-12 or t0 >= traj.times[-1]:
        raise ValueError("t0 must lie inside the trajectory")
    i0 = int(np.searchsorted(traj.times, t0 - 1e-12))
    t0 = float(traj.times[i0])
    times = traj.times[i0:]
    h = _uniform_spacing(times)
    u = traj.u[i0:]
    ut = traj.v[i0:]
    d = config.domain
    sl = (slice(0, lowpass_m),) * d.dim
    v0u = np.zeros_like(u[0])
    v0v = np.zeros_like(u[0])
    v0u[sl] = u[0][sl]
    v0v[sl] = ut[0][sl]
    v0 = State.from_arrays(d, v0u, v0v, t0)
    trace = Trace(times, u, ut)
    integ = IntegratorConfig(scheme=scheme, dt=h / substeps, record_every=int(substeps))
    span = float(times[-1] - t0)
    aux = integrate_auxiliary(trace, v0, L, span, config, f, integ)
    if aux.times.size != times.size or np.max(np.abs(aux.times - times)) > 1e-9 * max(1.0, span):
        raise ValueError("auxiliary samples do not align with the trajectory")
    wu = u - aux.u
    wv = ut - aux.v
    recon = float(np.max(np.abs(aux.u + wu - u)))
    w_x0 = _x0_series(wu, wv, config, f)
    lam = eigenvalues(d, n)
    axes = tuple(range(1, u.ndim))
    v_h4 = np.sqrt(np.sum(lam**4 * aux.u**2, axis=axes))
    v_t_h2 = np.sqrt(np.sum(lam**2 * aux.v**2, axis=axes))
    vb = np.sqrt(v_h4**2 + v_t_h2**2)
    ntail = max(1, int(np.ceil(ball_tail * times.size)))
    R0 = float(np.max(vb[-ntail:])) if radius is None else float(radius)
    in_ball = vb <= R0 * (1.0 + 1e-12)

    decay, note = None, ""
    wmax = float(np.max(w_x0))
    if wmax == 0.0:
        note = "w vanishes identically"
    else:
        below = np.flatnonzero(w_x0 < floor_rel * wmax)
        t_cut = float(times[below[0]]) if below.size else float(times[-1])
        fit_start = t0 + 0.5 * (t_cut - t0) if fit_start is None else float(fit_start)
        sel = (times >= fit_start - 1e-12) & (times <= t_cut + 1e-12) & (w_x0 > 0)
        if np.count_nonzero(sel) >= 3:
            decay = fit_exponential(times[sel], w_x0[sel])
        else:
            note = "too few samples above the floor for a decay fit"
    return SplitReport(times, w_x0, v_h4, v_t_h2, decay, R0, in_ball, float(L), int(lowpass_m), t0, recon, aux, wu, note)


def smooth_ball_distance(report: SplitReport, t: float, radius: float | None = None) -> dict:
    """Upper bound ``|w(t)|_{X0}`` on the distance to the smooth ball and its certificate."""
    ts = report.times
    if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
        raise ValueError(f"time {t} outside the report range [{ts[0]}, {ts[-1]}]")
    i = int(np.argmin(np.abs(ts - t)))
    R = report.ball_radius_used if radius is None else float(radius)
    return {
        "upper_bound": float(report.w_x0[i]),
        "certified": bool(report.v_ball_norm[i] <= R * (1.0 + 1e-12)),
        "t": float(ts[i]),
        "radius": R,
    }


def linear_decay_rate(config: ProblemConfig, L: float, modes: np.ndarray | None = None, a1: float = 0.0) -> float:
    """Slowest decay rate of ``eps w'' + w' + (lam^2 + a1 lam + L/lam) w = 0`` over ``modes``.

    ``modes`` is a boolean mask over the coefficient array (default: all).
    ``a1`` is the slope of a linear ``f``.
    """
    lam = eigenvalues(config.domain, config.n)
    c = lam**2 + a1 * lam + L / lam
    if modes is not None:
        c = c[modes]
    eps = config.epsilon
    disc = 1.0 - 4.0 * eps * c
    rate = np.where(disc > 0, (1.0 - np.sqrt(np.abs(disc))) / (2.0 * eps), 1.0 / (2.0 * eps))
    # overdamped branch: use the stable form 2c / (1 + sqrt(disc))
    rate = np.where(disc > 0, 2.0 * c / (1.0 + np.sqrt(np.abs(disc))), rate)
    return float(np.min(rate))


# ----------------------------------------------------------------------------
# eps -> 0 comparison
# ----------------------------------------------------------------------------


@dataclass
class EpsScalingReport:
    eps_values: list
    sup_diff_hminus1: list
    sup_diff_l2: list
    slope: float | None
    ratio_spread: float | None
    failures: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        ev = np.asarray(self.eps_values, dtype=float)
        if ev.size > 1 and not np.all(np.diff(ev) < 0):
            raise ValueError("eps_values must be strictly decreasing")

    def to_dict(self) -> dict:
        return {
            "eps_values": list(self.eps_values),
            "sup_diff_hminus1": list(self.sup_diff_hminus1),
            "sup_diff_l2": list(self.sup_diff_l2),
            "slope": self.slope,
            "ratio_spread": self.ratio_spread,
            "failures": dict(self.failures),
            "note": self.note,
        }


def _one_eps(u0: SpectralField, eps: float, T: float, L0: float, config: ProblemConfig, f: Nonlinearity, dt: float, scheme: str):
    cfg = config.with_(epsilon=eps)
    z = SpectralField.zeros(u0.domain, u0.n)
    hyp = integrate(State(u0, z, 0.0), T, IntegratorConfig(scheme=scheme, dt=dt), cfg, f)
    par = integrate_parabolic(u0, T, cfg, f, L0=L0, forcing=hyp if L0 > 0 else None, dt=dt, scheme="etd", t0=0.0)
    if par.times.size != hyp.times.size:
        raise RuntimeError("hyperbolic and parabolic samples do not align")
    lam = eigenvalues(cfg.domain, cfg.n)
    diff = hyp.u - par.u
    axes = tuple(range(1, diff.ndim))
    hm1 = np.sqrt(np.sum(diff**2 / lam, axis=axes))
    l2 = np.sqrt(np.sum(diff**2, axis=axes))
    return float(np.max(hm1)), float(np.max(l2))


def eps_comparison(
    u0: SpectralField,
    eps_list: Sequence[float],
    T: float,
    L0: float,
    config: ProblemConfig,
    f: Nonlinearity,
    dt: float = 1e-4,
    scheme: str = "etd",
    workers: int = 1,
) -> EpsScalingReport:
    """Compare ``u_eps`` (with ``u_t(0) = 0``) against the parabolic solution from ``u0``.

    The parabolic comparison is ``w_t + A(Aw + f(w)) + L0 A^{-1} w = g + L0 A^{-1} u_eps``
    (classical Cahn-Hilliard for ``L0 = 0``). ``slope`` is the log-log
    slope of ``sup_t |u_eps - w|_{H^-1}`` against eps and ``ratio_spread``
    is max/min of ``sup_t |u_eps - w|_{H^-1}^2 / eps``. Runs that fail are
    listed in ``failures`` and left out of the fits.
    """
    eps_sorted = sorted({float(e) for e in eps_list}, reverse=True)
    for e in eps_sorted:
        if not 0 < e <= 1:
            raise ValueError("every eps must lie in (0, 1]")
    if L0 < 0:
        raise ValueError("L0 must be nonnegative")

    def run(e):
        try:
            return e, _one_eps(u0, e, T, L0, config, f, dt, scheme), None
        except (FloatingPointError, RuntimeError, ValueError) as exc:
            return e, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, eps_sorted))
    else:
        results = [run(e) for e in eps_sorted]
    ev, hm1, l2, failures = [], [], [], {}
    for e, res, err in results:
        if res is None:
            failures[e] = err
            continue
        ev.append(e)
        hm1.append(res[0])
        l2.append(res[1])
    slope = spread = None
    note = ""
    if len(ev) >= 2 and all(x > 0 for x in hm1):
        slope = float(np.polyfit(np.log(ev), np.log(hm1), 1)[0])
        r = np.array(hm1) ** 2 / np.array(ev)
        spread = float(np.max(r) / np.min(r))
    else:
        note = "fewer than two usable eps values; slope undefined"
    return EpsScalingReport(ev, hm1, l2, slope, spread, failures, note)


# ----------------------------------------------------------------------------
# higher-order tail bound
# ----------------------------------------------------------------------------


def second_derivative(u: np.ndarray, ut: np.ndarray, config: ProblemConfig, f: Nonlinearity) -> np.ndarray:
    """``u_tt = (g - u_t - A(Au + P_n f(u))) / eps`` from the equation."""
    lam = eigenvalues(config.domain, config.n)
    return (config.g.coeffs - ut - lam * (lam * u + _nonlinear_coeffs(u, f))) / config.epsilon


@dataclass(frozen=True)
class BackwardBound:
    times: np.ndarray
    levels: np.ndarray
    sup_level: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"sup_level": self.sup_level, "threshold": self.threshold, "passed": self.passed}


def backward_bound_check(traj: TrajectoryRecord, t_tail: float, threshold: float = np.inf) -> BackwardBound:
    """``sup`` over ``t >= t_tail`` of ``|A^2 u|^2 + |A u_t|^2 + eps |u_tt|^2``."""
    idx = traj.window(t_tail)
    if idx.size == 0:
        raise ValueError("tail window is empty")
    cfg = traj.config
    lam = eigenvalues(cfg.domain, cfg.n)
    levels = np.empty(idx.size)
    for j, i in enumerate(idx):
        u, ut = traj.u[i], traj.v[i]
        utt = second_derivative(u, ut, cfg, traj.f)
        levels[j] = float(np.sum(lam**4 * u * u) + np.sum(lam**2 * ut * ut) + cfg.epsilon * np.sum(utt * utt))
    sup = float(np.max(levels))
    return BackwardBound(traj.times[idx], levels, sup, float(threshold), bool(sup <= threshold))
