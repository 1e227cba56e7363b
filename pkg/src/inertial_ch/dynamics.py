"""Faedo-Galerkin dynamics and time integrators.

Per mode ``k`` every system handled here has the form

    eps a'' + a' + c_k a = N_k(u, t)        (hyperbolic, eps > 0)
        a' + c_k a = N_k(u, t)              (parabolic)

with ``c_k = lambda_k^2 + L / lambda_k`` and ``N = h(t) - A P_n f(u)``. The
linear part is diagonal in the sine basis; ``f`` is always treated explicitly.

Schemes
-------
``imex``       first-order semi-implicit (linear part implicit per mode).
``etd``        second-order exponential Runge-Kutta; the linear part is
               propagated exactly by per-mode matrix exponentials.
``reference``  adaptive Dormand-Prince 5(4) on the integrating-factor
               transformed system (linear part exact); ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .model import Nonlinearity, ProblemConfig, _nonlinear_coeffs
from .spectral import DomainSpec, SpectralField, eigenvalues

__all__ = [
    "State",
    "IntegratorConfig",
    "TrajectoryRecord",
    "StiffnessError",
    "TraceError",
    "rhs",
    "step_imex",
    "step_etd",
    "step_reference",
    "integrate",
    "integrate_parabolic",
    "integrate_auxiliary",
    "Trace",
]

SCHEMES = ("imex", "etd", "reference")


class StiffnessError(RuntimeError):
    """Adaptive step size collapsed below the floor."""


class TraceError(ValueError):
    """A forcing trace does not cover the requested time interval."""


@dataclass(frozen=True)
class State:
    u: SpectralField
    v: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if self.u.domain != self.v.domain or self.u.n != self.v.n:
            raise ValueError("u and u_t must share domain and cutoff")

    @property
    def domain(self) -> DomainSpec:
        return self.u.domain

    @property
    def n(self) -> int:
        return self.u.n

    @classmethod
    def from_arrays(cls, domain: DomainSpec, u, v=None, t: float = 0.0) -> "State":
        u = np.asarray(u, dtype=float)
        v = np.zeros_like(u) if v is None else np.asarray(v, dtype=float)
        return cls(SpectralField(domain, u), SpectralField(domain, v), float(t))

    @classmethod
    def rest(cls, domain: DomainSpec, n: int) -> "State":
        z = SpectralField.zeros(domain, n)
        return cls(z, z, 0.0)


@dataclass(frozen=True)
class IntegratorConfig:
    """``dt`` is the step (imex/etd) or the sampling interval (reference)."""

    scheme: str = "etd"
    dt: float = 1e-3
    tol: float = 1e-10
    record_every: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0 or not self.tol > 0:
            raise ValueError("dt and tol must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")


@dataclass
class TrajectoryRecord:
    """Sampled trajectory plus per-sample diagnostics.

    ``u`` and ``v`` hold coefficient arrays stacked along axis 0.
    """

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    config: ProblemConfig
    f: Nonlinearity
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("time stamps must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def state(self, i: int) -> State:
        d = self.config.domain
        return State(SpectralField(d, self.u[i]), SpectralField(d, self.v[i]), float(self.times[i]))

    def states(self):
        for i in range(len(self)):
            yield self.state(i)

    def index_at(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        return i

    def window(self, t_start: float, t_end: float = np.inf) -> np.ndarray:
        return np.flatnonzero((self.times >= t_start - 1e-12) & (self.times <= t_end + 1e-12))


# ----------------------------------------------------------------------------
# the semilinear system
# ----------------------------------------------------------------------------


class Trace:
    """Interpolation of a coefficient time series.

    Piecewise cubic Hermite when time derivatives are supplied (fourth-order
    accurate), piecewise linear otherwise.
    """

    def __init__(self, times, values, derivatives=None):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or self.times.size != self.values.shape[0] or self.times.size < 1:
            raise TraceError("trace times and values do not line up")
        self.derivatives = None
        if derivatives is not None:
            self.derivatives = np.asarray(derivatives, dtype=float)
            if self.derivatives.shape != self.values.shape:
                raise TraceError("trace derivatives do not match the values")

    @classmethod
    def from_record(cls, rec: TrajectoryRecord) -> "Trace":
        return cls(rec.times, rec.u, rec.v)

    def covers(self, t0: float, t1: float) -> bool:
        tol = 1e-9 * (1.0 + abs(t1))
        return self.times[0] <= t0 + tol and self.times[-1] >= t1 - tol

    def __call__(self, t: float) -> np.ndarray:
        ts = self.times
        tol = 1e-9 * (1.0 + abs(t))
        if t < ts[0] - tol or t > ts[-1] + tol:
            raise TraceError(f"time {t} outside trace [{ts[0]}, {ts[-1]}]")
        j = int(np.searchsorted(ts, t))
        if j < ts.size and abs(ts[j] - t) <= 1e-14 * (1.0 + abs(t)):
            return self.values[j]
        if ts.size == 1:
            return self.values[0]
        j = min(max(j, 1), ts.size - 1)
        h = ts[j] - ts[j - 1]
        s = min(max((t - ts[j - 1]) / h, 0.0), 1.0)
        y0, y1 = self.values[j - 1], self.values[j]
        if self.derivatives is None:
            return (1.0 - s) * y0 + s * y1
        m0, m1 = self.derivatives[j - 1], self.derivatives[j]
        s2, s3 = s * s, s * s * s
        return (
            (2 * s3 - 3 * s2 + 1) * y0
            + (s3 - 2 * s2 + s) * h * m0
            + (-2 * s3 + 3 * s2) * y1
            + (s3 - s2) * h * m1
        )


class _System:
    """``eps a'' + a' + c a = h(t) - lam * P f(u)`` (or its parabolic version)."""

    def __init__(self, config: ProblemConfig, f: Nonlinearity, eps, L: float = 0.0, trace: Trace | None = None):
        self.config, self.f = config, f
        self.eps = eps
        self.domain = config.domain
        self.lam = eigenvalues(config.domain, config.n)
        self.L = float(L)
        self.c = self.lam**2 + self.L / self.lam
        self.g = config.g.coeffs
        self.trace = trace
        self.shape = self.lam.shape
        self._expcache: dict = {}

    def pf(self, u):
        return _nonlinear_coeffs(u, self.f)

    def forcing(self, t):
        if self.trace is None or self.L == 0.0:
            return self.g
        return self.g + self.L * self.trace(t) / self.lam

    def drive(self, u, t, pf=None):
        pf = self.pf(u) if pf is None else pf
        return self.forcing(t) - self.lam * pf

    # -- exponential propagators -------------------------------------------------

    def phi(self, h: float):
        """``exp(hM)``, ``h phi1(hM)``, ``h phi2(hM)`` per mode, with the forcing column."""
        key = float(h)
        hit = self._expcache.get(key)
        if hit is not None:
            return hit
        c = self.c.ravel()
        m = c.size
        if self.eps is None:
            Z = np.zeros((m, 3, 3))
            Z[:, 0, 0] = -h * c
            Z[:, 0, 1] = 1.0
            Z[:, 1, 2] = 1.0
            E = sla.expm(Z)
            out = (E[:, 0, 0], h * E[:, 0, 1], h * E[:, 0, 2])
            out = tuple(a.reshape(self.shape) for a in out)
        else:
            eps = self.eps
            Z = np.zeros((m, 6, 6))
            Z[:, 0, 1] = h
            Z[:, 1, 0] = -h * c / eps
            Z[:, 1, 1] = -h / eps
            Z[:, 0, 2] = Z[:, 1, 3] = 1.0
            Z[:, 2, 4] = Z[:, 3, 5] = 1.0
            E = sla.expm(Z)
            r = lambda a: np.ascontiguousarray(a).reshape(self.shape)
            # forcing enters only the v-equation as N / eps: keep the second column
            out = (
                (r(E[:, 0, 0]), r(E[:, 0, 1]), r(E[:, 1, 0]), r(E[:, 1, 1])),
                (r(h * E[:, 0, 3] / eps), r(h * E[:, 1, 3] / eps)),
                (r(h * E[:, 0, 5] / eps), r(h * E[:, 1, 5] / eps)),
            )
        if len(self._expcache) > 8:
            self._expcache.clear()
        self._expcache[key] = out
        return out


def _system(config, f, L=0.0, trace=None, parabolic=False):
    return _System(config, f, None if parabolic else config.epsilon, L=L, trace=trace)


# ----------------------------------------------------------------------------
# single steps on raw arrays
# ----------------------------------------------------------------------------


def _imex_hyp(sys: _System, u, v, t, dt, pf=None):
    eps, c = sys.eps, sys.c
    N = sys.drive(u, t, pf)
    v1 = (eps * v / dt - c * u + N) / (eps / dt + 1.0 + c * dt)
    return u + dt * v1, v1


def _imex_par(sys: _System, u, t, dt, pf=None):
    N = sys.drive(u, t, pf)
    return (u + dt * N) / (1.0 + dt * sys.c)


def _etd_hyp(sys: _System, u, v, t, dt, pf=None):
    (e00, e01, e10, e11), (p1u, p1v), (p2u, p2v) = sys.phi(dt)
    N0 = sys.drive(u, t, pf)
    au = e00 * u + e01 * v + p1u * N0
    av = e10 * u + e11 * v + p1v * N0
    dN = sys.drive(au, t + dt) - N0
    return au + p2u * dN, av + p2v * dN


def _etd_par(sys: _System, u, t, dt, pf=None):
    E, P1, P2 = sys.phi(dt)
    N0 = sys.drive(u, t, pf)
    a = E * u + P1 * N0
    return a + P2 * (sys.drive(a, t + dt) - N0)


def rhs(state: State, config: ProblemConfig, f: Nonlinearity):
    """Right-hand side of the first-order Galerkin system: ``(du, dv)``."""
    if not config.epsilon > 0:
        raise ValueError("eps = 0 is the parabolic limit; use integrate_parabolic")
    sys = _system(config, f)
    u, v = state.u.coeffs, state.v.coeffs
    dv = (sys.drive(u, state.t) - v - sys.lam**2 * u) / config.epsilon
    d = config.domain
    return SpectralField(d, v), SpectralField(d, dv)


def step_imex(state: State, dt: float, config: ProblemConfig, f: Nonlinearity) -> State:
    """One semi-implicit step: linear part implicit (per-mode 2x2 solve), ``f`` explicit."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    sys = _system(config, f)
    u, v = _imex_hyp(sys, state.u.coeffs, state.v.coeffs, state.t, dt)
    return State.from_arrays(config.domain, u, v, state.t + dt)


def step_etd(state: State, dt: float, config: ProblemConfig, f: Nonlinearity) -> State:
    """One exponential RK2 step (exact for ``f = 0``)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    sys = _system(config, f)
    u, v = _etd_hyp(sys, state.u.coeffs, state.v.coeffs, state.t, dt)
    return State.from_arrays(config.domain, u, v, state.t + dt)


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4) in integrating-factor (Lawson) form
# ----------------------------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _propagator(c: np.ndarray, eps: float, s: float):
    """Closed-form ``exp(sM)`` for ``M = [[0, 1], [-c/eps, -1/eps]]``, per mode.

    ``exp(sM) = e^{as} (C(s) I + S(s) K)`` with ``a = -1/(2 eps)``,
    ``K = M - aI`` and ``K^2 = disc I``.
    """
    a = -0.5 / eps
    disc = a * a - c / eps
    x = disc * s * s
    Ce = np.empty_like(c)
    Se = np.empty_like(c)
    over = x > 1.0
    under = x < -1.0
    mid = ~(over | under)
    if np.any(over):
        b = np.sqrt(disc[over])
        ep, em = np.exp((a + b) * s), np.exp((a - b) * s)
        Ce[over] = 0.5 * (ep + em)
        Se[over] = (ep - em) / (2.0 * b)
    if np.any(under):
        w = np.sqrt(-disc[under])
        ea = np.exp(a * s)
        Ce[under] = ea * np.cos(w * s)
        Se[under] = ea * np.sin(w * s) / w
    if np.any(mid):
        xm = x[mid]
        cs = np.zeros_like(xm)
        ss = np.zeros_like(xm)
        term_c = np.ones_like(xm)
        term_s = np.ones_like(xm)
        for k in range(14):
            cs += term_c
            ss += term_s
            term_c = term_c * xm / ((2 * k + 1) * (2 * k + 2))
            term_s = term_s * xm / ((2 * k + 2) * (2 * k + 3))
        ea = np.exp(a * s)
        Ce[mid] = ea * cs
        Se[mid] = ea * s * ss
    # K = [[-a, 1], [-c/eps, a]]
    return (Ce - a * Se, Se, -c / eps * Se, Ce + a * Se)


class LawsonDormandPrince:
    """Adaptive Dormand-Prince 5(4) on the integrating-factor transformed system.

    The per-mode linear part (``A^2``, damping, ``L A^{-1}``) is propagated
    exactly, so step sizes are set by the nonlinear dynamics only. Extra
    scalar ``quadrature`` components ``q' = G(u, v, t)`` ride along and are
    part of the error control. ``advance`` lands exactly on the end time and
    keeps the step size between calls.
    """

    h_min = 1e-14

    def __init__(self, sys: _System, tol: float, quadrature: Callable | None = None):
        self.sys = sys
        self.tol = tol
        self.quadrature = quadrature
        self.h = None
        self.nsteps = 0
        self.nrejected = 0
        self._k0 = None
        self._k0_key = None
        self._props: dict = {}

    def _prop(self, s):
        key = float(s)
        P = self._props.get(key)
        if P is None:
            if len(self._props) > 4096:
                self._props.clear()
            P = _propagator(self.sys.c, self.sys.eps, s)
            self._props[key] = P
        return P

    def _eval(self, u, v, t):
        sys = self.sys
        pf = sys.pf(u)
        Fv = (sys.forcing(t) - sys.lam * pf) / sys.eps
        q = np.asarray(self.quadrature(u, v, pf), dtype=float) if self.quadrature else np.zeros(0)
        return Fv, q

    def advance(self, u, v, q, t: float, t_end: float):
        tol = self.tol
        key = (t, u.tobytes(), v.tobytes())
        if self._k0 is not None and self._k0_key == key:
            k0 = self._k0
        else:
            k0 = self._eval(u, v, t)
        if self.h is None:
            self.h = min(1e-3, max(t_end - t, 1e-12))
        h = self.h
        while t < t_end:
            # step sizes live on a geometric grid so the propagator cache hits
            hq = 2.0 ** (np.floor(8.0 * np.log2(h)) / 8.0)
            remaining = t_end - t
            if hq >= remaining * (1.0 - 1e-9):
                h_try, last = remaining, True
            else:
                h_try, last = hq, False
            Fs, Qs = [k0[0]], [k0[1]]
            for i in range(1, 7):
                P = self._prop(_C[i] * h_try)
                ui = P[0] * u + P[1] * v
                vi = P[2] * u + P[3] * v
                qi = q.copy()
                for j, aij in enumerate(_A[i]):
                    if aij == 0.0:
                        continue
                    Pj = self._prop((_C[i] - _C[j]) * h_try)
                    ui = ui + (h_try * aij) * (Pj[1] * Fs[j])
                    vi = vi + (h_try * aij) * (Pj[3] * Fs[j])
                    qi = qi + (h_try * aij) * Qs[j]
                Fi, Qi = self._eval(ui, vi, t + _C[i] * h_try)
                Fs.append(Fi)
                Qs.append(Qi)
            u_new, v_new, q_new = ui, vi, qi
            eu = np.zeros_like(u)
            ev = np.zeros_like(v)
            eq = np.zeros_like(q)
            for j, ej in enumerate(_E):
                if ej == 0.0:
                    continue
                Pj = self._prop((1.0 - _C[j]) * h_try)
                eu += ej * (Pj[1] * Fs[j])
                ev += ej * (Pj[3] * Fs[j])
                eq += ej * Qs[j]
            err2 = 0.0
            count = 0
            for e, y0, y1 in ((eu, u, u_new), (ev, v, v_new), (eq, q, q_new)):
                if e.size:
                    sc = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
                    err2 += float(np.sum((h_try * e / sc) ** 2))
                    count += e.size
            err = np.sqrt(err2 / count)
            if not np.isfinite(err):
                err = 1e10
            if err <= 1.0:
                t = t_end if last else t + h_try
                u, v, q = u_new, v_new, q_new
                k0 = (Fs[6], Qs[6])
                self.nsteps += 1
                fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err**-0.2))
                h = max(h, h_try * fac) if last else h_try * fac
            else:
                self.nrejected += 1
                h = h_try * max(0.2, 0.9 * err**-0.2)
                if h < self.h_min:
                    raise StiffnessError(
                        f"step size {h:.3e} fell below {self.h_min:g} at t={t:.6g}; "
                        "reduce n or use the imex/etd scheme"
                    )
        self.h = h
        self._k0, self._k0_key = k0, (t, u.tobytes(), v.tobytes())
        return u, v, q


def _identity_quadrature(sys: _System):
    lam = sys.lam
    g_over_lam = sys.g / lam
    eps = sys.eps

    def G(u, v, pf):
        q1 = float(np.dot((v / lam).ravel(), v.ravel()))
        q2 = (
            eps * q1
            - float(np.dot((lam * u).ravel(), u.ravel()))
            - float(np.dot(pf.ravel(), u.ravel()))
            + float(np.dot(g_over_lam.ravel(), u.ravel()))
        )
        return (q1, q2)

    return G


def step_reference(state: State, dt: float, config: ProblemConfig, f: Nonlinearity, tol: float = 1e-10) -> State:
    """Advance by ``dt`` with adaptive Dormand-Prince substeps."""
    sys = _system(config, f)
    dp = LawsonDormandPrince(sys, tol)
    u, v, _ = dp.advance(state.u.coeffs, state.v.coeffs, np.zeros(0), state.t, state.t + dt)
    return State.from_arrays(config.domain, u, v, state.t + dt)


# ----------------------------------------------------------------------------
# drivers
# ----------------------------------------------------------------------------


def _nsteps(T: float, dt: float) -> int:
    k = int(np.ceil(T / dt - 1e-9))
    return max(k, 0)


def _time_at(t0, k, dt, T, nsteps):
    return t0 + T if k == nsteps else t0 + k * dt


class _Recorder:
    def __init__(self, config, f, observers):
        self.config, self.f, self.observers = config, f, list(observers)
        self.times, self.us, self.vs = [], [], []
        self.diag: dict[str, list] = {}

    def add(self, t, u, v, extra: dict | None = None):
        self.times.append(float(t))
        self.us.append(np.array(u))
        self.vs.append(np.array(v))
        row = dict(extra or {})
        if self.observers:
            st = State.from_arrays(self.config.domain, u, v, t)
            for obs in self.observers:
                row.update(obs(st, self.config, self.f))
        for k, val in row.items():
            self.diag.setdefault(k, []).append(float(val))

    def finish(self, meta) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=np.array(self.times),
            u=np.array(self.us),
            v=np.array(self.vs),
            config=self.config,
            f=self.f,
            diagnostics={k: np.array(v) for k, v in self.diag.items()},
            meta=meta,
        )


def integrate(
    state0: State,
    T: float,
    integrator: IntegratorConfig,
    config: ProblemConfig,
    f: Nonlinearity,
    observers: Sequence[Callable] = (),
) -> TrajectoryRecord:
    """Advance the Galerkin system to ``state0.t + T``.

    The record always carries two running time integrals:
    ``dissipation_integral`` (of ``|u_t|_{V'}^2``) and
    ``second_identity_integral`` (the right-hand side of the ``A^{-1}u``
    identity). The reference scheme integrates them as extra ODE components;
    the fixed-step schemes use the trapezoid rule on every step.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    if state0.n != config.n or state0.domain != config.domain:
        raise ValueError("initial state does not match the problem cutoff/domain")
    sys = _system(config, f)
    u = state0.u.coeffs.copy()
    v = state0.v.coeffs.copy()
    t0 = state0.t
    dt = integrator.dt
    nsteps = _nsteps(T, dt)
    rec = _Recorder(config, f, observers)
    meta = {"scheme": integrator.scheme, "dt": dt, "tol": integrator.tol, "record_every": integrator.record_every}
    D = S = 0.0
    rec.add(t0, u, v, {"dissipation_integral": 0.0, "second_identity_integral": 0.0})
    if nsteps == 0:
        return rec.finish(meta)

    if integrator.scheme == "reference":
        dp = LawsonDormandPrince(sys, integrator.tol, _identity_quadrature(sys))
        q = np.zeros(2)
        t = t0
        for k in range(1, nsteps + 1):
            t1 = _time_at(t0, k, dt, T, nsteps)
            u, v, q = dp.advance(u, v, q, t, t1)
            t = t1
            if k % integrator.record_every == 0 or k == nsteps:
                rec.add(t, u, v, {"dissipation_integral": q[0], "second_identity_integral": q[1]})
        meta.update(nsteps_internal=dp.nsteps, nrejected=dp.nrejected)
        return rec.finish(meta)

    step = _etd_hyp if integrator.scheme == "etd" else _imex_hyp
    G = _identity_quadrature(sys)
    pf = sys.pf(u)
    q = G(u, v, pf)
    t = t0
    for k in range(1, nsteps + 1):
        t1 = _time_at(t0, k, dt, T, nsteps)
        h = t1 - t
        u, v = step(sys, u, v, t, h, pf)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise FloatingPointError(f"non-finite state at t={t1:.6g}")
        pf = sys.pf(u)
        q_new = G(u, v, pf)
        D += 0.5 * h * (q[0] + q_new[0])
        S += 0.5 * h * (q[1] + q_new[1])
        q = q_new
        t = t1
        if k % integrator.record_every == 0 or k == nsteps:
            rec.add(t, u, v, {"dissipation_integral": D, "second_identity_integral": S})
    return rec.finish(meta)


def _fixed_step_drive(sys, u, v, t0, T, dt, record_every, step_h, step_p, parabolic, rec):
    nsteps = _nsteps(T, dt)
    t = t0
    for k in range(1, nsteps + 1):
        t1 = _time_at(t0, k, dt, T, nsteps)
        h = t1 - t
        if parabolic:
            u = step_p(sys, u, t, h)
        else:
            u, v = step_h(sys, u, v, t, h)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite state at t={t1:.6g}")
        t = t1
        if k % record_every == 0 or k == nsteps:
            if parabolic:
                v = sys.drive(u, t) - sys.c * u
            rec.add(t, u, v)
    return rec


def integrate_parabolic(
    u0: SpectralField,
    T: float,
    config: ProblemConfig,
    f: Nonlinearity,
    L0: float | None = None,
    forcing: TrajectoryRecord | Trace | None = None,
    dt: float = 1e-3,
    scheme: str = "etd",
    record_every: int = 1,
    t0: float | None = None,
) -> TrajectoryRecord:
    """Solve ``w_t + A(Aw + f(w)) + L0 A^{-1} w = g + L0 A^{-1} u(t)``, ``w(t0) = u0``.

    With ``L0 = 0`` and no forcing this is the classical Cahn-Hilliard flow.
    ``v`` in the returned record is ``w_t`` evaluated from the equation.
    """
    L0 = config.L0 if L0 is None else float(L0)
    if L0 < 0:
        raise ValueError("L0 must be nonnegative")
    if scheme not in ("etd", "imex"):
        raise ValueError("parabolic scheme must be 'etd' or 'imex'")
    trace = None
    if forcing is not None:
        trace = forcing if isinstance(forcing, Trace) else Trace.from_record(forcing)
    if t0 is None:
        t0 = float(trace.times[0]) if trace is not None else 0.0
    if L0 > 0 and trace is None:
        raise TraceError("L0 > 0 needs a forcing trace u(t)")
    if trace is not None and not trace.covers(t0, t0 + T):
        raise TraceError(f"forcing trace does not cover [{t0}, {t0 + T}]")
    sys = _System(config, f, None, L=L0, trace=trace)
    u = u0.coeffs.copy()
    rec = _Recorder(config, f, ())
    rec.add(t0, u, sys.drive(u, t0) - sys.c * u)
    step_p = _etd_par if scheme == "etd" else _imex_par
    _fixed_step_drive(sys, u, None, t0, T, dt, record_every, None, step_p, True, rec)
    return rec.finish({"scheme": scheme, "dt": dt, "L0": L0, "parabolic": True})


def integrate_auxiliary(
    u_trace: TrajectoryRecord | Trace,
    v0: State,
    L: float,
    T: float,
    config: ProblemConfig,
    f: Nonlinearity,
    integrator: IntegratorConfig | None = None,
) -> TrajectoryRecord:
    """Solve ``eps v_tt + v_t + A(Av + f(v)) + L A^{-1} v = g + L A^{-1} u(t)`` from ``v0``."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    integrator = integrator or IntegratorConfig()
    trace = u_trace if isinstance(u_trace, Trace) else Trace.from_record(u_trace)
    if not trace.covers(v0.t, v0.t + T):
        raise TraceError(f"trace [{trace.times[0]}, {trace.times[-1]}] does not cover [{v0.t}, {v0.t + T}]")
    sys = _System(config, f, config.epsilon, L=L, trace=trace)
    u = v0.u.coeffs.copy()
    v = v0.v.coeffs.copy()
    rec = _Recorder(config, f, ())
    rec.add(v0.t, u, v)
    meta = {"scheme": integrator.scheme, "dt": integrator.dt, "L": float(L), "auxiliary": True}
    if integrator.scheme == "reference":
        dp = LawsonDormandPrince(sys, integrator.tol)
        nsteps = _nsteps(T, integrator.dt)
        t = v0.t
        q = np.zeros(0)
        for k in range(1, nsteps + 1):
            t1 = _time_at(v0.t, k, integrator.dt, T, nsteps)
            u, v, q = dp.advance(u, v, q, t, t1)
            t = t1
            if k % integrator.record_every == 0 or k == nsteps:
                rec.add(t, u, v)
        return rec.finish(meta)
    step_h = _etd_hyp if integrator.scheme == "etd" else _imex_hyp
    _fixed_step_drive(sys, u, v, v0.t, T, integrator.dt, integrator.record_every, step_h, None, False, rec)
    return rec.finish(meta)
