"""Polynomial nonlinearity, its structural constants, and energy functionals."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .spectral import (
    DomainSpec,
    SpectralField,
    eigenvalues,
    gauss_grid,
    projection_plan,
)

__all__ = [
    "AssumptionViolation",
    "AssumptionReport",
    "Nonlinearity",
    "ProblemConfig",
    "validate_assumptions",
    "nonlinear_term",
    "energy",
    "x0_norm",
    "y_functional",
    "lebesgue_power",
]


class AssumptionViolation(ValueError):
    """Raised when a nonlinearity fails one of the structural assumptions.

    ``kind`` is one of ``"f(0)"``, ``"f1"``, ``"delta"``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class Nonlinearity:
    """Polynomial ``f(r) = sum_j c_j r^j`` (constant term first).

    ``F`` is the primitive with ``F(0) = 0``.
    """

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise ValueError("nonlinearity needs a finite 1-D coefficient list")
        c = np.trim_zeros(c, "b")
        self.coeffs = c if c.size else np.zeros(1)
        self.coeffs.setflags(write=False)
        self._d1 = P.polyder(self.coeffs) if self.coeffs.size > 1 else np.zeros(1)
        self._d2 = P.polyder(self.coeffs, 2) if self.coeffs.size > 2 else np.zeros(1)
        self._d3 = P.polyder(self.coeffs, 3) if self.coeffs.size > 3 else np.zeros(1)
        self._F = P.polyint(self.coeffs)
        odd = self.coeffs.copy()
        odd[0::2] = 0.0
        even = self.coeffs.copy()
        even[1::2] = 0.0
        self._odd = odd
        self._even = even if np.any(even) else None

    @classmethod
    def zero(cls) -> "Nonlinearity":
        return cls([0.0])

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def p(self) -> int:
        """Growth exponent ``max(deg - 3, 0)``."""
        return max(self.degree - 3, 0)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def f(self, r):
        return P.polyval(r, self.coeffs)

    def df(self, r):
        return P.polyval(r, self._d1)

    def d2f(self, r):
        return P.polyval(r, self._d2)

    def d3f(self, r):
        return P.polyval(r, self._d3)

    def F(self, r):
        return P.polyval(r, self._F)

    def __eq__(self, other):
        return isinstance(other, Nonlinearity) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Nonlinearity({self.coeffs.tolist()})"


@dataclass(frozen=True)
class ProblemConfig:
    """Physical parameters of ``eps u_tt + u_t + A(Au + f(u)) = g``."""

    epsilon: float
    g: SpectralField
    domain: DomainSpec = DomainSpec(1)
    L: float = 0.0
    L0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.g.domain != self.domain:
            raise ValueError("forcing g lives on a different domain")
        if self.L < 0 or self.L0 < 0:
            raise ValueError("L and L0 must be nonnegative")

    @property
    def n(self) -> int:
        return self.g.n

    @classmethod
    def simple(cls, n: int, epsilon: float = 1.0, dim: int = 1, g=None, **kw) -> "ProblemConfig":
        domain = DomainSpec(dim)
        if g is None:
            g = SpectralField.zeros(domain, n)
        elif not isinstance(g, SpectralField):
            g = SpectralField(domain, g)
        return cls(epsilon=epsilon, g=g, domain=domain, **kw)

    def with_(self, **kw) -> "ProblemConfig":
        fields = dict(epsilon=self.epsilon, g=self.g, domain=self.domain, L=self.L, L0=self.L0)
        fields.update(kw)
        return ProblemConfig(**fields)


# ----------------------------------------------------------------------------
# structural constants
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionReport:
    degree: int
    p: int
    lam: float
    delta: float
    M: float
    kappa: float
    kappa_exact: float
    F_shift: float
    kappa_margin: float
    coercivity_kappa3: float
    coercivity_c: float
    lambda1: float
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _poly_inf(c: np.ndarray) -> float:
    """Global infimum over the real line of the polynomial ``c`` (constant first)."""
    c = np.trim_zeros(np.asarray(c, dtype=float), "b")
    if c.size == 0:
        return 0.0
    deg = c.size - 1
    if deg == 0:
        return float(c[0])
    if deg % 2 == 1 or c[-1] < 0:
        return -np.inf
    crit = P.polyroots(P.polyder(c))
    real = crit.real[np.abs(crit.imag) <= 1e-8 * (1.0 + np.abs(crit))]
    if real.size == 0:
        real = np.array([0.0])
    # one Newton polish on each critical point
    d1, d2 = P.polyder(c), P.polyder(c, 2)
    h = P.polyval(real, d2)
    ok = np.abs(h) > 1e-300
    real = np.where(ok, real - np.divide(P.polyval(real, d1), h, where=ok, out=np.zeros_like(real)), real)
    return float(np.min(P.polyval(real, c)))


def _nonneg(c: np.ndarray, slack: float) -> bool:
    return _poly_inf(c) >= -slack


def validate_assumptions(f: Nonlinearity, lambda1: float, volume: float | None = None) -> AssumptionReport:
    """Certify the growth/dissipativity constants of a polynomial ``f``.

    Returns ``lam`` (one-sided Lipschitz constant), the largest ``delta``
    with ``f'(r) + lam >= delta |r|^{p+2}``, ``M`` bounding ``|f'''|`` by
    ``M (1 + |r|^p)``, and ``kappa < lambda1`` with ``F(r) + F_shift >= -kappa r^2 / 2``.
    ``F_shift`` is zero whenever the unshifted bound already holds with some
    ``kappa < lambda1``.

    Raises
    ------
    AssumptionViolation
        ``f(0) != 0``, the liminf condition on ``f(r)/r`` fails, or ``p > 2``
        with ``delta = 0``.
    """
    c = f.coeffs
    if c[0] != 0.0:
        raise AssumptionViolation("f(0)", f"f(0) = {c[0]!r}, must vanish")
    d = f.degree
    p = f.p

    # liminf_{|r|->inf} f(r)/r > -lambda1
    if d >= 2:
        if d % 2 == 0:
            raise AssumptionViolation(
                "f1", f"even degree {d}: f(r)/r is unbounded below as r -> {'-' if c[-1] > 0 else '+'}inf"
            )
        if c[-1] < 0:
            raise AssumptionViolation("f1", "negative leading coefficient: f(r)/r -> -inf")
        liminf = np.inf
    else:
        liminf = c[1] if d == 1 else 0.0
    if not liminf > -lambda1:
        raise AssumptionViolation("f1", f"liminf f(r)/r = {liminf} is not > -lambda1 = {-lambda1}")

    scale = 1.0 + float(np.max(np.abs(c)))
    slack = 1e-13 * scale

    d1 = P.polyder(c) if d >= 1 else np.zeros(1)
    lam = max(0.0, -_poly_inf(d1))

    # largest delta: f'(r) + lam - delta r^{p+2} >= 0; p + 2 = d - 1 is even for d >= 3
    delta = 0.0
    if d >= 3:
        base = P.polyadd(d1, [lam])
        mono = np.zeros(p + 3)
        mono[p + 2] = 1.0
        lo, hi = 0.0, d * c[-1]
        if _nonneg(P.polysub(base, hi * mono), slack):
            lo = hi
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if _nonneg(P.polysub(base, mid * mono), slack):
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-14 * (1.0 + hi):
                    break
        delta = lo
    if p > 2 and delta <= 0.0:
        raise AssumptionViolation("delta", f"p = {p} > 2 requires delta > 0")

    # |f'''(r)| <= M (1 + |r|^p) from coefficient bounds
    M = float(np.sum(np.abs(P.polyder(c, 3)))) if d >= 3 else 0.0

    # kappa: inf of 2F(r)/r^2 is the unshifted constant
    Fc = P.polyint(c)
    q = 2.0 * Fc[2:] if Fc.size > 2 else np.zeros(1)
    kappa_exact = max(0.0, -_poly_inf(q))
    if kappa_exact < lambda1:
        kappa, F_shift = kappa_exact, 0.0
    else:
        # higher-degree terms dominate at infinity, so any kappa > kappa_asym works with a shift
        kappa_asym = max(0.0, -c[1]) if d == 1 else 0.0
        kappa = 0.5 * (kappa_asym + lambda1)
        F_shift = max(0.0, -_poly_inf(P.polyadd(Fc, [0.0, 0.0, 0.5 * kappa])))

    # ||u||_V^2 + (f(u),u) >= kappa3 ||u||_V^2 - c  via  f(r) r >= -(lambda1 - eta) r^2 - c'
    kf1 = max(0.0, -liminf) if np.isfinite(liminf) else 0.0
    eta = 0.5 * (lambda1 - kf1)
    fr = P.polymulx(c)
    cprime = max(0.0, -_poly_inf(P.polyadd(fr, [0.0, 0.0, lambda1 - eta])))
    kappa3 = eta / lambda1
    if volume is None:
        volume = np.pi**lambda1  # on (0, pi)^d the first eigenvalue equals d

    return AssumptionReport(
        degree=d,
        p=p,
        lam=float(lam),
        delta=float(delta),
        M=M,
        kappa=float(kappa),
        kappa_exact=float(kappa_exact),
        F_shift=float(F_shift),
        kappa_margin=float(lambda1 - kappa),
        coercivity_kappa3=float(kappa3),
        coercivity_c=float(cprime * volume),
        lambda1=float(lambda1),
        method="roots",
    )


# ----------------------------------------------------------------------------
# nonlinear term and functionals
# ----------------------------------------------------------------------------


def _nonlinear_coeffs(u: np.ndarray, f: Nonlinearity) -> np.ndarray:
    if f.is_zero:
        return np.zeros_like(u)
    if f.degree == 1:
        return f.coeffs[1] * u
    plan = projection_plan(u.ndim, u.shape[0], f.degree)
    vals = plan.values(u)
    out = plan.project_odd(P.polyval(vals, f._odd))
    if f._even is not None:
        out = out + plan.project_even(P.polyval(vals, f._even))
    return out


def nonlinear_term(u: SpectralField, f: Nonlinearity, n: int | None = None) -> SpectralField:
    """``P_n f(u)``, exact up to rounding for polynomial ``f``."""
    n = u.n if n is None else n
    if n != u.n:
        u = u.resized(n)
    return SpectralField(u.domain, _nonlinear_coeffs(u.coeffs, f))


def _grid_for(u: np.ndarray, power: int):
    return gauss_grid(u.ndim, u.shape[0], max(power, 2) * u.shape[0])


def lebesgue_power(u: np.ndarray, q: float) -> float:
    """``int |u|^q`` by Gauss-Legendre quadrature (exact to rounding for even integer q)."""
    if not np.any(u):
        return 0.0
    qi = int(np.ceil(q))
    grid = _grid_for(u, qi if float(q).is_integer() else 4 * qi)
    return grid.integrate(np.abs(grid.values(u)) ** q)


def potential_integral(u: np.ndarray, f: Nonlinearity) -> float:
    """``int F(u)`` with ``F(0) = 0``."""
    if f.is_zero or not np.any(u):
        return 0.0
    grid = _grid_for(u, f.degree + 1)
    return grid.integrate(f.F(grid.values(u)))


def _norms(u, v, domain):
    lam = eigenvalues(domain, u.shape[0])
    return lam, float(np.dot((lam * u).ravel(), u.ravel())), float(np.dot((v / lam).ravel(), v.ravel()))


def _energy_raw(u, v, eps, g, f, domain) -> float:
    lam, vu, vv = _norms(u, v, domain)
    return 0.5 * (vu + eps * vv) + potential_integral(u, f) - float(np.dot((g / lam).ravel(), u.ravel()))


def _x0_raw(u, v, eps, f, domain) -> float:
    _, vu, vv = _norms(u, v, domain)
    return vu + eps * vv + lebesgue_power(u, f.p + 4)


def energy(state, config: ProblemConfig, f: Nonlinearity) -> float:
    """Lyapunov energy ``1/2(|A^{1/2}u|^2 + eps|A^{-1/2}u_t|^2) + int F(u) - <g, A^{-1}u>``."""
    return _energy_raw(state.u.coeffs, state.v.coeffs, config.epsilon, config.g.coeffs, f, config.domain)


def x0_norm(state, config: ProblemConfig, f: Nonlinearity) -> float:
    """Squared energy-space metric ``|U|_{V0}^2 + |u|_{L^{p+4}}^{p+4}``."""
    return _x0_raw(state.u.coeffs, state.v.coeffs, config.epsilon, f, config.domain)


def y_functional(state, config: ProblemConfig, f: Nonlinearity, alpha: float, cstar: float) -> float:
    """Energy plus ``alpha`` times the bracket of the ``A^{-1}u`` identity plus ``cstar (1 + |g|^2)``."""
    u, v = state.u.coeffs, state.v.coeffs
    lam = eigenvalues(config.domain, u.shape[0])
    bracket = config.epsilon * float(np.dot((v / lam).ravel(), u.ravel())) + 0.5 * float(
        np.dot((u / lam).ravel(), u.ravel())
    )
    g2 = float(np.dot(config.g.coeffs.ravel(), config.g.coeffs.ravel()))
    return energy(state, config, f) + alpha * bracket + cstar * (1.0 + g2)
