"""Dirichlet sine basis on (0, pi)^d.

Everything that touches the operator ``A = -Laplacian`` (with ``u = Lap u = 0``
on the boundary) lives here: eigenvalues, fractional powers, Sobolev-scale
norms, Galerkin projections, and the grid transforms used to evaluate
nonlinearities pseudo-spectrally.

Coefficients are stored against the L2-orthonormal eigenfunctions

    1D:  e_k(x)    = sqrt(2/pi) sin(k x),                  k = 1..n
    2D:  e_jk(x,y) = (2/pi) sin(j x) sin(k y),             j, k = 1..n

as arrays of shape ``(n,)`` or ``(n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

__all__ = [
    "DomainSpec",
    "SpectralField",
    "eigenvalue",
    "eigenvalues",
    "apply_power",
    "sobolev_norm",
    "project",
    "to_grid",
    "from_grid",
    "grid_points",
    "GaussGrid",
    "gauss_grid",
    "ProjectionPlan",
    "projection_plan",
]

_NORM = np.sqrt(2.0 / np.pi)


@dataclass(frozen=True)
class DomainSpec:
    """The box (0, pi)^dim. Only ``dim`` varies."""

    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim!r}")

    @property
    def length(self) -> float:
        return np.pi

    @property
    def lambda1(self) -> float:
        return float(self.dim)

    @property
    def volume(self) -> float:
        return np.pi**self.dim


def eigenvalue(domain: DomainSpec, idx) -> float:
    """Eigenvalue of ``A`` for mode ``idx`` (int in 1D, pair in 2D)."""
    ks = (idx,) if np.isscalar(idx) else tuple(idx)
    if len(ks) != domain.dim:
        raise ValueError(f"mode index {idx!r} does not match dimension {domain.dim}")
    if any(int(k) != k or k < 1 for k in ks):
        raise ValueError(f"mode index components must be positive integers, got {idx!r}")
    return float(sum(int(k) ** 2 for k in ks))


@lru_cache(maxsize=None)
def _eigenvalues(dim: int, n: int) -> np.ndarray:
    k2 = np.arange(1, n + 1, dtype=float) ** 2
    lam = k2 if dim == 1 else k2[:, None] + k2[None, :]
    lam.setflags(write=False)
    return lam


def eigenvalues(domain: DomainSpec, n: int) -> np.ndarray:
    """All eigenvalues up to cutoff ``n`` per axis, shaped like a coefficient array."""
    return _eigenvalues(domain.dim, int(n))


class SpectralField:
    """Immutable coefficient array on a :class:`DomainSpec`.

    Supports ``+``, ``-``, scalar ``*`` so test code and small scripts can
    build fields naturally; the integrators work on raw arrays.
    """

    __slots__ = ("domain", "coeffs")

    def __init__(self, domain: DomainSpec, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.ndim != domain.dim or len(set(coeffs.shape)) != 1 or coeffs.shape[0] < 1:
            raise ValueError(
                f"coefficient array of shape {coeffs.shape} is not a square "
                f"{domain.dim}-D mode array"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, domain: DomainSpec, n: int) -> "SpectralField":
        return cls(domain, np.zeros((n,) * domain.dim))

    @classmethod
    def mode(cls, domain: DomainSpec, n: int, idx, amplitude: float = 1.0) -> "SpectralField":
        """``amplitude * e_idx`` with cutoff ``n``."""
        eigenvalue(domain, idx)
        c = np.zeros((n,) * domain.dim)
        ks = (idx,) if np.isscalar(idx) else tuple(idx)
        c[tuple(k - 1 for k in ks)] = amplitude
        return cls(domain, c)

    def _check(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.domain != self.domain or other.n != self.n:
            raise ValueError("fields live on different domains or cutoffs")
        return None

    def __add__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other):
        bad = self._check(other)
        if bad is NotImplemented:
            return bad
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.domain, -self.coeffs)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return SpectralField(self.domain, float(a) * self.coeffs)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.coeffs.shape == other.coeffs.shape
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    def __hash__(self):
        return hash((self.domain, self.coeffs.tobytes()))

    def __repr__(self):
        return f"SpectralField(dim={self.domain.dim}, n={self.n})"

    def resized(self, m: int) -> "SpectralField":
        """Truncate or zero-pad to cutoff ``m`` per axis."""
        c = np.zeros((m,) * self.domain.dim)
        k = min(m, self.n)
        c[(slice(0, k),) * self.domain.dim] = self.coeffs[(slice(0, k),) * self.domain.dim]
        return SpectralField(self.domain, c)

    def l2_inner(self, other: "SpectralField") -> float:
        self._check(other)
        return _fsum_dot(self.coeffs, other.coeffs)


def _fsum_dot(a: np.ndarray, b: np.ndarray) -> float:
    # np.dot on raveled float64 arrays has a fixed reduction order for a fixed shape
    return float(np.dot(a.ravel(), b.ravel()))


def apply_power(field: SpectralField, s: float) -> SpectralField:
    """``A^s field``; coefficient ``a_k -> lambda_k^s a_k``."""
    if s == 0:
        return field
    lam = eigenvalues(field.domain, field.n)
    return SpectralField(field.domain, lam**s * field.coeffs)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """``|| A^{s/2} field ||_{L2}`` (s=1: V norm, s=-1: V' norm, s=2: H^2 norm)."""
    lam = eigenvalues(field.domain, field.n)
    return float(np.sqrt(_fsum_dot(lam**s, field.coeffs**2)))


def project(field: SpectralField, m: int) -> SpectralField:
    """Orthogonal projection onto the first ``m`` modes per axis (cutoff kept)."""
    if m > field.n:
        raise ValueError(f"cannot project onto {m} modes, field has only {field.n}")
    if m == field.n:
        return field
    c = np.zeros_like(field.coeffs)
    sl = (slice(0, m),) * field.domain.dim
    c[sl] = field.coeffs[sl]
    return SpectralField(field.domain, c)


# ----------------------------------------------------------------------------
# uniform interior grids (DST-I)
# ----------------------------------------------------------------------------


def grid_points(npts: int) -> np.ndarray:
    """Interior nodes ``j pi / (npts + 1)``, ``j = 1..npts``."""
    return np.arange(1, npts + 1) * (np.pi / (npts + 1))


def _synth(coeffs: np.ndarray, npts: int) -> np.ndarray:
    """Sine synthesis onto ``npts`` interior nodes per axis (npts >= n)."""
    dim = coeffs.ndim
    n = coeffs.shape[0]
    if npts < n:
        raise ValueError(f"grid of {npts} points cannot represent {n} modes")
    padded = np.zeros((npts,) * dim)
    padded[(slice(0, n),) * dim] = coeffs
    return sfft.dstn(padded, type=1, axes=tuple(range(dim))) * (_NORM / 2.0) ** dim


def _analyze(values: np.ndarray, n: int) -> np.ndarray:
    dim = values.ndim
    npts = values.shape[0]
    b = sfft.dstn(values, type=1, axes=tuple(range(dim))) * (1.0 / ((npts + 1) * _NORM)) ** dim
    return np.ascontiguousarray(b[(slice(0, n),) * dim])


def to_grid(field: SpectralField, oversample: int = 2) -> np.ndarray:
    """Point values on the uniform interior grid of ``oversample * n`` nodes per axis."""
    if int(oversample) != oversample or oversample < 1:
        raise ValueError("oversample must be a positive integer")
    return _synth(field.coeffs, int(oversample) * field.n)


def from_grid(values, domain: DomainSpec, n: int) -> SpectralField:
    """Inverse of :func:`to_grid`: discrete sine analysis truncated to ``n`` modes."""
    values = np.asarray(values, dtype=float)
    if values.ndim != domain.dim or len(set(values.shape)) != 1:
        raise ValueError(f"grid of shape {values.shape} does not match a {domain.dim}-D square grid")
    if values.shape[0] < n:
        raise ValueError(f"grid of {values.shape[0]} points per axis cannot resolve {n} modes")
    return SpectralField(domain, _analyze(values, n))


# ----------------------------------------------------------------------------
# exact projection of polynomial images P_n f(u)
# ----------------------------------------------------------------------------


class ProjectionPlan:
    """Exact ``P_n p(u)`` for polynomials ``p`` of degree ``<= degree``.

    With ``u`` of sine-degree ``n``, odd powers of ``u`` are sine series and
    even powers are cosine series (per axis) of degree ``<= degree * n``.
    Odd part: DST-I on interior nodes. Even part: DCT-I on the same nodes
    plus the endpoints, followed by the exact cosine-to-sine Gram matrix.
    """

    def __init__(self, dim: int, n: int, degree: int):
        self.dim, self.n, self.degree = dim, n, max(int(degree), 1)
        self.intervals = self.degree * n + 2
        self.npts = self.intervals - 1
        M = self.intervals
        k = np.arange(1, n + 1, dtype=float)[:, None]
        m = np.arange(0, M + 1, dtype=float)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            T = k * (1.0 - (-1.0) ** (k + m)) / (k**2 - m**2)
        T[k.astype(int) == m.astype(int)] = 0.0
        # cosine coefficients come out of dct as (2c_0, c_1, .., c_{M-1}, 2c_M) * M
        scale = np.full(M + 1, 1.0 / M)
        scale[0] = scale[-1] = 0.5 / M
        self._cos2sin = _NORM * T * scale[None, :]

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return _synth(coeffs, self.npts)

    def project_odd(self, values: np.ndarray) -> np.ndarray:
        return _analyze(values, self.n)

    def project_even(self, values: np.ndarray) -> np.ndarray:
        full = np.pad(values, 1)
        c = sfft.dctn(full, type=1, axes=tuple(range(self.dim)))
        if self.dim == 1:
            return self._cos2sin @ c
        return self._cos2sin @ c @ self._cos2sin.T


@lru_cache(maxsize=64)
def projection_plan(dim: int, n: int, degree: int) -> ProjectionPlan:
    return ProjectionPlan(dim, n, degree)


# ----------------------------------------------------------------------------
# Gauss-Legendre quadrature for integral functionals
# ----------------------------------------------------------------------------


class GaussGrid:
    """Tensor Gauss-Legendre nodes on (0, pi)^dim with synthesis matrices.

    ``values`` and ``gradient`` evaluate a coefficient array at the nodes;
    ``integrate`` applies the weights. With ``points`` comfortably above the
    highest frequency of the integrand the rule is exact to rounding.
    """

    def __init__(self, dim: int, n: int, points: int):
        self.dim, self.n, self.points = dim, n, points
        s, w = np.polynomial.legendre.leggauss(points)
        self.x = 0.5 * np.pi * (s + 1.0)
        self.w = 0.5 * np.pi * w
        k = np.arange(1, n + 1, dtype=float)
        self.S = _NORM * np.sin(np.outer(self.x, k))
        self.D = _NORM * k[None, :] * np.cos(np.outer(self.x, k))
        self.weights = self.w if dim == 1 else np.outer(self.w, self.w)

    def values(self, coeffs: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return self.S @ coeffs
        return self.S @ coeffs @ self.S.T

    def gradient(self, coeffs: np.ndarray) -> list[np.ndarray]:
        if self.dim == 1:
            return [self.D @ coeffs]
        return [self.D @ coeffs @ self.S.T, self.S @ coeffs @ self.D.T]

    def integrate(self, nodal: np.ndarray) -> float:
        return float(np.sum(self.weights * nodal))

    def basis_matrix(self) -> np.ndarray:
        """Rows: nodes (raveled), columns: modes (raveled)."""
        if self.dim == 1:
            return self.S
        return np.kron(self.S, self.S)


@lru_cache(maxsize=64)
def gauss_grid(dim: int, n: int, max_frequency: int) -> GaussGrid:
    """Grid resolving integrands of trigonometric degree ``max_frequency``."""
    return GaussGrid(dim, n, int(max_frequency) + 24)
