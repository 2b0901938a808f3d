"""Truncated eigenfunction calculus for self-adjoint operators with compact resolvent.

An operator is represented only through its orthonormal eigenpairs
``(lambda_j, e_j)``, truncated to the first ``N`` modes.  Fractional powers,
resolvents and the associated graph and dual norms then act diagonally on
coefficient vectors.  Each basis also carries a collocation grid with positive
quadrature weights on which the discrete orthonormality ``(e_i, e_j) = delta_ij``
holds exactly, so that nonlinear terms can be evaluated pointwise and projected
back.

The concrete bases are Laplacian eigenfunctions on intervals and rectangles
with homogeneous Dirichlet or Neumann conditions, sampled on a midpoint grid
(cosine and sine transforms of type II).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BasisMismatchError, ConfigError

__all__ = [
    "EigenBasis",
    "FractionalOperator",
    "Field",
    "Norms",
    "make_interval_basis",
    "make_rectangle_basis",
    "apply_fractional",
    "resolvent_apply",
    "norms",
    "inner",
    "mean_and_poincare",
    "embedding_constant",
    "transfer_matrix",
]

BOUNDARY_KINDS = ("dirichlet", "neumann")


def _axis_modes(boundary, n, length, m):
    """Eigenpairs of -d^2/dx^2 on (0, length) sampled at ``m`` midpoints."""
    x = (np.arange(m) + 0.5) * length / m
    if boundary == "neumann":
        k = np.arange(n)
        vals = (k * np.pi / length) ** 2
        e = np.sqrt(2.0 / length) * np.cos(np.outer(x, k) * np.pi / length)
        e[:, 0] = 1.0 / np.sqrt(length)
    else:
        k = np.arange(1, n + 1)
        vals = (k * np.pi / length) ** 2
        e = np.sqrt(2.0 / length) * np.sin(np.outer(x, k) * np.pi / length)
    return x, np.full(m, length / m), vals, e, k


def _check_boundary(boundary):
    kind = str(boundary).lower()
    if kind not in BOUNDARY_KINDS:
        raise ConfigError(f"unknown boundary kind {boundary!r}; expected one of {BOUNDARY_KINDS}")
    return kind


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Orthonormal eigenbasis with its collocation grid.

    Attributes
    ----------
    boundary : str
        ``"dirichlet"`` or ``"neumann"``.
    lengths : tuple of float
        Side lengths of the interval or rectangle.
    eigenvalues : ndarray, shape (N,)
        Nondecreasing eigenvalues.
    points : ndarray, shape (M, dim)
        Collocation points.
    weights : ndarray, shape (M,)
        Positive quadrature weights.
    synthesis : ndarray, shape (M, N)
        ``synthesis[k, j] = e_j(points[k])``.
    wavenumbers : ndarray, shape (N, dim)
        Axis mode numbers of each eigenfunction.
    """

    boundary: str
    lengths: tuple
    eigenvalues: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    synthesis: np.ndarray
    wavenumbers: np.ndarray

    def __post_init__(self):
        for name in ("eigenvalues", "points", "weights", "synthesis", "wavenumbers"):
            getattr(self, name).setflags(write=False)
        analysis = self.synthesis.T * self.weights
        analysis.setflags(write=False)
        object.__setattr__(self, "analysis", analysis)

    @property
    def n_modes(self):
        return self.eigenvalues.shape[0]

    @property
    def spatial_dim(self):
        return len(self.lengths)

    @property
    def n_points(self):
        return self.weights.shape[0]

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def key(self):
        """Hashable identity used for basis compatibility checks."""
        return (self.boundary, self.lengths, self.n_modes, self.n_points)

    @property
    def grid_key(self):
        return (self.lengths, self.n_points)

    def synthesize(self, coefficients):
        """Grid values of ``sum_j c_j e_j``; works on stacked coefficient rows."""
        return np.asarray(coefficients) @ self.synthesis.T

    def analyze(self, values):
        """Quadrature projection ``(v, e_j)`` of grid values."""
        return np.asarray(values) @ self.analysis.T

    def integrate(self, values):
        return np.asarray(values) @ self.weights

    def __repr__(self):
        return (f"EigenBasis({self.boundary}, lengths={self.lengths}, "
                f"n_modes={self.n_modes}, n_points={self.n_points})")


def make_interval_basis(boundary, n_modes, length=1.0, oversample=2):
    """Laplacian eigenbasis on ``(0, length)``.

    Neumann: ``lambda_j = ((j-1) pi / L)^2`` with constant ``e_1``.
    Dirichlet: ``lambda_j = (j pi / L)^2``.  The midpoint grid has
    ``oversample * n_modes`` points (at least twice the mode count).
    """
    kind = _check_boundary(boundary)
    n_modes = int(n_modes)
    if n_modes < 1:
        raise ConfigError(f"n_modes must be a positive integer, got {n_modes}")
    if not length > 0:
        raise ConfigError(f"domain length must be positive, got {length}")
    if oversample < 2:
        raise ConfigError("grid oversampling factor must be at least 2")
    m = int(np.ceil(oversample * n_modes))
    x, w, vals, e, k = _axis_modes(kind, n_modes, float(length), m)
    return EigenBasis(kind, (float(length),), vals, x[:, None], w, e, k[:, None])


def make_rectangle_basis(boundary, n_modes, lengths=(1.0, 1.0), oversample=2):
    """Laplacian eigenbasis on a rectangle, keeping the ``n_modes`` lowest modes.

    Eigenfunctions are tensor products of the interval ones and eigenvalues
    are sums; modes are sorted nondecreasingly (ties broken by wavenumber).
    Each axis carries ``oversample * n_modes`` midpoints.
    """
    kind = _check_boundary(boundary)
    n_modes = int(n_modes)
    if n_modes < 1:
        raise ConfigError(f"n_modes must be a positive integer, got {n_modes}")
    lengths = tuple(float(v) for v in lengths)
    if len(lengths) != 2 or min(lengths) <= 0:
        raise ConfigError(f"rectangle needs two positive side lengths, got {lengths}")
    if oversample < 2:
        raise ConfigError("grid oversampling factor must be at least 2")
    m = int(np.ceil(oversample * n_modes))
    x, wx, vx, ex, kx = _axis_modes(kind, n_modes, lengths[0], m)
    y, wy, vy, ey, ky = _axis_modes(kind, n_modes, lengths[1], m)

    total = (vx[:, None] + vy[None, :]).ravel()
    ia, ib = np.unravel_index(np.arange(total.size), (n_modes, n_modes))
    order = np.lexsort((ib, ia, total))[:n_modes]
    ia, ib = ia[order], ib[order]

    X, Y = np.meshgrid(x, y, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(wx, wy).ravel()
    synth = (ex[:, None, ia] * ey[None, :, ib]).reshape(m * m, n_modes)
    wavenumbers = np.column_stack([kx[ia], ky[ib]])
    return EigenBasis(kind, lengths, total[order], points, weights, synth, wavenumbers)


def transfer_matrix(to_basis, from_basis):
    """Galerkin projection matrix ``P[i, j] = (e^from_j, e^to_i)`` on the shared grid."""
    if to_basis is from_basis or to_basis.key == from_basis.key:
        return np.eye(to_basis.n_modes)
    if to_basis.grid_key != from_basis.grid_key or not np.array_equal(to_basis.points, from_basis.points):
        raise BasisMismatchError("bases live on different collocation grids")
    return to_basis.analysis @ from_basis.synthesis


@dataclass(frozen=True, eq=False)
class Field:
    """Element of the truncated space, stored as eigen-coefficients."""

    basis: EigenBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.basis.n_modes,):
            raise BasisMismatchError(
                f"expected {self.basis.n_modes} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, basis):
        return cls(basis, np.zeros(basis.n_modes))

    @classmethod
    def eigenmode(cls, basis, j, amplitude=1.0):
        """``amplitude * e_j`` with ``j`` counted from 1."""
        if not 1 <= j <= basis.n_modes:
            raise ValueError(f"mode index {j} outside 1..{basis.n_modes}")
        c = np.zeros(basis.n_modes)
        c[j - 1] = amplitude
        return cls(basis, c)

    @classmethod
    def from_grid(cls, basis, values):
        return cls(basis, basis.analyze(values))

    def grid_values(self):
        return self.basis.synthesize(self.coefficients)

    def _same(self, other):
        if self.basis.key != other.basis.key:
            raise BasisMismatchError("fields live in different bases")

    def __add__(self, other):
        self._same(other)
        return Field(self.basis, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._same(other)
        return Field(self.basis, self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return Field(self.basis, float(scalar) * self.coefficients)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.basis, -self.coefficients)

    def __repr__(self):
        return f"Field({self.basis!r}, coefficients={self.coefficients!r})"


@dataclass(frozen=True, eq=False)
class FractionalOperator:
    """Fractional power ``A^exponent`` of the operator diagonalized by ``basis``."""

    basis: EigenBasis
    exponent: float

    def __post_init__(self):
        if not (np.isfinite(self.exponent) and self.exponent > 0):
            raise ConfigError(
                f"operator exponent must be a positive real number, got {self.exponent}")
        object.__setattr__(self, "exponent", float(self.exponent))

    def multipliers(self, power=1.0):
        """``lambda_j ** (power * exponent)`` with ``0 ** r = 0``."""
        lam = self.basis.eigenvalues
        r = power * self.exponent
        out = np.zeros_like(lam)
        pos = lam > 0
        out[pos] = lam[pos] ** r
        return out

    def scaled(self, factor):
        """The operator with exponent multiplied by ``factor`` (e.g. 2 for ``A^{2 rho}``)."""
        return FractionalOperator(self.basis, factor * self.exponent)

    def _check(self, v):
        if v.basis is not self.basis and v.basis.key != self.basis.key:
            raise BasisMismatchError(
                f"field basis {v.basis!r} does not match operator basis {self.basis!r}")


def apply_fractional(op, v):
    """``A^r v``: multiply coefficient ``j`` by ``lambda_j ** r``."""
    op._check(v)
    return Field(v.basis, op.multipliers() * v.coefficients)


def resolvent_apply(op, eps, v):
    """``(eps I + A^r)^{-1} v`` for ``eps > 0``."""
    if not eps > 0:
        raise ValueError(f"resolvent shift must be positive, got {eps}")
    op._check(v)
    return Field(v.basis, v.coefficients / (eps + op.multipliers()))


class Norms(NamedTuple):
    h_norm: float
    graph_norm: float
    dual_norm: float
    seminorm: float


def norms(v, op):
    """H norm, graph norm of ``D(A^r)``, its spectral dual norm and ``|A^r v|``."""
    op._check(v)
    c2 = v.coefficients ** 2
    m2 = op.multipliers(2.0)
    return Norms(
        float(np.sqrt(c2.sum())),
        float(np.sqrt(((1.0 + m2) * c2).sum())),
        float(np.sqrt((c2 / (1.0 + m2)).sum())),
        float(np.sqrt((m2 * c2).sum())),
    )


def inner(v, w):
    """H inner product of two fields in the same basis."""
    v._same(w)
    return float(v.coefficients @ w.coefficients)


def _has_constant_ground_state(basis):
    if basis.eigenvalues[0] != 0.0:
        return False
    e1 = basis.synthesis[:, 0]
    return bool(np.allclose(e1, e1[0], rtol=1e-12, atol=0.0))


def mean_and_poincare(v, op):
    """Mean value of ``v`` and the ratio ``|v - mean| / |A^r v|``.

    Only meaningful when ``lambda_1 = 0`` with a constant first eigenfunction.
    The ratio is 0 when the zero-mean part vanishes; in the truncation it is
    bounded by ``lambda_2 ** -r``.
    """
    op._check(v)
    if not _has_constant_ground_state(op.basis):
        raise ValueError("mean/Poincare split needs lambda_1 = 0 with a constant eigenfunction")
    c = v.coefficients
    mean = c[0] / np.sqrt(op.basis.volume)
    rest = np.sqrt((c[1:] ** 2).sum())
    if rest == 0.0:
        return float(mean), 0.0
    semi = np.sqrt((op.multipliers(2.0) * c ** 2).sum())
    return float(mean), float(rest / semi)


def embedding_constant(basis, r1, r2):
    """Smallest ``C`` with ``|v|_{D(A^r1)} <= C |v|_{D(A^r2)}`` on the truncation."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    lo = FractionalOperator(basis, r1).multipliers(2.0)
    hi = FractionalOperator(basis, r2).multipliers(2.0)
    return float(np.sqrt(np.max((1.0 + lo) / (1.0 + hi))))
