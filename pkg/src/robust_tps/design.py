"""Design matrices for the finite-dimensional thin-plate problem.

The fitted function lives in the span of ``n`` radial kernels centred at the
data plus ``M`` polynomials, with the kernel coefficients constrained to be
orthogonal to the polynomials at the data. This module builds the kernel
matrix ``omega``, the polynomial matrix ``phi`` and an orthonormal basis
``q`` for the null space of ``phi.T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, qr
from scipy.spatial.distance import cdist, pdist

from .basis import TpsBasis
from .errors import DimensionError, DuplicatePoints, RankDeficient

DUPLICATE_RTOL = 1e-12
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        y = np.asarray(self.responses, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise DimensionError("points must be a non-empty (n, d) array")
        if y.shape[0] != pts.shape[0]:
            raise DimensionError(
                f"{pts.shape[0]} points but {y.shape[0]} responses")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(y))):
            raise ValueError("points and responses must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class MeshStats:
    h_min: float
    n: int
    rank_phi: int


@dataclass(frozen=True, eq=False)
class DesignMatrices:
    """Kernel/polynomial design at a fixed set of points.

    Besides ``omega``, ``phi`` and ``q`` this carries the eigendecomposition
    of the reduced penalty ``q.T @ omega @ q = V diag(pen_eigvals) V.T`` and
    ``pen_basis = q @ V``; the solver works in that basis.
    """

    basis: TpsBasis
    points: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    q: np.ndarray
    q_range: np.ndarray
    r_phi: np.ndarray
    pen_eigvals: np.ndarray
    pen_basis: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def M(self) -> int:
        return self.basis.M


def kernel_matrix(basis: TpsBasis, x, centers) -> np.ndarray:
    """``eta(||x_i - c_j||)`` for all rows of ``x`` and ``centers``."""
    return basis.kernel(cdist(np.atleast_2d(x), np.atleast_2d(centers)))


def _phi_rank(phi: np.ndarray) -> int:
    sv = np.linalg.svd(phi, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _min_distance(points: np.ndarray) -> tuple[float, float]:
    dist = pdist(points)
    return float(dist.min()), float(dist.max())


def mesh_stats(data: Dataset, m: int = 2) -> MeshStats:
    """Minimum separation of the design and the rank of its polynomial matrix."""
    if data.n < 2:
        raise DimensionError("mesh statistics need at least two points")
    h_min, _ = _min_distance(data.points)
    phi = TpsBasis(m, data.d).poly(data.points)
    return MeshStats(h_min=h_min, n=data.n, rank_phi=_phi_rank(phi))


def build_design(data: Dataset, m: int) -> DesignMatrices:
    """Build ``omega``, ``phi`` and ``q`` for ``data`` with penalty order ``m``.

    Raises
    ------
    DimensionError
        If ``2m <= d`` or ``n <= M``.
    DuplicatePoints
        If two points are closer than ``1e-12`` times the data diameter.
    RankDeficient
        If ``phi`` does not have full column rank ``M``.
    """
    basis = TpsBasis(m, data.d)
    n, M = data.n, basis.M
    if n <= M:
        raise DimensionError(f"need more than M={M} points, got n={n}")
    pts = data.points
    h_min, diam = _min_distance(pts)
    if h_min <= DUPLICATE_RTOL * diam or diam == 0.0:
        raise DuplicatePoints(
            f"design contains coincident points (min separation {h_min:.3g})")

    phi = basis.poly(pts)
    rank = _phi_rank(phi)
    if rank < M:
        raise RankDeficient(
            f"polynomial design has rank {rank} < M={M}; points are not unisolvent")

    omega = kernel_matrix(basis, pts, pts)
    omega = 0.5 * (omega + omega.T)
    qfull, rfull = qr(phi, mode="full")
    q_range, q = qfull[:, :M], qfull[:, M:]
    r_phi = rfull[:M, :]

    pen = q.T @ omega @ q
    lam, vecs = eigh(0.5 * (pen + pen.T))
    return DesignMatrices(
        basis=basis, points=pts, omega=omega, phi=phi, q=q, q_range=q_range,
        r_phi=r_phi, pen_eigvals=lam, pen_basis=q @ vecs)
