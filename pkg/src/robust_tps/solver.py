"""IRLS fitting of M-type thin-plate splines.

The penalized problem is solved on the reduced coordinates obtained by
writing the kernel coefficients as ``gamma = q @ beta``. Internally the
reduced penalty ``q.T @ omega @ q`` is diagonalized once per design, which
turns every IRLS step into a well-scaled symmetric positive definite solve
in an orthonormal basis of R^n; results are mapped back to ``(gamma, delta)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve, solve_triangular
from scipy.spatial import cKDTree

from .basis import TpsBasis
from .design import Dataset, DesignMatrices, build_design, kernel_matrix
from .errors import DimensionError, NoConvergenceWarning, SingularSystem
from .loss import LossSpec, irls_score, irls_score_slope, irls_weight, mad, rho

_EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class FitOptions:
    """IRLS controls.

    ``scale`` selects how residuals are standardized before the Huber and
    logistic weights are applied: ``"pilot"`` uses one difference-based
    estimate per dataset (see :func:`pilot_scale`), ``"mad"`` re-estimates
    the scale by MAD of the current residuals at every iteration, and a
    positive number fixes it (``1.0`` minimizes the raw objective exactly).
    """

    max_iter: int = 200
    tol: float = 1e-8
    ridge_jitter: float = 1e-10
    scale: Union[str, float] = "pilot"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.ridge_jitter < 0:
            raise ValueError("ridge_jitter must be nonnegative")
        if isinstance(self.scale, str):
            if self.scale not in ("pilot", "mad"):
                raise ValueError("scale must be 'pilot', 'mad' or a positive number")
        elif not self.scale > 0:
            raise ValueError("scale must be 'pilot', 'mad' or a positive number")


@dataclass(frozen=True, eq=False)
class TpsModel:
    """A fitted thin-plate spline ``f(x) = sum gamma_i eta(|x - c_i|) + sum delta_j phi_j(x)``.

    ``hat_diag`` is the diagonal of the IRLS smoother at the last weights and
    ``loo_residuals`` the curvature-based leave-one-out residuals; both are
    absent on models read back from disk.
    """

    m: int
    d: int
    centers: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    lam: float
    loss: LossSpec
    iterations: int = 0
    converged: bool = True
    hat_diag: Optional[np.ndarray] = None
    final_residuals: Optional[np.ndarray] = None
    sigma_hat: Optional[float] = None
    objective_trace: tuple = ()
    loo_residuals: Optional[np.ndarray] = field(default=None, repr=False)
    loo_leverage: Optional[np.ndarray] = field(default=None, repr=False)
    design: Optional[DesignMatrices] = field(default=None, repr=False)

    @property
    def basis(self) -> TpsBasis:
        return TpsBasis(self.m, self.d)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @cached_property
    def omega(self) -> np.ndarray:
        if self.design is not None:
            return self.design.omega
        return kernel_matrix(self.basis, self.centers, self.centers)


def _factor(a: np.ndarray):
    try:
        return cho_factor(a, lower=True, check_finite=False)
    except LinAlgError:
        return None


def _solve(a: np.ndarray, chol, b: np.ndarray) -> np.ndarray:
    if chol is not None:
        return cho_solve(chol, b, check_finite=False)
    try:
        return solve(a, b, assume_a="sym", check_finite=False)
    except LinAlgError as exc:
        raise SingularSystem(f"reduced system is numerically singular: {exc}") from exc


def _quad_diag(x: np.ndarray, a: np.ndarray, chol) -> np.ndarray:
    """``x_i' A^{-1} x_i`` for every row of ``x``."""
    if chol is not None:
        g = solve_triangular(chol[0], x.T, lower=True, check_finite=False)
        return np.sum(g * g, axis=0)
    return np.einsum("ij,ji->i", x, _solve(a, None, x.T))


class _Reduced:
    """Orthonormal reparametrization ``f = B c + Q1 e`` of one design."""

    def __init__(self, design: DesignMatrices):
        lam = design.pen_eigvals
        top = float(lam.max()) if lam.size else 1.0
        self.eig = np.maximum(lam, _EIG_FLOOR * max(top, _EIG_FLOOR))
        self.x = np.hstack([design.pen_basis, design.q_range])
        self.k = design.pen_basis.shape[1]
        self.design = design

    def penalty_diag(self, lam: float) -> np.ndarray:
        n = self.design.n
        return np.concatenate([2.0 * n * lam / self.eig, np.zeros(self.design.M)])

    def penalty_value(self, theta: np.ndarray) -> float:
        c = theta[: self.k]
        return float(np.sum(c * c / self.eig))

    def coefficients(self, theta: np.ndarray, fitted: np.ndarray):
        des = self.design
        gamma = des.pen_basis @ (theta[: self.k] / self.eig)
        rhs = des.q_range.T @ (fitted - des.omega @ gamma)
        delta = solve_triangular(des.r_phi, rhs, check_finite=False)
        return gamma, delta


def pilot_scale(data: Dataset) -> float:
    """Residual scale from nearest-neighbour response differences.

    ``MAD(y_i - y_nn(i)) / sqrt(2)``; it does not depend on any fit, so the
    standardization of residuals is the same for every smoothing parameter.
    """
    y = data.responses
    if data.n < 2:
        return 0.0
    _, idx = cKDTree(data.points).query(data.points, k=2)
    return mad(y - y[idx[:, 1]]) / np.sqrt(2.0)


def _scale_floor(y: np.ndarray) -> float:
    return 1e-8 * mad(y) or 1e-8 * float(np.max(np.abs(y))) or 1e-300


def fit(data: Dataset, m: int, lam: float, loss: Optional[LossSpec] = None,
        opts: Optional[FitOptions] = None,
        design: Optional[DesignMatrices] = None) -> TpsModel:
    """Fit an M-type thin-plate spline by iteratively reweighted least squares.

    Each step solves ``(Z' W Z + 2 n lam P) theta = Z' W y`` on the reduced
    coordinates, starting from the least-squares solution, until the
    relative sup-norm change of the fitted values drops below ``opts.tol``.
    If ``max_iter`` is reached a :class:`NoConvergenceWarning` is issued and
    the model is returned with ``converged=False``.

    Parameters
    ----------
    data : Dataset
    m : int
        Penalty order; ``2m > d`` is required.
    lam : float
        Smoothing parameter, on the scale of the objective
        ``mean(rho(r)) + lam * gamma' omega gamma``.
    loss : LossSpec, optional
        Defaults to the square loss.
    opts : FitOptions, optional
    design : DesignMatrices, optional
        Precomputed design for ``data``; reused across smoothing parameters.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    loss = loss or LossSpec()
    opts = opts or FitOptions()
    if design is None:
        design = build_design(data, m)
    elif design.n != data.n or design.basis.m != m:
        raise DimensionError("precomputed design does not match data and m")

    red = _Reduced(design)
    x, y = red.x, data.responses
    n = data.n
    pen = red.penalty_diag(lam)
    floor = _scale_floor(y)

    scaled = loss.family in ("huber", "logistic")
    sigma = None
    if scaled and opts.scale == "pilot":
        sigma = max(pilot_scale(data), floor)
    elif scaled and opts.scale != "mad":
        sigma = float(opts.scale)

    def weights(r):
        nonlocal sigma
        if not scaled:
            return irls_weight(loss, r)
        if opts.scale == "mad":
            sigma = max(mad(r), floor)
        return irls_weight(loss, r / sigma)

    def system(w, ref):
        a = (x.T * w) @ x
        a[np.diag_indices_from(a)] += pen + opts.ridge_jitter * ref
        return a

    phi, k = design.phi, red.k

    def step(w):
        a = system(w, float(np.mean(w)))
        chol = _factor(a)
        # remove the weighted polynomial fit first; polynomials are reproduced
        # exactly (c = 0, e = R delta), so only the remainder goes through the solve
        sw = np.sqrt(w)
        poly = np.linalg.lstsq(phi * sw[:, None], sw * y, rcond=None)[0]
        theta = _solve(a, chol, x.T @ (w * (y - phi @ poly)))
        theta[k:] += design.r_phi @ poly
        if not np.all(np.isfinite(theta)):
            raise SingularSystem("non-finite coefficients in IRLS step")
        return theta, a, chol

    def obj(f, theta):
        return float(np.mean(rho(loss, y - f)) + lam * red.penalty_value(theta))

    w = np.ones(n)
    theta, a, chol = step(w)
    f = x @ theta
    trace = [obj(f, theta)]
    iterations, converged = 1, False
    while iterations < opts.max_iter + 1:
        w = weights(y - f)
        theta, a, chol = step(w)
        f_new = x @ theta
        iterations += 1
        denom = max(float(np.max(np.abs(f_new))), np.finfo(float).tiny)
        change = float(np.max(np.abs(f_new - f))) / denom
        f = f_new
        trace.append(obj(f, theta))
        if change < opts.tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"IRLS did not converge in {opts.max_iter} iterations "
            f"(loss={loss.family}, lambda={lam:.3g})", NoConvergenceWarning, stacklevel=2)

    r = y - f
    # smoother diagonal at the last weights: h_i = w_i x_i' A^{-1} x_i
    hat = w * _quad_diag(x, a, chol)

    # curvature-based leave-one-out: r_i + score_i * x_i' (A' - s_i x_i x_i')^{-1} x_i
    u = r / sigma if scaled else r
    score = irls_score(loss, u) * (sigma if scaled else 1.0)
    slope = irls_score_slope(loss, u)
    if loss.family == "square":
        q, a2 = hat, None
    else:
        a2 = system(slope, float(np.mean(w)))
        q = _quad_diag(x, a2, _factor(a2))
    lev = slope * q
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = r + score * q / (1.0 - lev)

    gamma, delta = red.coefficients(theta, f)
    return TpsModel(
        m=m, d=data.d, centers=data.points, gamma=gamma, delta=delta, lam=float(lam),
        loss=loss, iterations=iterations, converged=converged, hat_diag=hat,
        final_residuals=r, sigma_hat=sigma, objective_trace=tuple(trace),
        loo_residuals=loo, loo_leverage=lev, design=design)


def predict(model: TpsModel, x):
    """Evaluate the fitted function at a point (returns float) or at rows of ``x``."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != model.d:
        raise DimensionError(f"model has dimension {model.d}, got points of dimension {arr.shape[1]}")
    basis = model.basis
    vals = kernel_matrix(basis, arr, model.centers) @ model.gamma + basis.poly(arr) @ model.delta
    return float(vals[0]) if single else vals


def penalty_value(model: TpsModel) -> float:
    """Thin-plate roughness ``gamma' omega gamma`` of the fitted function."""
    g = model.gamma
    return max(float(g @ model.omega @ g), 0.0)


def hat_diagonal(model: TpsModel) -> np.ndarray:
    if model.hat_diag is None:
        raise SingularSystem("model carries no hat diagonal")
    return model.hat_diag.copy()


def objective(data: Dataset, model: TpsModel) -> float:
    """``mean(rho(y - f(x))) + lam * penalty`` with raw (unscaled) residuals."""
    r = data.responses - predict(model, data.points)
    return float(np.mean(rho(model.loss, r)) + model.lam * penalty_value(model))
