"""Thin-plate radial kernel and polynomial null-space basis."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


def null_space_dim(m: int, d: int) -> int:
    """Number of monomials in ``d`` variables of total degree below ``m``."""
    if m < 1 or d < 1:
        raise DimensionError(f"m and d must be positive, got m={m}, d={d}")
    return math.comb(m + d - 1, d)


def monomial_exponents(m: int, d: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials of total degree ``0 .. m-1``.

    Ordered by total degree, then by variable index, so that for
    ``m=2, d=2`` the basis reads ``1, x1, x2``.
    """
    exps = []
    for deg in range(m):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            e = [0] * d
            for k in combo:
                e[k] += 1
            exps.append(tuple(e))
    return exps


def _log_abs_gamma_and_sign(x: float) -> tuple[float, float]:
    if x > 0:
        return math.lgamma(x), 1.0
    # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    s = math.sin(math.pi * x)
    if s == 0.0:
        raise DimensionError(f"gamma function has a pole at {x}")
    log_abs = math.log(math.pi) - math.log(abs(s)) - math.lgamma(1.0 - x)
    return log_abs, math.copysign(1.0, s)


def eta_coefficient(m: int, d: int) -> float:
    """Constant multiplying ``r**(2m-d)`` (times ``log r`` for even d)."""
    if 2 * m <= d:
        raise DimensionError(f"thin-plate kernel requires 2m > d (m={m}, d={d})")
    if d % 2 == 0:
        sign = -1.0 if (m + 1 + d // 2) % 2 else 1.0
        log_den = ((2 * m - 1) * math.log(2.0) + 0.5 * d * math.log(math.pi)
                   + math.lgamma(m) + math.lgamma(m - d // 2 + 1))
        return sign * math.exp(-log_den)
    log_g, sign = _log_abs_gamma_and_sign(0.5 * d - m)
    log_den = 2 * m * math.log(2.0) + 0.5 * d * math.log(math.pi) + math.lgamma(m)
    return sign * math.exp(log_g - log_den)


def eta(m: int, d: int, r):
    """Thin-plate radial kernel evaluated at distance(s) ``r``.

    Returns a float for scalar input and an array otherwise. The value
    at ``r = 0`` is the limit 0.
    """
    coef = eta_coefficient(m, d)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("distances must be nonnegative")
    p = 2 * m - d
    out = np.zeros_like(r_arr)
    pos = r_arr > 0
    rp = r_arr[pos]
    if d % 2 == 0:
        out[pos] = coef * rp ** p * np.log(rp)
    else:
        out[pos] = coef * rp ** p
    if np.ndim(r) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TpsBasis:
    """Kernel and polynomial basis for penalty order ``m`` in ``d`` dimensions."""

    m: int
    d: int
    M: int = field(init=False)
    exponents: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        if self.m < 1 or self.d < 1:
            raise DimensionError(f"m and d must be positive, got m={self.m}, d={self.d}")
        if 2 * self.m <= self.d:
            raise DimensionError(
                f"2m > d is required for a reproducing kernel (m={self.m}, d={self.d})")
        object.__setattr__(self, "M", null_space_dim(self.m, self.d))
        object.__setattr__(self, "exponents", tuple(monomial_exponents(self.m, self.d)))

    def kernel(self, r):
        return eta(self.m, self.d, r)

    def poly(self, x) -> np.ndarray:
        """Monomial basis at the rows of ``x`` (shape ``(k, d)``) -> ``(k, M)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise DimensionError(f"expected points of dimension {self.d}, got {x.shape[1]}")
        out = np.ones((x.shape[0], self.M))
        for j, e in enumerate(self.exponents):
            for k, power in enumerate(e):
                if power:
                    out[:, j] *= x[:, k] ** power
        return out


def eval_poly_basis(basis: TpsBasis, x) -> np.ndarray:
    """Polynomial basis vector (length ``M``) at a single point ``x``."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != basis.d:
        raise DimensionError(f"expected a point of dimension {basis.d}, got {x.shape[0]}")
    return basis.poly(x[None, :])[0]
