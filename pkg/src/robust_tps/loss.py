"""Convex loss families, IRLS weights and robust scale estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

FAMILIES = ("square", "huber", "logistic", "lad", "quantile")
_ALIASES = {"ls": "square", "l2": "square", "l1": "lad"}

MAD_CONSTANT = 1.4826


@dataclass(frozen=True)
class LossSpec:
    """A loss family plus its tuning constants.

    ``lad_epsilon`` is the floor on ``|r|`` used when forming IRLS weights
    for the non-differentiable families (``lad`` and ``quantile``).
    """

    family: str = "square"
    huber_c: float = 1.345
    quantile_alpha: float = 0.5
    lad_epsilon: float = 1e-6

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}; choose from {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if not self.huber_c > 0:
            raise ValueError("huber_c must be positive")
        if not 0 < self.quantile_alpha < 1:
            raise ValueError("quantile_alpha must lie in (0, 1)")
        if not self.lad_epsilon > 0:
            raise ValueError("lad_epsilon must be positive")

    @property
    def robust(self) -> bool:
        return self.family != "square"

    @property
    def lipschitz(self) -> float:
        return {
            "square": np.inf,
            "huber": self.huber_c,
            "logistic": 2.0,
            "lad": 1.0,
            "quantile": max(self.quantile_alpha, 1 - self.quantile_alpha),
        }[self.family]

    @property
    def max_weight(self) -> float:
        if self.family in ("lad", "quantile"):
            return 1.0 / self.lad_epsilon
        return 1.0

    @property
    def label(self) -> str:
        return {"square": "LS", "huber": "Huber", "logistic": "Logistic",
                "lad": "LAD", "quantile": f"Q{self.quantile_alpha:g}"}[self.family]


def _out(x, values):
    return float(values) if np.ndim(x) == 0 else values


def rho(spec: LossSpec, x):
    """Loss value; vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    fam = spec.family
    if fam == "square":
        v = 0.5 * x * x
    elif fam == "huber":
        c = spec.huber_c
        ax = np.abs(x)
        v = np.where(ax < c, 0.5 * x * x, c * ax - 0.5 * c * c)
    elif fam == "logistic":
        v = 2.0 * x + 4.0 * np.logaddexp(0.0, -x)
    elif fam == "lad":
        v = np.abs(x)
    else:
        a = spec.quantile_alpha
        v = x * (a - (x < 0))
    return _out(x, v)


def psi(spec: LossSpec, x):
    """A subgradient of :func:`rho`; vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    fam = spec.family
    if fam == "square":
        v = x.copy()
    elif fam == "huber":
        v = np.clip(x, -spec.huber_c, spec.huber_c)
    elif fam == "logistic":
        # 2 - 4/(1+e^x), written without overflow
        v = 2.0 * np.tanh(0.5 * x)
    elif fam == "lad":
        v = np.sign(x)
    else:
        a = spec.quantile_alpha
        v = np.where(x > 0, a, np.where(x < 0, a - 1.0, a - 0.5))
    return _out(x, v)


def irls_weight(spec: LossSpec, r):
    """IRLS weight ``psi(r)/r`` with its limit at the origin.

    For ``lad`` and ``quantile`` the magnitude of ``r`` is floored at
    ``lad_epsilon``, so weights are capped at ``1/lad_epsilon``. At ``r == 0``
    the quantile weight averages the two one-sided slopes.
    """
    r = np.asarray(r, dtype=float)
    fam = spec.family
    ar = np.abs(r)
    if fam == "square":
        w = np.ones_like(r)
    elif fam == "huber":
        with np.errstate(divide="ignore"):
            w = np.where(ar <= spec.huber_c, 1.0, spec.huber_c / np.maximum(ar, 1e-300))
    elif fam == "logistic":
        small = ar < 1e-4
        safe = np.where(small, 1.0, r)
        w = np.where(small, 1.0 - r * r / 12.0, 2.0 * np.tanh(0.5 * safe) / safe)
    else:
        if fam == "lad":
            slope = np.ones_like(r)
        else:
            a = spec.quantile_alpha
            slope = np.where(r > 0, a, np.where(r < 0, 1.0 - a, 0.5))
        w = slope / np.maximum(ar, spec.lad_epsilon)
    return _out(r, w)


def irls_score(spec: LossSpec, r):
    """``r * irls_weight(r)``: the score the IRLS fixed point actually balances.

    Equals :func:`psi` except inside ``|r| < lad_epsilon`` for the
    ``lad``/``quantile`` families, where it is linear.
    """
    r = np.asarray(r, dtype=float)
    return _out(r, r * irls_weight(spec, r))


def irls_score_slope(spec: LossSpec, r):
    """Derivative of :func:`irls_score` in ``r`` (zero outside the quadratic zones)."""
    r = np.asarray(r, dtype=float)
    fam = spec.family
    ar = np.abs(r)
    if fam == "square":
        v = np.ones_like(r)
    elif fam == "huber":
        v = (ar <= spec.huber_c).astype(float)
    elif fam == "logistic":
        v = 1.0 / np.cosh(0.5 * np.minimum(ar, 700.0)) ** 2
    else:
        if fam == "lad":
            slope = np.ones_like(r)
        else:
            a = spec.quantile_alpha
            slope = np.where(r > 0, a, np.where(r < 0, 1.0 - a, 0.5))
        v = np.where(ar < spec.lad_epsilon, slope / spec.lad_epsilon, 0.0)
    return _out(r, v)


def mad(r) -> float:
    """Median absolute deviation about the median, scaled for the normal."""
    r = np.asarray(r, dtype=float).ravel()
    return float(MAD_CONSTANT * np.median(np.abs(r - np.median(r))))


def bisquare_rho(u, c: float):
    """Bounded Tukey bisquare rho normalized to 1 at ``|u| >= c``."""
    u = np.asarray(u, dtype=float)
    t = np.minimum((u / c) ** 2, 1.0)
    v = np.minimum(1.0, t * (3.0 - 3.0 * t + t * t))
    return _out(u, v)


def m_scale(r, c1: float = 3.0) -> float:
    """M-scale ``s`` solving ``mean(bisquare_rho(r/s, c1)) = 1/2``.

    Returns 0 when at least half of the residuals are exactly zero, in
    which case no positive root exists.
    """
    r = np.abs(np.asarray(r, dtype=float).ravel())
    n = r.size
    if n == 0:
        raise ValueError("m_scale needs at least one residual")
    nonzero = r[r > 0]
    if nonzero.size * 2 <= n:
        return 0.0
    # work in units of max|r| so tiny or huge inputs neither under- nor overflow
    unit = float(nonzero.max())
    r = r / unit
    nonzero = r[r > 0]
    if nonzero.size * 2 <= n:
        return 0.0

    def g(log_s):
        return float(np.mean(bisquare_rho(r / np.exp(log_s), c1))) - 0.5

    # all |r/s| >= c1 at lo (g > 0); all |r/s| <= 0.3 c1 at hi (g < 0)
    lo = np.log(nonzero.min() / c1) - 1.0
    hi = np.log(nonzero.max() / (0.3 * c1)) + 1.0
    start = mad(r)
    if start > 0:
        ls = np.log(start)
        if lo < ls < hi:
            if g(ls) > 0:
                lo = ls
            else:
                hi = ls
    log_s = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(np.exp(log_s)) * unit


def tau_scale(r, c1: float = 3.0, c2: float = 5.0) -> float:
    """Tau-scale: ``tau**2 = s**2 * mean(bisquare_rho(r/s, c2))`` with ``s = m_scale(r, c1)``."""
    r = np.asarray(r, dtype=float).ravel()
    s = m_scale(r, c1)
    if s == 0.0:
        return 0.0
    return float(s * np.sqrt(np.mean(bisquare_rho(r / s, c2))))
