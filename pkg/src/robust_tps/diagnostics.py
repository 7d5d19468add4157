"""Fit-quality metrics and MAD-based outlier flagging."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .loss import mad
from .solver import TpsModel, predict


@dataclass(frozen=True, eq=False)
class OutlierReport:
    residuals: np.ndarray
    standardized: np.ndarray
    flags: np.ndarray
    threshold: float
    n_flagged: int
    scale: float


def mse_against_truth(model: TpsModel, points, truth) -> float:
    """Mean squared difference between the fit and the true function at ``points``."""
    truth = np.asarray(truth, dtype=float).ravel()
    fhat = np.atleast_1d(predict(model, np.atleast_2d(points)))
    if fhat.shape != truth.shape:
        raise DimensionError(f"{fhat.size} fitted values but {truth.size} true values")
    return float(np.mean((fhat - truth) ** 2))


def flag_outliers(residuals, threshold: float = 2.5) -> OutlierReport:
    """Flag observations whose ``|r_i| / MAD(r)`` exceeds ``threshold``.

    With a zero MAD every nonzero residual is standardized to infinity.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    r = np.asarray(residuals, dtype=float).ravel()
    s = mad(r)
    ar = np.abs(r)
    if s > 0:
        z = ar / s
    else:
        z = np.where(ar > 0, np.inf, 0.0)
    flags = z > threshold
    return OutlierReport(residuals=r, standardized=z, flags=flags, threshold=float(threshold),
                         n_flagged=int(flags.sum()), scale=s)


def write_outlier_table(report: OutlierReport, stream, delimiter: str = ",") -> None:
    """Write ``index, residual, standardized, flag`` rows (0-based index)."""
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(["index", "residual", "standardized", "flag"])
    for i, (r, z, f) in enumerate(zip(report.residuals, report.standardized, report.flags)):
        w.writerow([i, f"{r:.17g}", f"{z:.17g}", int(f)])
