"""Robust M-type thin-plate spline smoothing."""

from .basis import TpsBasis, eta, eval_poly_basis, null_space_dim
from .design import Dataset, DesignMatrices, MeshStats, build_design, mesh_stats
from .diagnostics import OutlierReport, flag_outliers, mse_against_truth
from .errors import (AllFailed, DimensionError, DuplicatePoints, LeverageOne,
                     NoConvergenceWarning, RankDeficient, SingularSystem, TpsError)
from .io import load_model, save_model
from .loss import LossSpec, bisquare_rho, irls_weight, m_scale, mad, psi, rho, tau_scale
from .select import RcvResult, loo_residuals, rcv, select_lambda
from .solver import FitOptions, TpsModel, fit, hat_diagonal, objective, penalty_value, predict

__version__ = "0.1.0"
