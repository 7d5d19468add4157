"""Independent reference computations used as test oracles.

Nothing here goes through the package's design or solver code: the kernel
matrix, polynomial block and null-space basis are rebuilt with plain numpy
for m = 2, d = 2.
"""

import numpy as np


def tps_kernel_22(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = r * r * np.log(r) / (8 * np.pi)
    return np.where(r > 0, v, 0.0)


def direct_ls_fit(x, y, lam):
    """Solve ``(Z'Z + 2 n lam P) theta = Z'y`` with ``Z = [Omega Q, Phi]`` in one shot."""
    n = x.shape[0]
    omega = tps_kernel_22(np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)))
    phi = np.c_[np.ones(n), x]
    q = np.linalg.qr(phi, mode="complete")[0][:, 3:]
    z = np.hstack([omega @ q, phi])
    p = np.zeros((n, n))
    p[: n - 3, : n - 3] = q.T @ omega @ q
    theta = np.linalg.solve(z.T @ z + 2 * n * lam * p, z.T @ y)
    return z @ theta


def ols_plane(x, y):
    phi = np.c_[np.ones(x.shape[0]), x]
    return phi @ np.linalg.lstsq(phi, y, rcond=None)[0]


def ols_case_deletion_residuals(x, y):
    """``y_i`` minus the plane fitted without observation ``i``, by n refits."""
    out = np.empty(len(y))
    for i in range(len(y)):
        keep = np.arange(len(y)) != i
        phi = np.c_[np.ones(keep.sum()), x[keep]]
        beta = np.linalg.lstsq(phi, y[keep], rcond=None)[0]
        out[i] = y[i] - np.r_[1.0, x[i]] @ beta
    return out


def random_rigid_motion(rng, d=2):
    """Random orthogonal matrix (with a reflection half the time) and shift."""
    g, r = np.linalg.qr(rng.standard_normal((d, d)))
    g = g * np.sign(np.diag(r))
    if rng.uniform() < 0.5:
        g[:, 0] = -g[:, 0]
    return g, rng.uniform(-5, 5, d)
