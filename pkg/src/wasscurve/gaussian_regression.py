"""Closed-form Gaussian Wasserstein geometry and Gaussian-case curve regression.

For Gaussian snapshots the regression over measure-valued curves collapses to
a semidefinite program on the joint covariance of (curve parameters, data
marginals): the objective is linear in that block matrix, the data blocks are
fixed, and the only constraint is positive semidefiniteness. The program is
solved by ADMM splitting: a closed-form proximal step on the free blocks,
a PSD projection, re-imposition of the data blocks, and a dual update.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from .curves import CurveClass, LINEAR
from .curve_regression import euclidean_regression_oracle
from .linalg import inv_sqrtm_pd, project_psd, sqrtm_psd
from .measures import GaussianMeasure
from .mm_sinkhorn import SolverError

logger = logging.getLogger(__name__)

SDP_DEFAULT_TOL = 1e-7
SDP_DEFAULT_MAX_ITER = 50000


def w2_gaussian_squared(a: GaussianMeasure, b: GaussianMeasure) -> float:
    """Squared Wasserstein-2 distance between Gaussians, closed form."""
    c0, c1 = a.covariance, b.covariance
    root0 = sqrtm_psd(c0)
    middle = sqrtm_psd(root0 @ c1 @ root0)
    bures = float(np.trace(c0) + np.trace(c1) - 2.0 * np.trace(middle))
    mean_term = float(np.sum((a.mean - b.mean) ** 2))
    return mean_term + max(bures, 0.0)


def w2_gaussian(a: GaussianMeasure, b: GaussianMeasure) -> float:
    """Wasserstein-2 distance between Gaussians, closed form."""
    return float(np.sqrt(w2_gaussian_squared(a, b)))


def gaussian_geodesic(
    a: GaussianMeasure,
    b: GaussianMeasure,
    t: float,
    allow_commuting_fallback: bool = False,
) -> GaussianMeasure:
    """Displacement interpolation between two Gaussians at time t in [0, 1].

    Needs the first covariance strictly positive definite. With
    allow_commuting_fallback=True, a singular first covariance is accepted
    when the two covariances commute, using the symmetric interpolation of
    square roots ((1-t)*C0^(1/2) + t*C1^(1/2))^2, which agrees with the
    geodesic in the commuting case.
    """
    if t < -1e-12 or t > 1.0 + 1e-12:
        raise ValueError("geodesic time must lie in [0, 1]")
    t = min(max(float(t), 0.0), 1.0)
    mean = (1.0 - t) * a.mean + t * b.mean
    c0, c1 = a.covariance, b.covariance
    evals = np.linalg.eigvalsh(c0)
    singular = evals.min() <= 1e-12 * max(evals.max(), 1e-300)
    if singular:
        if not allow_commuting_fallback:
            raise ValueError("first covariance is singular; geodesic formula needs its inverse square root")
        comm = c0 @ c1 - c1 @ c0
        scale = max(np.abs(c0).max() * max(np.abs(c1).max(), 1.0), 1.0)
        if np.abs(comm).max() > 1e-10 * scale:
            raise ValueError("singular first covariance and non-commuting pair; geodesic undefined here")
        mix = (1.0 - t) * sqrtm_psd(c0) + t * sqrtm_psd(c1)
        return GaussianMeasure(mean, mix @ mix)
    root0 = sqrtm_psd(c0)
    inv_root0 = inv_sqrtm_pd(c0)
    middle = sqrtm_psd(root0 @ c1 @ root0)
    mix = (1.0 - t) * c0 + t * middle
    cov = inv_root0 @ mix @ mix @ inv_root0
    return GaussianMeasure(mean, project_psd((cov + cov.T) / 2))


def biased_covariance(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sample mean and biased (1/n) covariance of rows."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    mean = x.mean(axis=0)
    centered = x - mean
    return mean, centered.T @ centered / x.shape[0]


@dataclass
class SdpDiagnostics:
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool
    rho: float


@dataclass(eq=False)
class GaussianCouplingBlocks:
    """Joint covariance of (curve parameters, snapshot marginals).

    The matrix is partitioned into (k + N) blocks of size d; the trailing N
    diagonal blocks hold the given data covariances and stay fixed, everything
    else is free subject to overall positive semidefiniteness.
    """

    d: int
    k: int
    n_snapshots: int
    matrix: np.ndarray  # ((k+N)d, (k+N)d)
    fixed_mask: np.ndarray  # boolean, marks the data diagonal blocks
    diagnostics: SdpDiagnostics

    def _block(self, a: int, b: int) -> np.ndarray:
        d = self.d
        return self.matrix[a * d : (a + 1) * d, b * d : (b + 1) * d]

    def param_block(self, i: int, j: int) -> np.ndarray:
        """Covariance block between curve parameters i and j (i, j < k)."""
        if not (0 <= i < self.k and 0 <= j < self.k):
            raise IndexError("parameter block index out of range")
        return self._block(i, j)

    def data_block(self, i: int) -> np.ndarray:
        """Fixed covariance block of snapshot i."""
        if not 0 <= i < self.n_snapshots:
            raise IndexError("snapshot index out of range")
        return self._block(self.k + i, self.k + i)

    def cross_block(self, param: int, snapshot: int) -> np.ndarray:
        """Cross-covariance between curve parameter and snapshot marginal."""
        return self._block(param, self.k + snapshot)

    def parameter_covariance(self) -> np.ndarray:
        """Top-left (k d) x (k d) block: the law of the curve parameters."""
        kd = self.k * self.d
        return self.matrix[:kd, :kd]


@dataclass(eq=False)
class GaussianCurve:
    """Gaussian-valued curve induced by the fitted parameter covariance."""

    curve: CurveClass
    mean_coeffs: np.ndarray  # (k, d)
    parameter_covariance: np.ndarray  # (k d, k d)
    d: int

    def mean(self, t: float) -> np.ndarray:
        return self.curve.coefficients(t) @ self.mean_coeffs

    def covariance(self, t: float) -> np.ndarray:
        b = np.kron(self.curve.coefficients(t)[None, :], np.eye(self.d))  # (d, k d)
        cov = b @ self.parameter_covariance @ b.T
        return (cov + cov.T) / 2

    def gaussian_at(self, t: float) -> GaussianMeasure:
        return GaussianMeasure(self.mean(t), project_psd(self.covariance(t)))

    def min_eigenvalue_on_grid(self, n_points: int = 101) -> float:
        """Smallest eigenvalue of the covariance over an even time grid in [0, 1]."""
        worst = np.inf
        for t in np.linspace(0.0, 1.0, n_points):
            worst = min(worst, float(np.linalg.eigvalsh(self.covariance(t)).min()))
        return worst


def _objective_matrix(timestamps: np.ndarray, lambdas: np.ndarray, curve: CurveClass, d: int) -> np.ndarray:
    """Weight matrix W with objective tr(W C): W = sum_i lambda_i b_i b_i^T (x) I_d."""
    k = curve.n_params
    n = len(timestamps)
    outer = np.zeros((k + n, k + n))
    for i, (t, lam) in enumerate(zip(timestamps, lambdas)):
        b = np.zeros(k + n)
        b[:k] = curve.coefficients(t)
        b[k + i] = -1.0
        outer += lam * np.outer(b, b)
    return np.kron(outer, np.eye(d))


def fit_gaussian_sdp(
    data: Sequence[Tuple[float, float, np.ndarray]],
    curve: CurveClass = LINEAR,
    means: Optional[Sequence[np.ndarray]] = None,
    tol: float = SDP_DEFAULT_TOL,
    max_iter: int = SDP_DEFAULT_MAX_ITER,
    rho: float = 1.0,
) -> Tuple[GaussianCouplingBlocks, GaussianCurve]:
    """Fit a Gaussian-valued curve to Gaussian snapshots by solving the block SDP.

    Args:
        data: (t_i, lambda_i, C_i) triples with symmetric PSD covariances;
            timestamps in [0, 1], weights positive and summing to 1.
        curve: linear or quadratic curve class.
        means: optional per-snapshot means, fitted separately by ordinary
            least squares and attached to the returned curve.
        tol: relative stopping tolerance on primal and dual residuals.
        max_iter: ADMM iteration budget.
        rho: initial proximal weight; rescaled adaptively.

    Returns:
        (blocks, curve): the optimal joint covariance with diagnostics, and
        the induced Gaussian-valued curve.

    Raises:
        SolverError: residuals did not reach tol within max_iter.
    """
    timestamps = np.array([float(row[0]) for row in data])
    lambdas = np.array([float(row[1]) for row in data])
    covs = [np.atleast_2d(np.asarray(row[2], dtype=float)) for row in data]
    n = len(covs)
    if n == 0:
        raise ValueError("need at least one snapshot")
    if np.any(lambdas <= 0) or abs(lambdas.sum() - 1.0) > 1e-9:
        raise ValueError("snapshot weights must be positive and sum to 1")
    if np.any(timestamps < -1e-12) or np.any(timestamps > 1 + 1e-12):
        raise ValueError("timestamps must lie in [0, 1]")
    d = covs[0].shape[0]
    for c in covs:
        GaussianMeasure(np.zeros(d), c)  # validates symmetry and PSD
    k = curve.n_params
    size = (k + n) * d
    weight = _objective_matrix(timestamps, lambdas, curve, d)

    fixed_mask = np.zeros((size, size), dtype=bool)
    fixed_values = np.zeros((size, size))
    for i, c in enumerate(covs):
        sl = slice((k + i) * d, (k + i + 1) * d)
        fixed_mask[sl, sl] = True
        fixed_values[sl, sl] = c

    # warm start: data blocks in place, parameter blocks at the average scale
    avg = sum(covs) / n
    x = fixed_values.copy()
    for j in range(k):
        sl = slice(j * d, (j + 1) * d)
        x[sl, sl] = avg
    z = project_psd(x)
    u = np.zeros_like(x)

    primal = dual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        x = z - u - weight / rho
        x[fixed_mask] = fixed_values[fixed_mask]
        x = (x + x.T) / 2
        z_prev = z
        z = project_psd(x + u)
        u = u + x - z
        primal = float(np.linalg.norm(x - z))
        dual = float(rho * np.linalg.norm(z - z_prev))
        scale = tol * (1.0 + float(np.linalg.norm(z)))
        if primal <= scale and dual <= scale:
            break
        if it % 50 == 0:
            if primal > 10.0 * dual:
                rho *= 2.0
                u /= 2.0
            elif dual > 10.0 * primal:
                rho /= 2.0
                u *= 2.0
    else:
        raise SolverError(
            f"gaussian SDP did not converge in {max_iter} iterations "
            f"(primal {primal:.3e}, dual {dual:.3e})"
        )

    objective = float(np.sum(weight * x))
    diag = SdpDiagnostics(it, primal, dual, objective, True, rho)
    blocks = GaussianCouplingBlocks(d, k, n, x, fixed_mask, diag)

    if means is not None:
        points = [(t, np.atleast_1d(np.asarray(m, dtype=float)), lam) for t, m, lam in zip(timestamps, means, lambdas)]
        mean_coeffs, _ = euclidean_regression_oracle(points, curve)
    else:
        mean_coeffs = np.zeros((k, d))
    gcurve = GaussianCurve(curve, mean_coeffs, blocks.parameter_covariance().copy(), d)
    return blocks, gcurve


def gaussian_1d_parametric_oracle(
    data: Sequence[Tuple[float, float, float]],
    kind: str = "linear",
) -> Tuple[np.ndarray, float]:
    """Best-fitting Wasserstein geodesic through centered 1D Gaussians.

    The geodesic between centered 1D Gaussians interpolates standard
    deviations linearly, so geodesic regression reduces to constrained least
    squares sigma_t = (1-t) sigma_0 + t sigma_1 with nonnegative endpoints.
    The residual sum_i lambda_i (sigma_t_i - sigma_i)^2 equals the weighted
    squared-W2 objective for this family.
    """
    if kind != "linear":
        raise ValueError("the parametric oracle covers the geodesic (linear) baseline only")
    ts = np.array([float(r[0]) for r in data])
    lams = np.array([float(r[1]) for r in data])
    sigmas = np.array([float(r[2]) for r in data])
    if np.any(sigmas <= 0):
        raise ValueError("standard deviations must be positive")
    if np.any(lams <= 0):
        raise ValueError("weights must be positive")
    if len(np.unique(ts)) < 2:
        raise ValueError("need at least two distinct timestamps")
    design = np.stack([1.0 - ts, ts], axis=1)
    sw = np.sqrt(lams)
    params, _ = nnls(design * sw[:, None], sigmas * sw)
    fitted = design @ params
    residual = float(np.sum(lams * (fitted - sigmas) ** 2))
    return params, residual
