"""Dense symmetric-matrix kernels: eigendecomposition, PSD square root, PSD projection.

Inputs are plain square ndarrays; every routine validates symmetry to 1e-12
relative before touching the spectrum. Backed by LAPACK via numpy.linalg.eigh,
which is unconditionally stable for symmetric input at the matrix orders used
here (a few hundred at most).
"""

from typing import Tuple

import numpy as np

SYM_TOL = 1e-12
PSD_EIG_TOL = 1e-10


def _as_symmetric(a: np.ndarray) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.T).max() > SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return (m + m.T) / 2


def sym_eig(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    Returns (w, V) with a = V @ diag(w) @ V.T; columns of V are eigenvectors.
    """
    m = _as_symmetric(a)
    w, v = np.linalg.eigh(m)
    return w[::-1].copy(), v[:, ::-1].copy()


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root B with B @ B = a.

    Eigenvalues within -1e-10 * lambda_max of zero are clipped to zero;
    anything more negative is rejected as not PSD.
    """
    w, v = sym_eig(a)
    lam_max = max(w[0], 0.0)
    if w[-1] < -PSD_EIG_TOL * lam_max - 1e-300:
        raise ValueError("matrix is not positive semi-definite")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ v.T
    return (root + root.T) / 2


def project_psd(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues at zero."""
    w, v = sym_eig(a)
    if w[-1] >= 0:
        return _as_symmetric(a)
    out = (v * np.clip(w, 0.0, None)) @ v.T
    return (out + out.T) / 2


def inv_sqrtm_pd(a: np.ndarray) -> np.ndarray:
    """Inverse symmetric square root of a strictly positive definite matrix."""
    w, v = sym_eig(a)
    if w[-1] <= PSD_EIG_TOL * max(w[0], 1e-300):
        raise ValueError("matrix is singular or nearly so; inverse square root undefined")
    out = (v / np.sqrt(w)) @ v.T
    return (out + out.T) / 2
