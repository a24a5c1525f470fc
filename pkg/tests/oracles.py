"""Independent brute-force oracles the tests check the library against.

Everything here deliberately avoids the library's factored code paths:
dense tensors are materialized entry by entry, and linear programs are solved
by scipy's HiGHS on the full variable set.
"""

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix


def dense_coupling_tensor(kernels, log_potentials):
    """Full coupling array Gamma of shape (P, |X|, ..., |X|) from kernels and potentials."""
    k = kernels.kernels()  # (N, P, X)
    a = np.exp(log_potentials)  # (N, X)
    n, p, x = k.shape
    gamma = np.ones((p,) + (1,) * n)
    for i in range(n):
        shape = (p,) + (1,) * i + (x,) + (1,) * (n - i - 1)
        gamma = gamma * (k[i] * a[i][None, :]).reshape(shape)
    return gamma


def dense_marginal(gamma, j):
    """Marginal of the dense tensor on snapshot j (axis j+1)."""
    n_axes = gamma.ndim - 1
    axes = tuple(ax for ax in range(gamma.ndim) if ax != j + 1)
    return gamma.sum(axis=axes)


def dense_param_marginal(gamma):
    """Marginal on the parameter axis, normalized to mass 1."""
    out = gamma.sum(axis=tuple(range(1, gamma.ndim)))
    return out / out.sum()


def dense_objective(kernels, gamma):
    """<c, Gamma> summed entry by entry over the dense tensor."""
    n = kernels.n_snapshots
    p, x = kernels.n_param_tuples, kernels.n_support
    total = 0.0
    for i in range(n):
        weighted = kernels.weighted_cost(i)  # (P, X): lambda_i * c_i
        pair = dense_marginal_pair(gamma, i)
        total += float(np.sum(weighted * pair))
    return total


def dense_marginal_pair(gamma, i):
    """Joint (parameter, y_i) marginal of the dense tensor, shape (P, |X|)."""
    axes = tuple(ax for ax in range(1, gamma.ndim) if ax != i + 1)
    return gamma.sum(axis=axes)


def multimarginal_lp(cost_arrays, lambdas, targets):
    """Exact LP over the dense multi-coupling with marginal constraints on every y_j.

    Args:
        cost_arrays: (N, P, X) per-snapshot costs c_i(param, y).
        lambdas: (N,) positive weights.
        targets: (N, X) marginal weight vectors.

    Returns:
        (optimal value, optimal tensor of shape (P, X, ..., X)).
    """
    cost_arrays = np.asarray(cost_arrays, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n, p, x = cost_arrays.shape
    shape = (p,) + (x,) * n
    total_cost = np.zeros(shape)
    for i in range(n):
        view = (p,) + (1,) * i + (x,) + (1,) * (n - i - 1)
        total_cost += lambdas[i] * cost_arrays[i].reshape(view)
    n_vars = total_cost.size
    idx = np.indices(shape).reshape(n + 1, -1)
    rows = []
    cols = []
    for j in range(n):
        rows.append(j * x + idx[j + 1])
        cols.append(np.arange(n_vars))
    a_eq = csr_matrix(
        (np.ones(n * n_vars), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * x, n_vars),
    )
    b_eq = targets.ravel()
    res = linprog(total_cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return float(res.fun), res.x.reshape(shape)


def transport_lp(cost, p, q):
    """Exact two-marginal transport LP by HiGHS on the dense variable set."""
    n, m = cost.shape
    rows = []
    cols = []
    for i in range(n):
        rows.extend([i] * m)
        cols.extend(range(i * m, (i + 1) * m))
    for j in range(m):
        rows.extend([n + j] * n)
        cols.extend(range(j, n * m, m))
    a_eq = csr_matrix((np.ones(2 * n * m), (rows, cols)), shape=(n + m, n * m))
    res = linprog(np.asarray(cost, dtype=float).ravel(), A_eq=a_eq, b_eq=np.concatenate([p, q]), bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"oracle transport LP failed: {res.message}")
    return float(res.fun), res.x.reshape(n, m)


def gaussian_pdf_measure(grid_points, mean, std):
    """Normalized density weights of N(mean, std^2) on a 1D grid."""
    x = np.asarray(grid_points, dtype=float).ravel()
    w = np.exp(-0.5 * ((x - mean) / std) ** 2)
    return w / w.sum()
