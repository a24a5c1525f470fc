"""Entropically regularized multi-marginal optimal transport with decoupled costs.

The transport cost of a measure-valued-curve regression splits as a sum of
per-snapshot terms c_i(params, y_i), so the (N+k)-way coupling never has to be
materialized: one Gibbs kernel of shape (num parameter tuples, |X|) per
snapshot is enough, and each Sinkhorn marginal projection costs
O(N * |params| * |X|) instead of O(|X|^(N+k)).

Kernels are stored in log space with a per-snapshot cost shift so that entries
stay in (0, 1]. Scaling updates run in the exponential domain while safe and
switch to log-domain updates automatically when potentials leave the
representable range or a projection underflows.
"""

import logging
import time
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .curves import CurveClass
from .measures import DiscreteMeasure, SnapshotDataset, SupportGrid

try:  # optional compiled inner loop; pure-numpy fallback below is equivalent
    import numba

    _HAVE_NUMBA = True
except ImportError:
    numba = None
    _HAVE_NUMBA = False

logger = logging.getLogger(__name__)

# exp-domain operation is safe while every kernel entry is representable
_EXP_SAFE_LOG = -600.0
_POTENTIAL_LO = 1e-150
_POTENTIAL_HI = 1e150

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000


class SolverError(RuntimeError):
    """Sinkhorn iteration failed (epsilon too small for the cost scale, or kernel disconnected)."""


def param_tuple_stack(grids: Sequence[SupportGrid]) -> np.ndarray:
    """Enumerate the product of parameter grids in C order.

    Returns an array of shape (P, k, d) where P is the product of grid sizes;
    the first grid's index varies slowest.
    """
    shape = tuple(len(g) for g in grids)
    dims = {g.dim for g in grids}
    if len(dims) != 1:
        raise ValueError("parameter grids must share one dimension")
    idx = np.indices(shape).reshape(len(grids), -1)
    return np.stack([np.asarray(g.points)[idx[j]] for j, g in enumerate(grids)], axis=1)


@dataclass(frozen=True, eq=False)
class CostKernelSet:
    """Per-snapshot Gibbs kernels of the decoupled multi-marginal cost.

    log_kernels[i, p, y] = -lambda_i * c_i(param tuple p, y) / epsilon + shift_i,
    with shift_i = lambda_i * min(c_i) / epsilon so that the largest entry of
    every kernel is exactly 1. The raw costs are recoverable from the logs.
    """

    log_kernels: np.ndarray  # (N, P, |X|)
    shifts: np.ndarray  # (N,)
    epsilon: float
    lambdas: np.ndarray  # (N,)
    parameter_grids: Tuple[SupportGrid, ...]

    def __post_init__(self):
        lk = np.asarray(self.log_kernels, dtype=float)
        if lk.ndim != 3:
            raise ValueError("log_kernels must have shape (N, P, |X|)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if lk.shape[1] != int(np.prod(self.param_shape)):
            raise ValueError("kernel rows do not match the parameter grid product")
        object.__setattr__(self, "log_kernels", lk)
        object.__setattr__(self, "shifts", np.asarray(self.shifts, dtype=float))
        object.__setattr__(self, "lambdas", np.asarray(self.lambdas, dtype=float))
        object.__setattr__(self, "parameter_grids", tuple(self.parameter_grids))

    @property
    def n_snapshots(self) -> int:
        return self.log_kernels.shape[0]

    @property
    def n_param_tuples(self) -> int:
        return self.log_kernels.shape[1]

    @property
    def n_support(self) -> int:
        return self.log_kernels.shape[2]

    @property
    def param_shape(self) -> Tuple[int, ...]:
        return tuple(len(g) for g in self.parameter_grids)

    @cached_property
    def param_stack(self) -> np.ndarray:
        return param_tuple_stack(self.parameter_grids)

    def kernels(self) -> np.ndarray:
        """Exponential-domain kernels; entries may underflow to 0 for extreme costs."""
        return np.exp(self.log_kernels)

    def cost(self, i: int) -> np.ndarray:
        """Raw squared-distance cost array c_i of shape (P, |X|) for snapshot i."""
        return (self.shifts[i] - self.log_kernels[i]) * (self.epsilon / self.lambdas[i])

    def weighted_cost(self, i: int) -> np.ndarray:
        """lambda_i * c_i, the term snapshot i contributes to the transport objective."""
        return (self.shifts[i] - self.log_kernels[i]) * self.epsilon


def kernels_from_costs(
    costs: np.ndarray,
    lambdas: np.ndarray,
    epsilon: float,
    parameter_grids: Sequence[SupportGrid],
) -> CostKernelSet:
    """Build a kernel set from explicit per-snapshot cost arrays (N, P, |X|)."""
    costs = np.asarray(costs, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if costs.ndim != 3 or costs.shape[0] != lambdas.shape[0]:
        raise ValueError("costs must have shape (N, P, |X|) matching lambdas")
    if np.any(lambdas <= 0):
        raise ValueError("snapshot weights must be positive")
    mins = costs.min(axis=(1, 2))
    shifts = lambdas * mins / epsilon
    log_k = -(lambdas / epsilon)[:, None, None] * costs + shifts[:, None, None]
    return CostKernelSet(log_k, shifts, float(epsilon), lambdas, tuple(parameter_grids))


def build_kernels(
    dataset: SnapshotDataset,
    curve: CurveClass,
    grids: Sequence[SupportGrid],
    epsilon: float,
) -> CostKernelSet:
    """Assemble the Gibbs kernels for a curve-regression dataset.

    Only N arrays of shape (P, |X|) are materialized, never the full
    (N+k)-way tensor. Each snapshot's cost is shifted by its minimum before
    exponentiation, so kernel entries lie in (0, 1].
    """
    grids = tuple(grids)
    if len(grids) != curve.n_params:
        raise ValueError("number of parameter grids must match the curve class")
    for g in grids:
        if g.dim != dataset.dim:
            raise ValueError("parameter grids must match the data dimension")
    stack = param_tuple_stack(grids)  # (P, k, d)
    support = dataset.grid.points  # (|X|, d)
    n = len(dataset)
    costs = np.empty((n, stack.shape[0], support.shape[0]))
    for i, t in enumerate(dataset.timestamps):
        phi = curve.evaluate(stack, t)  # (P, d)
        costs[i] = cdist(phi, support, "sqeuclidean")
    return kernels_from_costs(costs, dataset.lambdas, epsilon, grids)


@dataclass(frozen=True, eq=False)
class ParamCoupling:
    """Probability mass over the product of parameter grids (the fitted law on curves)."""

    parameter_grids: Tuple[SupportGrid, ...]
    weights: np.ndarray  # shape = tuple of grid sizes

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        expected = tuple(len(g) for g in self.parameter_grids)
        if w.shape != expected:
            raise ValueError("coupling shape must match the parameter grids")
        if np.any(w < 0):
            raise ValueError("coupling weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("coupling mass must be 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "parameter_grids", tuple(self.parameter_grids))

    @cached_property
    def param_stack(self) -> np.ndarray:
        return param_tuple_stack(self.parameter_grids)

    def mode(self) -> np.ndarray:
        """Parameter tuple of largest mass, shape (k, d)."""
        flat = int(np.argmax(self.weights))
        return self.param_stack[flat]


@dataclass(eq=False)
class FactoredCoupling:
    """Sinkhorn solver state: kernels plus one dual potential vector per snapshot.

    ``log_potentials`` is canonical (entries may be -inf where a target weight
    is zero); ``potentials`` is its exponential. The implicit coupling is
    Gamma[p, y_1..y_N] = prod_i K_i[p, y_i] * a_i[y_i].
    """

    kernels: CostKernelSet
    log_potentials: np.ndarray  # (N, |X|)
    converged: bool
    iterations: int
    marginal_residual: float
    residual_history: np.ndarray
    objective: float
    used_log_domain: bool

    @property
    def potentials(self) -> np.ndarray:
        return np.exp(self.log_potentials)


def _log_factor_sums(log_kernels: np.ndarray, log_a: np.ndarray) -> np.ndarray:
    """log m_i(p) = log sum_y K_i[p, y] a_i[y], for all snapshots; shape (N, P)."""
    return logsumexp(log_kernels + log_a[:, None, :], axis=2)


def _log_marginal(log_kernels: np.ndarray, log_m: np.ndarray, log_a: np.ndarray, j: int) -> np.ndarray:
    """log P_{y_j}(Gamma) from cached factor sums; shape (|X|,)."""
    log_w = log_m.sum(axis=0) - log_m[j]
    with np.errstate(invalid="ignore"):
        log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    return logsumexp(log_kernels[j] + log_w[:, None], axis=0) + log_a[j]


def _log_marginal_fresh(log_kernels: np.ndarray, log_a: np.ndarray, j: int) -> np.ndarray:
    log_m = _log_factor_sums(log_kernels, log_a)
    return _log_marginal(log_kernels, log_m, log_a, j)


def project_marginal(state: FactoredCoupling, j: int) -> np.ndarray:
    """Marginal of the implicit coupling on snapshot j's support, shape (|X|,).

    Matches the brute-force sum over the dense tensor; computed factored in
    O(N * P * |X|).
    """
    n = state.kernels.n_snapshots
    if not -n <= j < n:
        raise IndexError(f"snapshot index {j} out of range for {n} snapshots")
    j = j % n
    return np.exp(_log_marginal_fresh(state.kernels.log_kernels, state.log_potentials, j))


def extract_param_coupling(state: FactoredCoupling) -> ParamCoupling:
    """Project the implicit coupling onto the parameter tuple, normalized to mass 1."""
    if not state.converged:
        warnings.warn("extracting parameter coupling from a non-converged state", RuntimeWarning)
    log_m = _log_factor_sums(state.kernels.log_kernels, state.log_potentials)
    log_w = log_m.sum(axis=0)
    log_w -= logsumexp(log_w)
    weights = np.exp(log_w).reshape(state.kernels.param_shape)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        raise SolverError("parameter coupling degenerated; epsilon too small for the cost scale")
    return ParamCoupling(state.kernels.parameter_grids, weights / total)


def transport_objective_from_logs(kernels: CostKernelSet, log_a: np.ndarray) -> float:
    """<c, Gamma> computed kernel-wise, without materializing the coupling."""
    log_m = _log_factor_sums(kernels.log_kernels, log_a)
    log_total = log_m.sum(axis=0)  # (P,)
    obj = 0.0
    for i in range(kernels.n_snapshots):
        log_w = log_total - log_m[i]
        with np.errstate(invalid="ignore"):
            log_w = np.where(np.isnan(log_w), -np.inf, log_w)
        log_pair = log_w[:, None] + kernels.log_kernels[i] + log_a[i][None, :]
        obj += float(np.sum(np.exp(log_pair) * kernels.weighted_cost(i)))
    return obj


class _SwitchToLog(Exception):
    def __init__(self, log_a: np.ndarray, history: List[float], sweeps: int):
        self.log_a = log_a
        self.history = history
        self.sweeps = sweeps


def _with_log_zeros(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _log_targets(targets: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(targets)


def _sweep_exp_numpy(kern: np.ndarray, a: np.ndarray, m: np.ndarray, targets: np.ndarray) -> float:
    """One full exponential-domain sweep in ascending snapshot order.

    Updates a and m in place. Returns the max L1 marginal violation observed
    just before each snapshot's own correction, or -1.0 when values leave the
    representable range (the caller switches to log-domain updates).
    """
    n = kern.shape[0]
    residual = 0.0
    for j in range(n):
        w = np.prod(np.delete(m, j, axis=0), axis=0) if n > 1 else np.ones(kern.shape[1])
        phi = kern[j].T @ w
        current = a[j] * phi
        residual = max(residual, float(np.abs(current - targets[j]).sum()))
        positive = targets[j] > 0
        if not np.isfinite(phi).all() or np.any(phi[positive] <= 0):
            return -1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            a_new = np.where(positive, targets[j] / phi, 0.0)
        live = a_new[positive]
        if live.size and (live.min() < _POTENTIAL_LO or live.max() > _POTENTIAL_HI):
            return -1.0
        a[j] = a_new
        m[j] = kern[j] @ a_new
        if not np.isfinite(m[j]).all():
            return -1.0
    return residual


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _sweep_exp_jit(kern, a, m, targets, positive, wbuf, phibuf):  # pragma: no cover - compiled
        n, p, x = kern.shape
        residual = 0.0
        for j in range(n):
            for q in range(p):
                w = 1.0
                for i in range(n):
                    if i != j:
                        w *= m[i, q]
                wbuf[q] = w
            for y in range(x):
                phibuf[y] = 0.0
            for q in range(p):
                wq = wbuf[q]
                for y in range(x):
                    phibuf[y] += kern[j, q, y] * wq
            res_j = 0.0
            for y in range(x):
                res_j += abs(a[j, y] * phibuf[y] - targets[j, y])
            if res_j > residual:
                residual = res_j
            for y in range(x):
                if positive[j, y]:
                    if not (phibuf[y] > 0.0) or not np.isfinite(phibuf[y]):
                        return -1.0
                    v = targets[j, y] / phibuf[y]
                    if v < _POTENTIAL_LO or v > _POTENTIAL_HI:
                        return -1.0
                    a[j, y] = v
                else:
                    a[j, y] = 0.0
            for q in range(p):
                s = 0.0
                for y in range(x):
                    s += kern[j, q, y] * a[j, y]
                if not np.isfinite(s):
                    return -1.0
                m[j, q] = s
        return residual


def _make_exp_sweeper(kern: np.ndarray, a: np.ndarray, m: np.ndarray, targets: np.ndarray):
    """Callable running one exp-domain sweep in place; -1.0 signals unsafe values."""
    if _HAVE_NUMBA:
        positive = targets > 0
        wbuf = np.empty(kern.shape[1])
        phibuf = np.empty(kern.shape[2])
        return lambda: _sweep_exp_jit(kern, a, m, targets, positive, wbuf, phibuf)
    return lambda: _sweep_exp_numpy(kern, a, m, targets)


def _sweep_log(log_kern: np.ndarray, log_a: np.ndarray, log_m: np.ndarray, targets: np.ndarray, log_targets: np.ndarray) -> float:
    """One full log-domain sweep; updates log_a and log_m in place."""
    n = log_kern.shape[0]
    residual = 0.0
    for j in range(n):
        log_w = log_m.sum(axis=0) - log_m[j]
        with np.errstate(invalid="ignore"):
            log_w = np.where(np.isnan(log_w), -np.inf, log_w)
        log_phi = logsumexp(log_kern[j] + log_w[:, None], axis=0)
        current = np.exp(log_phi + log_a[j])
        residual = max(residual, float(np.abs(current - targets[j]).sum()))
        positive = targets[j] > 0
        if np.any(np.isneginf(log_phi[positive])):
            raise SolverError(
                "zero marginal projection where the target is positive; "
                "epsilon too small for the cost scale or kernel disconnected"
            )
        log_a[j] = np.where(positive, log_targets[j] - log_phi, -np.inf)
        log_m[j] = logsumexp(log_kern[j] + log_a[j][None, :], axis=1)
    return residual


def _exp_phase(kernels: CostKernelSet, targets: np.ndarray, tol: float, max_iter: int):
    """Exponential-domain iteration; raises _SwitchToLog when unsafe."""
    kern = kernels.kernels()
    n, _, nx = kern.shape
    a = np.ones((n, nx))
    m = np.einsum("npx,nx->np", kern, a)
    run_sweep = _make_exp_sweeper(kern, a, m, targets)
    history: List[float] = []
    snapshot_a = a.copy()
    for sweep in range(max_iter):
        snapshot_a[...] = a
        res = run_sweep()
        if res < 0.0:
            log_a = _with_log_zeros(snapshot_a)
            raise _SwitchToLog(log_a, history, sweep)
        history.append(res)
        if res <= tol:
            log_a = _with_log_zeros(a)
            final = _final_residual(kernels.log_kernels, log_a, targets)
            if final <= tol:
                return log_a, history, sweep + 1, final, True
    log_a = _with_log_zeros(a)
    return log_a, history, max_iter, _final_residual(kernels.log_kernels, log_a, targets), False


def _log_phase(kernels: CostKernelSet, targets: np.ndarray, tol: float, max_iter: int, log_a: np.ndarray, history: List[float], done: int):
    log_kern = kernels.log_kernels
    log_t = _log_targets(targets)
    log_m = _log_factor_sums(log_kern, log_a)
    for sweep in range(done, max_iter):
        res = _sweep_log(log_kern, log_a, log_m, targets, log_t)
        history.append(res)
        if res <= tol:
            final = _final_residual(log_kern, log_a, targets)
            if final <= tol:
                return log_a, history, sweep + 1, final, True
    return log_a, history, max_iter, _final_residual(log_kern, log_a, targets), False


def _final_residual(log_kern: np.ndarray, log_a: np.ndarray, targets: np.ndarray) -> float:
    log_m = _log_factor_sums(log_kern, log_a)
    worst = 0.0
    for j in range(log_kern.shape[0]):
        marg = np.exp(_log_marginal(log_kern, log_m, log_a, j))
        worst = max(worst, float(np.abs(marg - targets[j]).sum()))
    return worst


def sinkhorn_solve(
    kernels: CostKernelSet,
    dataset: SnapshotDataset,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> FactoredCoupling:
    """Run multiplicative scaling sweeps until every marginal matches its target.

    Sweeps cycle snapshots in ascending timestamp order, updating
    a_j <- a_j * p_j / P_{y_j}(Gamma). Convergence is declared when the max
    L1 marginal violation of the final state is at most tol. Raises
    SolverError when the iteration produces non-finite values or a zero
    projection where the target carries mass (signals epsilon too small).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    targets = dataset.target_matrix()
    if targets.shape != (kernels.n_snapshots, kernels.n_support):
        raise ValueError("dataset does not match kernel shapes")
    used_log = False
    if kernels.log_kernels.min() >= _EXP_SAFE_LOG:
        try:
            log_a, history, iters, final, ok = _exp_phase(kernels, targets, tol, max_iter)
        except _SwitchToLog as sw:
            logger.info("switching to log-domain updates after %d sweeps", sw.sweeps)
            used_log = True
            log_a, history, iters, final, ok = _log_phase(
                kernels, targets, tol, max_iter, sw.log_a, sw.history, sw.sweeps
            )
    else:
        used_log = True
        nx = kernels.n_support
        log_a0 = np.zeros((kernels.n_snapshots, nx))
        log_a, history, iters, final, ok = _log_phase(kernels, targets, tol, max_iter, log_a0, [], 0)
    if not np.isfinite(final):
        raise SolverError("non-finite marginal residual; epsilon too small for the cost scale")
    objective = transport_objective_from_logs(kernels, log_a)
    if not ok:
        logger.warning("sinkhorn stopped at max_iter=%d with residual %.3e", max_iter, final)
    return FactoredCoupling(
        kernels=kernels,
        log_potentials=log_a,
        converged=ok,
        iterations=iters,
        marginal_residual=final,
        residual_history=np.asarray(history),
        objective=objective,
        used_log_domain=used_log,
    )


def benchmark_sweep_seconds(
    kernels: CostKernelSet,
    dataset: SnapshotDataset,
    n_sweeps: int = 20,
    repeats: int = 3,
) -> float:
    """Wall time of one exponential-domain sweep, min over repeated timed runs.

    Used by the complexity-scaling checks; runs the same inner loop as the
    solver (including its inline residual bookkeeping) for a fixed number of
    sweeps after one warmup sweep.
    """
    targets = dataset.target_matrix()
    kern = kernels.kernels()
    best = np.inf
    for _ in range(repeats):
        a = np.ones((kernels.n_snapshots, kernels.n_support))
        m = np.einsum("npx,nx->np", kern, a)
        run_sweep = _make_exp_sweeper(kern, a, m, targets)
        run_sweep()  # warmup (and JIT compilation, when available)
        start = time.perf_counter()
        for _ in range(n_sweeps):
            run_sweep()
        best = min(best, (time.perf_counter() - start) / n_sweeps)
    return best


# ---------------------------------------------------------------------------
# Two-marginal transport (the classical case), entropic and exact paths
# ---------------------------------------------------------------------------

_LP_MAX_SUPPORT = 64


def _pairwise_sq_cost(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    if mu.dim != nu.dim:
        raise ValueError("measures must share one state dimension")
    return cdist(mu.grid.points, nu.grid.points, "sqeuclidean")


def _check_mass(mu: DiscreteMeasure, nu: DiscreteMeasure) -> None:
    if abs(mu.weights.sum() - nu.weights.sum()) > 1e-9:
        raise ValueError("measures must carry equal mass")


def two_marginal_w2(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    epsilon: float,
    tol: float = 1e-9,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[float, np.ndarray]:
    """Entropic transport cost <c, plan> (entropy term excluded) and the plan.

    Log-domain scaling throughout. The returned value is the transport term
    of a feasible plan, so it upper-bounds the exact discrete squared
    Wasserstein cost and approaches it from above as epsilon shrinks.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_mass(mu, nu)
    cost = _pairwise_sq_cost(mu, nu)
    log_k = -(cost - cost.min()) / epsilon
    with np.errstate(divide="ignore"):
        log_p = np.log(mu.weights)
        log_q = np.log(nu.weights)
    log_u = np.zeros(len(mu.weights))
    log_v = np.zeros(len(nu.weights))
    for _ in range(max_iter):
        log_u = log_p - logsumexp(log_k + log_v[None, :], axis=1)
        log_u[np.isnan(log_u)] = -np.inf
        log_v = log_q - logsumexp(log_k + log_u[:, None], axis=0)
        log_v[np.isnan(log_v)] = -np.inf
        plan = np.exp(log_u[:, None] + log_k + log_v[None, :])
        err = max(
            float(np.abs(plan.sum(axis=1) - mu.weights).sum()),
            float(np.abs(plan.sum(axis=0) - nu.weights).sum()),
        )
        if err <= tol:
            break
    else:
        logger.warning("two-marginal sinkhorn stopped at max_iter with residual %.3e", err)
    return float(np.sum(plan * cost)), plan


def _monotone_plan_1d(x: np.ndarray, p: np.ndarray, y: np.ndarray, q: np.ndarray) -> List[Tuple[int, int, float]]:
    """North-west-corner coupling of sorted 1D supports (optimal for convex costs)."""
    entries = []
    i = j = 0
    pi, qj = p[0], q[0]
    while True:
        take = min(pi, qj)
        if take > 0:
            entries.append((i, j, take))
        pi -= take
        qj -= take
        if pi <= 1e-17 and i + 1 < len(p):
            i += 1
            pi = p[i]
        elif qj <= 1e-17 and j + 1 < len(q):
            j += 1
            qj = q[j]
        elif pi <= 1e-17 and qj <= 1e-17:
            break
        elif pi <= 1e-17 or qj <= 1e-17:
            # leftover on one side only: floating-point crumbs, stop
            break
    return entries


def two_marginal_w2_exact(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Tuple[float, np.ndarray]:
    """Exact squared-W2 transport cost of the discrete problem, and an optimal plan.

    One-dimensional inputs use the monotone (quantile) coupling, which is the
    exact optimizer for squared distance; higher dimensions solve the linear
    program directly and are limited to supports of at most 64 points each.
    """
    _check_mass(mu, nu)
    if mu.dim == 1:
        x = mu.grid.points[:, 0]
        y = nu.grid.points[:, 0]
        ix = np.argsort(x, kind="stable")
        iy = np.argsort(y, kind="stable")
        entries = _monotone_plan_1d(x[ix], mu.weights[ix], y[iy], nu.weights[iy])
        plan = np.zeros((len(x), len(y)))
        cost = 0.0
        for i, j, mass in entries:
            plan[ix[i], iy[j]] += mass
            cost += mass * (x[ix[i]] - y[iy[j]]) ** 2
        return float(cost), plan
    if len(mu.weights) > _LP_MAX_SUPPORT or len(nu.weights) > _LP_MAX_SUPPORT:
        raise ValueError(f"exact LP path limited to {_LP_MAX_SUPPORT} support points per side")
    cost = _pairwise_sq_cost(mu, nu)
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
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise SolverError(f"exact transport LP failed: {res.message}")
    return float(res.fun), res.x.reshape(n, m)
