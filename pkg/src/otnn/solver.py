"""Entropic optimal-transport solvers over dense mini-batch cost matrices.

The balanced solver enforces exact marginals ``a`` and ``b``; the
unbalanced solver replaces the marginal constraints with KL penalties
weighted by ``lam`` and minimizes

    sum_ij gamma_ij c_ij + epsilon * sum_ij gamma_ij log gamma_ij
        + lam * (KL(gamma 1 || a) + KL(gamma^T 1 || b))

with the generalized KL divergence KL(p||q) = sum p log(p/q) - p + q and
the 0 log 0 = 0 convention. Both solvers run Sinkhorn-style scaling
iterations, switching to log-domain updates (with an epsilon-annealed
warm start) whenever the entropy coefficient is small or the kernel
would underflow, so no NaN/Inf ever reaches the returned plan.

Because the entropic term is the plain ``gamma log gamma`` sum rather
than its mass-corrected variant, the unbalanced fixed point uses the
kernel ``exp(-C/epsilon - 1)``; the scaling exponent is
``lam / (lam + epsilon)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import BalanceError, DomainError, ShapeError, SizeLimitError, ValidationError

#: Below this entropy coefficient the scaling form is numerically fragile.
LOG_DOMAIN_EPSILON = 0.05
#: Kernel exponent magnitude beyond which the scaling form may underflow.
_MAX_KERNEL_EXPONENT = 200.0
#: Iterations spent on each warm-start annealing level.
_ANNEAL_ITERS = 30
_ANNEAL_FACTOR = 3.0


@dataclass
class OTParams:
    """Solver knobs: entropy coefficient, marginal relaxation, stopping rule."""

    epsilon: float
    lam: float = 0.5
    tol: float = 1e-6
    max_iter: int = 1000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be > 0")
        if self.lam <= 0:
            raise ValidationError("lam must be > 0")
        if self.tol <= 0:
            raise ValidationError("tol must be > 0")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")


@dataclass
class TransportPlan:
    """Dense coupling matrix with convergence metadata."""

    matrix: np.ndarray
    converged: bool
    iterations: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ShapeError("transport plan must be a 2-d matrix")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise DomainError("transport plan entries must be finite and >= 0")
        object.__setattr__(self, "matrix", m)

    @property
    def row_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


def squared_l2_cost(A, B) -> np.ndarray:
    """Pairwise squared euclidean distances, entries[i][j] = ||A_i - B_j||^2.

    For unit vectors this equals 2 - 2 cos(A_i, B_j).
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ShapeError(
            f"vector dimensions differ: {A.shape[1]} vs {B.shape[1]}"
        )
    sq_a = np.einsum("ij,ij->i", A, A)
    sq_b = np.einsum("ij,ij->i", B, B)
    cost = sq_a[:, None] + sq_b[None, :] - 2.0 * (A @ B.T)
    return np.maximum(cost, 0.0)


def gibbs_kernel(C: np.ndarray, epsilon: float) -> np.ndarray:
    """exp(-C / epsilon); strictly decreasing in the cost entries."""
    return np.exp(-np.asarray(C, dtype=np.float64) / epsilon)


def _check_cost(C) -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2:
        raise ShapeError("cost matrix must be 2-d")
    if not np.all(np.isfinite(C)):
        raise ValidationError("cost matrix must be finite")
    if np.any(C < 0):
        raise ValidationError("cost matrix entries must be >= 0")
    return C


def _check_measures(C, a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (C.shape[0],) or b.shape != (C.shape[1],):
        raise ShapeError(
            f"measure sizes {a.shape}/{b.shape} do not match cost {C.shape}"
        )
    if np.any(a < 0) or np.any(b < 0):
        raise ValidationError("measure weights must be >= 0")
    return a, b


def _needs_log_domain(C, epsilon) -> bool:
    cmax = float(C.max()) if C.size else 0.0
    return epsilon < LOG_DOMAIN_EPSILON or cmax / epsilon > _MAX_KERNEL_EXPONENT


def _anneal_levels(C, epsilon) -> list[float]:
    """Entropy schedule from the cost scale down to the target epsilon."""
    if epsilon >= LOG_DOMAIN_EPSILON:
        return [epsilon]
    top = float(C.max()) if C.size else 0.0
    if top <= epsilon:
        return [epsilon]
    levels = []
    e = top
    while e > epsilon * (1.0 + 1e-9):
        levels.append(e)
        e /= _ANNEAL_FACTOR
    levels.append(epsilon)
    return levels


def _logsumexp(M, axis):
    mx = M.max(axis=axis, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    out = np.log(np.sum(np.exp(M - mx), axis=axis)) + np.squeeze(mx, axis=axis)
    return out


def sinkhorn_balanced(C, a, b, params: OTParams) -> TransportPlan:
    """Entropic OT with hard marginals; gamma = diag(u) exp(-C/eps) diag(v).

    Converged means the l1 marginal violation dropped below ``params.tol``
    before ``params.max_iter`` main-loop iterations.
    """
    C = _check_cost(C)
    a, b = _check_measures(C, a, b)
    if abs(a.sum() - 1.0) > 1e-9 or abs(b.sum() - 1.0) > 1e-9:
        raise BalanceError(
            f"balanced solver requires unit-mass measures, got {a.sum()!r}/{b.sum()!r}"
        )
    if _needs_log_domain(C, params.epsilon):
        return _balanced_log(C, a, b, params)
    return _balanced_scaling(C, a, b, params)


def _marginal_violation(gamma, a, b) -> float:
    return float(
        np.abs(gamma.sum(axis=1) - a).sum() + np.abs(gamma.sum(axis=0) - b).sum()
    )


def _balanced_scaling(C, a, b, params) -> TransportPlan:
    K = gibbs_kernel(C, params.epsilon)
    u = np.ones_like(a)
    v = np.ones_like(b)
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(a > 0, a / (K @ v), 0.0)
            v = np.where(b > 0, b / (K.T @ u), 0.0)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            return _balanced_log(C, a, b, params)
        if it % 10 == 0 or it == params.max_iter:
            gamma = u[:, None] * K * v[None, :]
            if _marginal_violation(gamma, a, b) < params.tol:
                converged = True
                break
    gamma = u[:, None] * K * v[None, :]
    return TransportPlan(gamma, converged, it)


def _balanced_log(C, a, b, params) -> TransportPlan:
    with np.errstate(divide="ignore"):
        la = np.log(a)
        lb = np.log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    levels = _anneal_levels(C, params.epsilon)
    total = 0
    converged = False
    for li, e in enumerate(levels):
        final = li == len(levels) - 1
        budget = params.max_iter if final else _ANNEAL_ITERS
        for it in range(1, budget + 1):
            total += 1
            f = e * (la - _logsumexp((g[None, :] - C) / e, axis=1))
            g = e * (lb - _logsumexp((f[:, None] - C) / e, axis=0))
            if it % 10 == 0 or it == budget:
                gamma = np.exp((f[:, None] + g[None, :] - C) / e)
                if _marginal_violation(gamma, a, b) < params.tol:
                    if final:
                        converged = True
                    break
    gamma = np.exp((f[:, None] + g[None, :] - C) / params.epsilon)
    return TransportPlan(gamma, converged, total)


def sinkhorn_unbalanced(C, a, b, params: OTParams) -> TransportPlan:
    """KL-relaxed entropic OT via generalized Sinkhorn scaling iterations.

    Non-convergence is reported through the ``converged`` flag, never
    raised, so callers can proceed with the best available plan.
    """
    C = _check_cost(C)
    a, b = _check_measures(C, a, b)
    if _needs_log_domain(C, params.epsilon):
        return _unbalanced_log(C, a, b, params)
    return _unbalanced_scaling(C, a, b, params)


def _unbalanced_scaling(C, a, b, params) -> TransportPlan:
    eps, lam = params.epsilon, params.lam
    fi = lam / (lam + eps)
    # plain-entropy objective: kernel carries the extra e^{-1} factor
    K = gibbs_kernel(C + eps, eps)
    u = np.ones_like(a)
    v = np.ones_like(b)
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        u_prev, v_prev = u, v
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(a > 0, (a / (K @ v)) ** fi, 0.0)
            v = np.where(b > 0, (b / (K.T @ u)) ** fi, 0.0)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            return _unbalanced_log(C, a, b, params)
        if it % 5 == 0 or it == params.max_iter:
            err = _dual_change(u, u_prev, eps) + _dual_change(v, v_prev, eps)
            if err < params.tol:
                converged = True
                break
    gamma = u[:, None] * K * v[None, :]
    return TransportPlan(gamma, converged, it)


def _dual_change(u, u_prev, eps) -> float:
    """l-inf change of eps*log(u), treating 0 -> 0 transitions as no change."""
    with np.errstate(divide="ignore", invalid="ignore"):
        d = eps * np.abs(np.log(u) - np.log(u_prev))
    return float(np.max(np.nan_to_num(d, nan=0.0, posinf=np.inf), initial=0.0))


def _unbalanced_log(C, a, b, params) -> TransportPlan:
    lam = params.lam
    with np.errstate(divide="ignore"):
        la = np.log(a)
        lb = np.log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    levels = _anneal_levels(C, params.epsilon)
    total = 0
    converged = False
    for li, e in enumerate(levels):
        final = li == len(levels) - 1
        fi = lam / (lam + e)
        Ce = C + e
        budget = params.max_iter if final else _ANNEAL_ITERS
        for it in range(1, budget + 1):
            total += 1
            f_prev, g_prev = f, g
            f = fi * e * (la - _logsumexp((g[None, :] - Ce) / e, axis=1))
            g = fi * e * (lb - _logsumexp((f[:, None] - Ce) / e, axis=0))
            err = _potential_change(f, f_prev) + _potential_change(g, g_prev)
            if err < params.tol:
                if final:
                    converged = True
                break
    gamma = np.exp((f[:, None] + g[None, :] - (C + params.epsilon)) / params.epsilon)
    return TransportPlan(gamma, converged, total)


def _potential_change(f, f_prev) -> float:
    with np.errstate(invalid="ignore"):
        d = np.abs(f - f_prev)
    d = np.where(np.isneginf(f) & np.isneginf(f_prev), 0.0, d)
    return float(np.max(np.nan_to_num(d, nan=np.inf), initial=0.0))


def _xlogx(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def generalized_kl(p, q) -> float:
    """sum p log(p/q) - p + q with 0 log 0 = 0; +inf if p charges a q-null atom."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ShapeError("KL operands must share a shape")
    if np.any((q == 0) & (p > 0)):
        return math.inf
    pos = p > 0
    val = float(np.sum(p[pos] * np.log(p[pos] / q[pos])) - p.sum() + q.sum())
    return val


def ot_objective(plan, C, a, b, params: OTParams) -> float:
    """Transport cost + entropy term + KL marginal-relaxation terms.

    Evaluates sum(gamma * C) + eps * sum(gamma log gamma)
    + lam * (KL(gamma 1 || a) + KL(gamma^T 1 || b)).
    """
    gamma = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=np.float64)
    if np.any(gamma < 0):
        raise DomainError("transport plan entries must be >= 0")
    C = _check_cost(C)
    if gamma.shape != C.shape:
        raise ShapeError(f"plan shape {gamma.shape} != cost shape {C.shape}")
    a, b = _check_measures(C, a, b)
    transport, entropy, kl = ot_objective_terms(gamma, C, a, b, params)
    return transport + entropy + kl


def ot_objective_terms(gamma, C, a, b, params: OTParams):
    """(transport, entropy, kl) components of the unbalanced objective."""
    transport = float(np.sum(gamma * C))
    entropy = params.epsilon * float(_xlogx(gamma).sum())
    kl = params.lam * (
        generalized_kl(gamma.sum(axis=1), a) + generalized_kl(gamma.sum(axis=0), b)
    )
    return transport, entropy, kl


#: Hard cap for the factorial-time exact oracle.
BRUTE_FORCE_MAX_N = 8


def brute_force_balanced(C) -> TransportPlan:
    """Exact balanced OT for uniform marginals by permutation enumeration.

    Scans all n! permutation matrices scaled by 1/n and returns the
    cheapest; ties keep the lexicographically first permutation.
    """
    C = _check_cost(C)
    n, m = C.shape
    if n != m:
        raise ShapeError("brute-force oracle requires a square cost matrix")
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimitError(
            f"brute-force oracle limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )
    best_perm = None
    best_cost = math.inf
    count = 0
    rows = np.arange(n)
    for perm in permutations(range(n)):
        count += 1
        cost = float(C[rows, perm].sum()) / n
        if cost < best_cost:
            best_cost = cost
            best_perm = perm
    gamma = np.zeros((n, n))
    gamma[rows, best_perm] = 1.0 / n
    return TransportPlan(gamma, True, count)
