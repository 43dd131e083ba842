"""Dense linear-algebra kernels: linear solves, Cesaro-limit matrix,
deviation matrix and transient-matrix inversion.

All routines operate on plain numpy arrays (row-major, float64) and are
pure functions.  The Cesaro limit is computed structurally from the
recurrent-class decomposition of the chain rather than by truncating the
running average, so it is exact for periodic chains as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotStochastic, NotTransient, NumericalFailure

DEFAULT_TOL = 1e-8
RANK_RCOND = 1e-10


@dataclass
class SolveResult:
    x: np.ndarray
    rank_deficient: bool
    residual: float


def solve_linear(A, b, tol: float = DEFAULT_TOL) -> SolveResult:
    """Solve A x = b.

    Full-rank systems must meet the residual tolerance
    ``|Ax - b|_inf <= tol * max(1, |b|_inf)``.  Rank-deficient systems
    return the minimum-norm least-squares solution with the flag set.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != matrix size {A.shape[0]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NumericalFailure("non-finite entries in the linear system")
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=RANK_RCOND)
    residual = float(np.max(np.abs(A @ x - b))) if A.size else 0.0
    deficient = rank < A.shape[0]
    if not deficient and residual > tol * max(1.0, float(np.max(np.abs(b), initial=0.0))):
        raise NumericalFailure(f"linear solve residual {residual:.3e} exceeds tolerance")
    return SolveResult(x=x, rank_deficient=deficient, residual=residual)


def _check_stochastic(P, tol=1e-9):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotStochastic(f"expected a square matrix, got shape {P.shape}")
    if np.any(P < -tol) or np.any(P > 1 + tol):
        raise NotStochastic("entries outside [0, 1]")
    if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-7:
        raise NotStochastic("rows do not sum to 1")
    return P


def recurrent_classes(P) -> tuple[list[list[int]], list[int]]:
    """Recurrent classes and transient states of a stochastic matrix.

    A class is recurrent iff its strongly connected component has no
    positive-probability edge leaving it (bottom SCC).
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    succ = [np.flatnonzero(P[i] > 0.0) for i in range(n)]
    comp = _tarjan_scc(n, succ)
    n_comp = max(comp) + 1
    closed = [True] * n_comp
    for i in range(n):
        for j in succ[i]:
            if comp[j] != comp[i]:
                closed[comp[i]] = False
    classes: list[list[int]] = [[] for _ in range(n_comp)]
    for i in range(n):
        classes[comp[i]].append(i)
    recurrent = [c for k, c in enumerate(classes) if closed[k]]
    transient = sorted(i for k, c in enumerate(classes) if not closed[k] for i in c)
    return recurrent, transient


def _tarjan_scc(n, succ) -> list[int]:
    """Iterative Tarjan; returns component id per node."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    n_comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            children = succ[v]
            while pi < len(children):
                w = children[pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comp
                    if w == v:
                        break
                n_comp += 1
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comp


def stationary_distribution(P) -> np.ndarray:
    """Stationary row vector of an irreducible stochastic matrix."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, _, _, _ = np.linalg.lstsq(A, b, rcond=RANK_RCOND)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def cesaro_limit(P) -> np.ndarray:
    """Long-run average matrix P* = lim (1/N) sum_k P^k.

    Computed structurally: a stationary distribution per recurrent class
    plus absorption probabilities for transient states.
    """
    P = _check_stochastic(P)
    n = P.shape[0]
    classes, transient = recurrent_classes(P)
    star = np.zeros((n, n))
    class_dist = []
    for cls in classes:
        idx = np.array(cls)
        pi = stationary_distribution(P[np.ix_(idx, idx)])
        class_dist.append((idx, pi))
        star[np.ix_(idx, idx)] = np.tile(pi, (len(idx), 1))
    if transient:
        t = np.array(transient)
        Q = P[np.ix_(t, t)]
        # absorption probability into each recurrent class
        B = np.column_stack([P[np.ix_(t, idx)].sum(axis=1) for idx, _ in class_dist])
        absorb = np.linalg.solve(np.eye(len(t)) - Q, B)
        for k, (idx, pi) in enumerate(class_dist):
            star[np.ix_(t, idx)] = np.outer(absorb[:, k], pi)
    return star


def deviation_matrix(P, P_star=None) -> np.ndarray:
    """Deviation matrix H = (I - P + P*)^{-1} - P*."""
    P = _check_stochastic(P)
    if P_star is None:
        P_star = cesaro_limit(P)
    n = P.shape[0]
    fundamental = np.eye(n) - P + P_star
    try:
        inv = np.linalg.solve(fundamental, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"fundamental matrix is singular: {exc}") from exc
    if np.max(np.abs(fundamental @ inv - np.eye(n))) > 1e-6:
        raise NumericalFailure("fundamental matrix inverse failed the residual check")
    return inv - P_star


def transient_inverse(Q) -> np.ndarray:
    """(I - Q)^{-1} for a substochastic transient matrix Q.

    The Neumann series guarantees a nonnegative inverse; significantly
    negative entries or singularity indicate the caller's transience
    assumption is broken.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    try:
        inv = np.linalg.solve(np.eye(n) - Q, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise NotTransient(f"I - Q is singular: {exc}") from exc
    if np.min(inv, initial=0.0) < -1e-10:
        raise NotTransient("inverse has negative entries; Q is not transient")
    return inv
