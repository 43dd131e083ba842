"""Average-cost-per-cycle solver: first-return reduction to the
per-stage problem, gain-bias evaluation, the per-cycle Bellman
optimality condition and the policy-iteration algorithm.

A cycle is completed on each arrival into the cycle set (the states
labeled with the optimizing proposition).  States inside the cycle set
use the same formulas: a visit completes a cycle even when starting
from inside the set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import acps, numerics
from .errors import (
    ImproperPolicy,
    NonConvergence,
    NotCommunicating,
    NumericalFailure,
    PolicyIncomplete,
    TooLarge,
)
from .mdp import LabeledMdp, StationaryPolicy, is_communicating, is_proper

EVAL_TOL = 1e-8
TIE_TOL = 1e-9
BRUTE_FORCE_CAP = 10 ** 6


@dataclass(frozen=True)
class CycleProblem:
    """An MDP together with the nonempty set of cycle-completing states."""

    mdp: LabeledMdp
    pi_states: frozenset[int]

    def __post_init__(self):
        if not self.pi_states:
            raise ValueError("pi_states must be nonempty")
        if not self.pi_states <= set(self.mdp.states):
            raise ValueError("pi_states must be a subset of the state set")

    def pi_mask(self) -> np.ndarray:
        mask = np.zeros(self.mdp.n_states, dtype=bool)
        mask[list(self.pi_states)] = True
        return mask


@dataclass(frozen=True)
class SplitKernel:
    """P_mu split by successor membership in the cycle set: left keeps
    columns inside the set, right keeps the complement."""

    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class AcpcGainBias:
    """Per-cycle gain J, bias h and auxiliary v of a proper policy.
    lam is the scalar gain, meaningful when J is constant across states."""

    J: np.ndarray
    h: np.ndarray
    v: np.ndarray

    @property
    def lam(self) -> float:
        return float(np.max(self.J))

    def gain_spread(self) -> float:
        return float(np.max(self.J) - np.min(self.J))


class PolicyIterationStatus(Enum):
    OPTIMAL = "optimal"
    NOT_OPTIMAL = "notOptimal"


@dataclass(frozen=True)
class PolicyIterationResult:
    policy: StationaryPolicy
    gain_bias: AcpcGainBias
    status: PolicyIterationStatus
    iterations: int


def split_kernel(problem: CycleProblem, mu: StationaryPolicy) -> SplitKernel:
    if not mu.defined_on(problem.mdp.states):
        raise PolicyIncomplete("policy must be total")
    P, _ = problem.mdp.policy_matrices(mu)
    mask = problem.pi_mask()
    left = P * mask[np.newaxis, :]
    right = P * (~mask)[np.newaxis, :]
    return SplitKernel(left=left, right=right)


def first_return_kernel(problem: CycleProblem, mu: StationaryPolicy) -> np.ndarray:
    """First-entry distribution over the cycle set: (I - right)^{-1} left."""
    _require_proper(problem, mu)
    kern = split_kernel(problem, mu)
    n = problem.mdp.n_states
    inv = numerics.transient_inverse(kern.right)
    tilde = inv @ kern.left
    if np.max(np.abs(tilde.sum(axis=1) - 1.0)) > EVAL_TOL:
        raise NumericalFailure("first-return kernel rows do not sum to 1")
    return tilde


def cycle_cost(problem: CycleProblem, mu: StationaryPolicy) -> np.ndarray:
    """Expected cost to the next entry into the cycle set from each state."""
    _require_proper(problem, mu)
    kern = split_kernel(problem, mu)
    _, g = problem.mdp.policy_matrices(mu)
    return numerics.transient_inverse(kern.right) @ g


def acpc_evaluate(problem: CycleProblem, mu: StationaryPolicy,
                  tol: float = EVAL_TOL) -> AcpcGainBias:
    """Gain-bias of a proper policy, computed two independent ways.

    (a) map the policy to the per-stage problem over the first-return
    chain and evaluate there; (b) solve the 3n-equation linear system in
    (J, h, v) directly.  The gains must agree within tol.
    """
    _require_proper(problem, mu)
    kern = split_kernel(problem, mu)
    P, g = problem.mdp.policy_matrices(mu)
    n = problem.mdp.n_states

    # path (a): mapped per-stage problem
    inv = numerics.transient_inverse(kern.right)
    tilde_P = inv @ kern.left
    tilde_g = inv @ g
    mapped = acps.acps_gain_bias(tilde_P, tilde_g)

    # path (b): direct 3n x 3n system
    I = np.eye(n)
    zero = np.zeros((n, n))
    A = np.block([
        [I - P, zero, zero],
        [I - kern.right, I - P, zero],
        [zero, I - kern.right, I - P],
    ])
    b = np.concatenate([np.zeros(n), g, np.zeros(n)])
    sol = numerics.solve_linear(A, b, tol=tol)
    J = sol.x[:n]
    h = sol.x[n:2 * n]
    v = sol.x[2 * n:]

    if np.max(np.abs(J - mapped.J)) > tol:
        raise NumericalFailure(
            "gain mismatch between the mapped per-stage evaluation and the "
            f"direct linear system: {np.max(np.abs(J - mapped.J)):.3e}")
    return AcpcGainBias(J=J, h=h, v=v)


def acpc_optimality_check(problem: CycleProblem, lam: float, h,
                          tol: float = EVAL_TOL) -> bool:
    """Per-cycle Bellman condition: for every state,
    lam + h(i) = min_u [g(i,u) + sum_j P(i,u,j) h(j)
                        + lam * sum_{j not in cycle set} P(i,u,j)].
    """
    mdp = problem.mdp
    h = np.asarray(h, dtype=float)
    out_mask = ~problem.pi_mask()
    for i in mdp.states:
        best = math.inf
        for a in mdp.available[i]:
            row = mdp.trans[(i, a)]
            val = mdp.cost[(i, a)] + float(row @ h) + lam * float(row[out_mask].sum())
            best = min(best, val)
        if abs(lam + h[i] - best) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# policy iteration
# ---------------------------------------------------------------------------

def policy_iteration(problem: CycleProblem, k_states, init: StationaryPolicy | None = None,
                     tol: float = EVAL_TOL) -> PolicyIterationResult:
    """Per-cycle policy iteration over a communicating problem.

    Returns "optimal" when the final gain-bias passes the Bellman check
    and the K set intersects every recurrent class of the final policy;
    "notOptimal" with the best policy found when the constrained policy
    selection fails.
    """
    mdp = problem.mdp
    k_states = frozenset(k_states)
    if not k_states:
        raise ValueError("k_states must be nonempty")
    if not is_communicating(mdp):
        raise NotCommunicating("per-cycle policy iteration requires a communicating MDP")

    if init is not None:
        choice = _as_choice(mdp, init)
        proper_ok, _, _ = _policy_conditions(problem, choice, k_states)
        if not proper_ok:
            raise ImproperPolicy("the supplied initial policy is improper")
    else:
        choice = _initial_policy(problem, k_states)

    pi_mask = problem.pi_mask()
    cap = max(10 * mdp.n_states, 20)
    for iteration in range(cap):
        mu = StationaryPolicy(dict(enumerate(choice)))
        gb = acpc_evaluate(problem, mu, tol=tol)
        _, k_every, _ = _policy_conditions(problem, choice, k_states)
        if (gb.gain_spread() <= tol and k_every
                and acpc_optimality_check(problem, gb.lam, gb.h, tol=tol)):
            return PolicyIterationResult(mu, gb, PolicyIterationStatus.OPTIMAL, iteration)

        u_bar = _argmin_sets(mdp, lambda i, a: float(mdp.trans[(i, a)] @ gb.J))
        if all(choice[i] in u_bar[i] for i in mdp.states):
            candidates = _argmin_sets(
                mdp,
                lambda i, a: mdp.cost[(i, a)] + float(mdp.trans[(i, a)] @ gb.h)
                + float(mdp.trans[(i, a)][~pi_mask] @ gb.J[~pi_mask]),
                restrict=u_bar,
            )
        else:
            candidates = u_bar

        nxt = tuple(choice[i] if choice[i] in candidates[i] else min(candidates[i])
                    for i in mdp.states)
        nxt = _constrained_select(problem, nxt, candidates, k_states)
        if nxt is None or nxt == choice:
            mu = StationaryPolicy(dict(enumerate(choice)))
            return PolicyIterationResult(mu, gb, PolicyIterationStatus.NOT_OPTIMAL, iteration)
        choice = nxt
    raise NonConvergence(f"policy iteration exceeded {cap} iterations")


def _argmin_sets(mdp: LabeledMdp, value, restrict=None) -> list[set[int]]:
    """Per-state argmin action sets with a small numeric tie tolerance."""
    out = []
    for i in mdp.states:
        acts = restrict[i] if restrict is not None else mdp.available[i]
        vals = {a: value(i, a) for a in acts}
        best = min(vals.values())
        out.append({a for a, val in vals.items() if val <= best + TIE_TOL * max(1.0, abs(best))})
    return out


def _as_choice(mdp: LabeledMdp, mu: StationaryPolicy) -> tuple[int, ...]:
    if not mu.defined_on(mdp.states):
        raise PolicyIncomplete("policy must be total on the problem states")
    return tuple(mu.choice[i] for i in mdp.states)


def _chain_classes(mdp: LabeledMdp, choice) -> list[list[int]]:
    P = np.zeros((mdp.n_states, mdp.n_states))
    for i in mdp.states:
        P[i] = mdp.trans[(i, choice[i])]
    classes, _ = numerics.recurrent_classes(P)
    return classes


def _policy_conditions(problem: CycleProblem, choice, k_states):
    """(proper, K in every recurrent class, K in some recurrent class).

    Properness is equivalent to every recurrent class meeting the cycle
    set: closed classes avoiding it can never reach it, and transient
    states always reach some closed class.
    """
    classes = _chain_classes(problem.mdp, choice)
    proper = all(problem.pi_states & set(c) for c in classes)
    k_every = all(k_states & set(c) for c in classes)
    k_some = any(k_states & set(c) for c in classes)
    return proper, k_every, k_some


def _constrained_select(problem: CycleProblem, candidate, candidate_sets, k_states):
    """Keep the greedy candidate if it is proper with a K state in its
    recurrent classes; otherwise run one repair pass that reroutes states
    in offending recurrent classes along candidate actions leaving the
    class.  Returns None when the repair fails."""
    mdp = problem.mdp
    choice = list(candidate)
    for _ in range(mdp.n_states + 1):
        proper, k_every, k_some = _policy_conditions(problem, choice, k_states)
        if proper and k_every:
            return tuple(choice)
        classes = _chain_classes(mdp, choice)
        offending = [set(c) for c in classes
                     if not (problem.pi_states & set(c)) or not (k_states & set(c))]
        if not offending:
            return tuple(choice)
        changed = False
        for cls in offending:
            for i in sorted(cls):
                for a in sorted(candidate_sets[i]):
                    succ = set(mdp.successors(i, a).tolist())
                    if succ - cls:
                        if choice[i] != a:
                            choice[i] = a
                            changed = True
                        break
                else:
                    continue
                break
        if not changed:
            break
    proper, k_every, k_some = _policy_conditions(problem, choice, k_states)
    if proper and k_some:
        return tuple(choice)
    return None


def _initial_policy(problem: CycleProblem, k_states) -> tuple[int, ...]:
    """Proper initial policy with K states in its recurrent classes.

    Built from a backward reachability tree toward a K state (each state
    takes an action that strictly decreases tree depth, giving a single
    recurrent class containing the K state), then repaired toward the
    cycle set if that class misses it.
    """
    mdp = problem.mdp
    k_star = min(k_states)
    choice = list(_tree_policy(mdp, {k_star}))
    full_sets = [set(mdp.available[i]) for i in mdp.states]
    repaired = _constrained_select(problem, tuple(choice), full_sets, k_states)
    if repaired is not None:
        return repaired
    # fall back to a tree toward the cycle set (always proper), then repair K
    choice = _tree_policy(mdp, problem.pi_states)
    repaired = _constrained_select(problem, choice, full_sets, k_states)
    if repaired is not None:
        return repaired
    return choice


def _tree_policy(mdp: LabeledMdp, targets) -> tuple[int, ...]:
    """Backward BFS layers toward the target set on the union digraph;
    every state picks an action with a positive-probability edge that
    strictly decreases the layer."""
    n = mdp.n_states
    dist = {t: 0 for t in targets}
    frontier = set(targets)
    pred: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # j -> (i, a)
    for (i, a), row in mdp.trans.items():
        for j in np.flatnonzero(row > 0.0):
            pred[j].append((i, a))
    choice = [-1] * n
    d = 0
    while frontier:
        nxt = set()
        for j in frontier:
            for (i, a) in pred[j]:
                if i not in dist:
                    dist[i] = d + 1
                    choice[i] = a
                    nxt.add(i)
        frontier = nxt
        d += 1
    for t in targets:
        # re-enter the tree: any action works, prefer one whose support
        # includes a settled state
        acts = mdp.available[t]
        choice[t] = acts[0]
        for a in acts:
            if any(int(j) in dist for j in mdp.successors(t, a)):
                choice[t] = a
                break
    for i in range(n):
        if choice[i] < 0:
            choice[i] = mdp.available[i][0]
    return tuple(choice)


def random_initial_policy(problem: CycleProblem, k_states, rng) -> StationaryPolicy | None:
    """Random proper starting policy for policy-iteration restarts, or
    None when the random draw cannot be repaired."""
    mdp = problem.mdp
    choice = tuple(rng.choice(mdp.available[i]) for i in mdp.states)
    full_sets = [set(mdp.available[i]) for i in mdp.states]
    repaired = _constrained_select(problem, choice, full_sets, frozenset(k_states))
    if repaired is None:
        return None
    return StationaryPolicy(dict(enumerate(repaired)))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_acpc(problem: CycleProblem, k_states=None,
                     ) -> tuple[StationaryPolicy, float]:
    """Enumerate all stationary policies, keep the proper ones (and the
    K-recurrent ones when k_states is given) and return the minimum-gain
    policy.  Ties broken lexicographically by action index."""
    mdp = problem.mdp
    count = 1
    for acts in mdp.available:
        count *= len(acts)
        if count > BRUTE_FORCE_CAP:
            raise TooLarge(f"more than {BRUTE_FORCE_CAP} stationary policies")
    pi_mask = problem.pi_mask()
    k_set = frozenset(k_states) if k_states is not None else None
    best_choice = None
    best_lam = math.inf
    for choice in itertools.product(*[sorted(acts) for acts in mdp.available]):
        P = np.zeros((mdp.n_states, mdp.n_states))
        g = np.zeros(mdp.n_states)
        for i in mdp.states:
            P[i] = mdp.trans[(i, choice[i])]
            g[i] = mdp.cost[(i, choice[i])]
        J = _policy_gain(P, g, pi_mask, k_set)
        if J is None:
            continue
        lam = float(np.max(J))
        if lam < best_lam - 1e-12:
            best_lam = lam
            best_choice = choice
    if best_choice is None:
        raise ImproperPolicy("no proper stationary policy meets the constraints")
    return StationaryPolicy(dict(enumerate(best_choice))), best_lam


def _policy_gain(P, g, pi_mask, k_set):
    """Gain vector of a single chain via the first-return reduction, or
    None when the policy is improper / fails the K-recurrence filter."""
    classes, _ = numerics.recurrent_classes(P)
    pi_idx = set(np.flatnonzero(pi_mask).tolist())
    if not all(pi_idx & set(c) for c in classes):
        return None  # improper
    if k_set is not None and not all(k_set & set(c) for c in classes):
        return None
    right = P * (~pi_mask)[np.newaxis, :]
    left = P - right
    n = P.shape[0]
    inv = np.linalg.solve(np.eye(n) - right, np.column_stack([left, g]))
    tilde_P = inv[:, :n]
    tilde_g = inv[:, n]
    return numerics.cesaro_limit(tilde_P) @ tilde_g


def _require_proper(problem: CycleProblem, mu: StationaryPolicy):
    if not is_proper(problem.mdp, mu, problem.pi_states):
        raise ImproperPolicy(
            "some state cannot reach the cycle set under this policy; "
            "its per-cycle cost is infinite")
