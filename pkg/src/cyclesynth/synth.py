"""End-to-end synthesis: product construction, accepting-component
analysis, per-component reach + per-cycle policy iteration, and the
stitched policy attaining the minimum gain over reachable components.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

import numpy as np

from . import acpc, amec as amec_mod
from .acpc import CycleProblem, PolicyIterationStatus
from .dra import Dra
from .errors import NoReachableAmec
from .mdp import LabeledMdp, StationaryPolicy
from .product import ExecutablePolicy, ProductMdp, build_product, project_policy


@dataclass(frozen=True)
class AmecSolution:
    amec_index: int
    lam: float
    status: PolicyIterationStatus
    iterations: int
    interior_policy: StationaryPolicy  # on component-local state indices
    states: frozenset[int]


@dataclass(frozen=True)
class SynthesisResult:
    product: ProductMdp
    winning_amec_index: int
    lambda_per_amec: tuple[AmecSolution, ...]
    stitched_policy: StationaryPolicy  # total on product states
    optimal_cost: float
    optimal: bool
    diagnostics: dict

    def executable(self) -> ExecutablePolicy:
        return project_policy(self.product, self.stitched_policy)

    def winning_states(self) -> frozenset[int]:
        return next(s.states for s in self.lambda_per_amec
                    if s.amec_index == self.winning_amec_index)

    def policy_json_dict(self) -> dict:
        return {
            "type": "product-stationary",
            "tracking": "dra",
            "choices": {self.product.state_name(i): self.product.mdp.actions[a]
                        for i, a in sorted(self.stitched_policy.choice.items())},
            "lambda": self.optimal_cost,
            "optimal": self.optimal,
            "amec": self.winning_amec_index,
        }


def amec_cycle_problem(product: ProductMdp, component: amec_mod.Amec,
                       ) -> tuple[CycleProblem, frozenset[int], dict[int, int], list[int]]:
    """Restrict the product to a component, renumbering its states to
    0..m-1.  Returns the cycle problem, the local K set and the
    local<->global index maps."""
    ordered = sorted(component.states)
    local = {g: k for k, g in enumerate(ordered)}
    trans = {}
    cost = {}
    available = []
    for g in ordered:
        acts = component.actions[g]
        available.append(tuple(acts))
        for a in acts:
            row = np.zeros(len(ordered))
            for j, p in product.transitions(g, a):
                row[local[j]] += p
            trans[(local[g], a)] = row
            cost[(local[g], a)] = product.cost(g, a)
    sub = LabeledMdp(
        n_states=len(ordered),
        actions=product.mdp.actions,
        available=tuple(available),
        trans=trans,
        cost=cost,
        init=0,
        props=frozenset([product.pi]),
        label=tuple(frozenset([product.pi]) if g in component.pi_states else frozenset()
                    for g in ordered),
    )
    problem = CycleProblem(mdp=sub, pi_states=frozenset(local[g] for g in component.pi_states))
    k_local = frozenset(local[g] for g in component.k_states)
    return problem, k_local, local, ordered


def _solve_component(product: ProductMdp, idx: int, component, retries: int, tol: float):
    """Per-cycle solve inside one reachable component.  Returns
    (solution, reach policy, interior choices on product states) or a
    skip reason string."""
    safe = amec_mod.almost_sure_reach_set(product, component.states)
    if product.init not in safe:
        return "not reachable almost surely"
    if not component.pi_states:
        return "no cycle states inside"
    problem, k_local, local, ordered = amec_cycle_problem(product, component)
    result = acpc.policy_iteration(problem, k_local, tol=tol)
    rng = Random(idx)
    for _ in range(retries):
        if result.status is PolicyIterationStatus.OPTIMAL:
            break
        init = acpc.random_initial_policy(problem, k_local, rng)
        if init is None:
            continue
        retry = acpc.policy_iteration(problem, k_local, init=init, tol=tol)
        if (retry.status is PolicyIterationStatus.OPTIMAL
                or retry.gain_bias.lam < result.gain_bias.lam):
            result = retry
    solution = AmecSolution(
        amec_index=idx,
        lam=result.gain_bias.lam,
        status=result.status,
        iterations=result.iterations,
        interior_policy=result.policy,
        states=component.states,
    )
    reach = amec_mod.reach_policy(product, component)
    interior = {g: result.policy.choice[local[g]] for g in ordered}
    return solution, reach, interior


def synthesize(mdp: LabeledMdp, dra: Dra, pi: str, retries: int = 0,
               jobs: int = 1, tol: float = acpc.EVAL_TOL) -> SynthesisResult:
    """Steps: build the product, find reachable accepting components,
    solve the per-cycle problem inside each, and stitch the reach policy
    with the interior policy of the component with the least gain.

    Components are independent; jobs > 1 solves them in worker threads.
    Raises NoReachableAmec when no policy satisfies the specification
    almost surely while completing cycles.
    """
    product = build_product(mdp, dra, pi)
    components = amec_mod.accepting_amecs(product)
    diagnostics = {
        "productStates": product.n_states,
        "rawProductStates": mdp.n_states * dra.n_states,
        "amecs": len(components),
        "amecSizes": [len(c.states) for c in components],
        "skipped": [],
    }
    if not components:
        raise NoReachableAmec("the product has no accepting maximal end component")

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(
                lambda item: _solve_component(product, item[0], item[1], retries, tol),
                enumerate(components)))
    else:
        outcomes = [_solve_component(product, idx, c, retries, tol)
                    for idx, c in enumerate(components)]

    solutions: list[AmecSolution] = []
    reach_policies: dict[int, StationaryPolicy] = {}
    interiors: dict[int, dict[int, int]] = {}
    for idx, outcome in enumerate(outcomes):
        if isinstance(outcome, str):
            diagnostics["skipped"].append({"amec": idx, "reason": outcome})
            continue
        solution, reach, interior = outcome
        solutions.append(solution)
        reach_policies[idx] = reach
        interiors[idx] = interior

    if not solutions:
        raise NoReachableAmec(
            "no reachable accepting maximal end component admits finite "
            "per-cycle cost")

    winner = min(solutions, key=lambda sol: (sol.lam, sol.amec_index))
    stitched = dict(reach_policies[winner.amec_index].choice)
    stitched.update(interiors[winner.amec_index])
    diagnostics["iterations"] = {str(s.amec_index): s.iterations for s in solutions}
    return SynthesisResult(
        product=product,
        winning_amec_index=winner.amec_index,
        lambda_per_amec=tuple(solutions),
        stitched_policy=StationaryPolicy(stitched),
        optimal_cost=winner.lam,
        optimal=all(s.status is PolicyIterationStatus.OPTIMAL for s in solutions),
        diagnostics=diagnostics,
    )
