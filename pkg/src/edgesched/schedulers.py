"""Baseline schedulers and the exhaustive optimal oracle.

PS assigns largest tasks first to whichever node finishes them earliest;
LBS feeds arrival order to the least-utilized node; both are deterministic
with ties broken toward the lower node index. The oracle enumerates every
placement of tiny instances and keeps its scoring independent from
model.evaluate_assignment so the two can cross-check each other.
"""

from __future__ import annotations

from enum import Enum
from itertools import product

import numpy as np

from .model import (
    Assignment,
    ClusterSpec,
    Metrics,
    MigrationCostModel,
    NodeKind,
    Workload,
    evaluate_assignment,
)


class SchedulerKind(Enum):
    PRIORITY = "ps"
    LOAD_BALANCE = "lbs"
    RANDOM = "random"
    GREEDY = "greedy"
    ORACLE = "oracle"


class BudgetExceededError(ValueError):
    """Raised when exhaustive enumeration would exceed the allowed budget."""


def schedule_priority(workload: Workload, cluster: ClusterSpec) -> Assignment:
    """Largest-demand-first; each task goes to the node with earliest projected finish."""
    order = sorted(workload.tasks, key=lambda t: (-t.demand, t.id))
    caps = cluster.capacities()
    load = np.zeros(cluster.size)
    placement = [0] * workload.n
    for task in order:
        finish = (load + task.demand) / caps
        dest = int(np.argmin(finish))  # argmin takes the lowest index on ties
        placement[task.id] = dest
        load[dest] += task.demand
    return Assignment(tuple(placement))


def schedule_load_balance(workload: Workload, cluster: ClusterSpec) -> Assignment:
    """Arrival order; each task goes to the node with minimum current utilization."""
    caps = cluster.capacities()
    load = np.zeros(cluster.size)
    placement = []
    for task in workload.tasks:
        dest = int(np.argmin(load / caps))
        placement.append(dest)
        load[dest] += task.demand
    return Assignment(tuple(placement))


def schedule_random(workload: Workload, cluster: ClusterSpec, seed: int) -> Assignment:
    """Uniform placement over all nodes, reproducible per seed."""
    rng = np.random.default_rng(seed)
    return Assignment(tuple(int(p) for p in rng.integers(0, cluster.size, size=workload.n)))


def schedule_greedy(
    workload: Workload,
    cluster: ClusterSpec,
    model: MigrationCostModel,
    weights,
) -> Assignment:
    """Myopic per-task choice: minimize alpha*time + gamma_m*migration cost."""
    placement = []
    for task in workload.tasks:
        best_cost = None
        best = 0
        for node in cluster.nodes:
            time = task.demand / node.capacity
            if node.id == task.origin:
                mig = 0.0
            else:
                mig = model.base + model.per_mi * task.demand
                if node.kind is NodeKind.EDGE:
                    mig *= model.edge_to_edge_factor
            cost = weights.alpha * time + weights.gamma_m * mig
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best = node.id
        placement.append(best)
    return Assignment(tuple(placement))


def oracle_objective(
    workload: Workload,
    cluster: ClusterSpec,
    placement,
    model: MigrationCostModel,
) -> float:
    """Independent scoring of a placement, used by the enumeration below.

    Deliberately re-derives processing time and migration cost from first
    principles instead of calling evaluate_assignment, in the same fixed
    summation order (ascending task index, separate accumulators).
    """
    m = cluster.m
    t_sum = 0.0
    d_sum = 0.0
    for task, dest in zip(workload.tasks, placement):
        t_sum += task.demand / cluster.nodes[dest].capacity
        if dest != task.origin:
            penalty = model.base + model.per_mi * task.demand
            if dest < m:
                penalty *= model.edge_to_edge_factor
            d_sum += penalty
    return t_sum + d_sum


def brute_force_optimal(
    workload: Workload,
    cluster: ClusterSpec,
    model: MigrationCostModel,
    budget: int = 10**7,
) -> tuple[Assignment, Metrics]:
    """Enumerate all placements and return the objective-minimal one.

    Ties resolve to the lexicographically smallest placement because
    enumeration runs in lexicographic order and only strict improvements
    replace the incumbent.
    """
    count = cluster.size ** workload.n
    if count > budget:
        raise BudgetExceededError(
            f"{cluster.size}^{workload.n} = {count} assignments exceeds budget {budget}"
        )
    best_placement = None
    best_obj = None
    for placement in product(range(cluster.size), repeat=workload.n):
        obj = oracle_objective(workload, cluster, placement, model)
        if best_obj is None or obj < best_obj:
            best_obj = obj
            best_placement = placement
    assignment = Assignment(best_placement)
    return assignment, evaluate_assignment(workload, cluster, assignment, model)
