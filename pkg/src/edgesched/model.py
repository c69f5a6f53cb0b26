"""Domain model for edge-cloud task scheduling.

Tasks carry a computational demand in MI (million instructions); nodes
execute at a fixed capacity in MIPS, so processing time is demand/capacity
in seconds. An assignment maps every task to a node; evaluating it yields
total processing time, migration cost, makespan, and utilization. All
types are immutable and all operations are pure, so metrics are
bit-reproducible for a fixed summation order (ascending task index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np


class NodeKind(Enum):
    EDGE = "edge"
    CLOUD = "cloud"


@dataclass(frozen=True)
class NodeSpec:
    """A single compute node; capacity in MIPS."""

    id: int
    kind: NodeKind
    capacity: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"node {self.id}: capacity must be > 0, got {self.capacity}")


@dataclass(frozen=True)
class ClusterSpec:
    """Edge nodes at indices 0..m-1 followed by cloud nodes at m..m+k-1."""

    nodes: tuple[NodeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not any(n.kind is NodeKind.EDGE for n in self.nodes):
            raise ValueError("cluster needs at least one edge node")
        if not any(n.kind is NodeKind.CLOUD for n in self.nodes):
            raise ValueError("cluster needs at least one cloud node")
        m = self.m
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ValueError(f"node ids must be contiguous: index {i} has id {node.id}")
            expected = NodeKind.EDGE if i < m else NodeKind.CLOUD
            if node.kind is not expected:
                raise ValueError(f"node {i}: expected {expected.value} in this index range")

    @property
    def m(self) -> int:
        return sum(1 for n in self.nodes if n.kind is NodeKind.EDGE)

    @property
    def k(self) -> int:
        return sum(1 for n in self.nodes if n.kind is NodeKind.CLOUD)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def capacities(self) -> np.ndarray:
        return np.array([n.capacity for n in self.nodes], dtype=float)


@dataclass(frozen=True)
class Task:
    """One schedulable unit: demand in MI, origin is the edge node it arrives at."""

    id: int
    demand: float
    origin: int

    def __post_init__(self):
        if self.demand <= 0:
            raise ValueError(f"task {self.id}: demand must be > 0, got {self.demand}")
        if self.origin < 0:
            raise ValueError(f"task {self.id}: origin must be a valid edge index")


@dataclass(frozen=True)
class Workload:
    tasks: tuple[Task, ...]
    seed: int
    demand_range: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "demand_range", tuple(self.demand_range))
        lo, hi = self.demand_range
        for t in self.tasks:
            if not lo <= t.demand <= hi:
                raise ValueError(f"task {t.id}: demand {t.demand} outside [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.tasks)

    def demands(self) -> np.ndarray:
        return np.array([t.demand for t in self.tasks], dtype=float)


@dataclass(frozen=True)
class Assignment:
    """placement[i] is the node index executing task i."""

    placement: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "placement", tuple(int(p) for p in self.placement))


@dataclass(frozen=True)
class MigrationCostModel:
    """Affine-in-size migration cost: base + per_mi * demand seconds.

    Edge-to-edge moves are scaled by edge_to_edge_factor; executing a task
    on its origin node costs nothing.
    """

    base: float = 0.5
    per_mi: float = 0.001
    edge_to_edge_factor: float = 1.0

    def __post_init__(self):
        if self.base < 0 or self.per_mi < 0 or self.edge_to_edge_factor < 0:
            raise ValueError("migration cost parameters must be >= 0")


@dataclass(frozen=True)
class Metrics:
    t_total: float
    d_total: float
    makespan: float
    utilization: float
    migration_count: int
    objective: float


def task_time(task: Task, node: NodeSpec) -> float:
    """Seconds to process `task` on `node`: demand / capacity."""
    return task.demand / node.capacity


def migration_cost(task: Task, dest: int, model: MigrationCostModel, cluster: ClusterSpec) -> float:
    """Seconds of migration overhead for running `task` on node `dest`."""
    if dest < 0 or dest >= cluster.size:
        raise ValueError(f"destination {dest} out of range for {cluster.size} nodes")
    if dest == task.origin:
        return 0.0
    cost = model.base + model.per_mi * task.demand
    if cluster.nodes[dest].kind is NodeKind.EDGE:
        cost *= model.edge_to_edge_factor
    return cost


def evaluate_assignment(
    workload: Workload,
    cluster: ClusterSpec,
    assignment: Assignment,
    model: MigrationCostModel,
) -> Metrics:
    """Score an assignment: objective = total processing time + migration cost.

    Sums run in ascending task index so repeated evaluation is bit-identical.
    Utilization is the mean node busy fraction relative to the makespan
    (0 when nothing is scheduled).
    """
    if len(assignment.placement) != workload.n:
        raise ValueError(
            f"assignment length {len(assignment.placement)} != workload size {workload.n}"
        )
    work = [0.0] * cluster.size
    t_total = 0.0
    d_total = 0.0
    migrations = 0
    for task, dest in zip(workload.tasks, assignment.placement):
        if dest < 0 or dest >= cluster.size:
            raise ValueError(f"task {task.id}: placement {dest} out of range")
        t_total += task.demand / cluster.nodes[dest].capacity
        d_total += migration_cost(task, dest, model, cluster)
        if dest != task.origin:
            migrations += 1
        work[dest] += task.demand

    makespan = 0.0
    for node in cluster.nodes:
        makespan = max(makespan, work[node.id] / node.capacity)
    if makespan > 0.0:
        busy = 0.0
        for node in cluster.nodes:
            busy += (work[node.id] / node.capacity) / makespan
        utilization = busy / cluster.size
    else:
        utilization = 0.0

    return Metrics(
        t_total=t_total,
        d_total=d_total,
        makespan=makespan,
        utilization=utilization,
        migration_count=migrations,
        objective=t_total + d_total,
    )


def generate_workload(n: int, demand_lo: float, demand_hi: float, m: int, seed: int) -> Workload:
    """n tasks with demands ~ U[lo, hi] and origins ~ U{0..m-1}, reproducible per seed."""
    if n < 1:
        raise ValueError(f"need at least one task, got n={n}")
    if not 0 < demand_lo <= demand_hi:
        raise ValueError(f"invalid demand range [{demand_lo}, {demand_hi}]")
    if m < 1:
        raise ValueError(f"need at least one edge node, got m={m}")
    rng = np.random.default_rng(seed)
    demands = rng.uniform(demand_lo, demand_hi, size=n)
    origins = rng.integers(0, m, size=n)
    tasks = tuple(
        Task(id=i, demand=float(demands[i]), origin=int(origins[i])) for i in range(n)
    )
    return Workload(tasks=tasks, seed=seed, demand_range=(demand_lo, demand_hi))


def generate_cluster(
    m: int,
    k: int,
    edge_cap_range: tuple[float, float] = (80.0, 120.0),
    cloud_cap_range: tuple[float, float] = (300.0, 500.0),
    seed: int = 0,
) -> ClusterSpec:
    """m edge + k cloud nodes with capacities ~ U[range], reproducible per seed."""
    if m < 1 or k < 1:
        raise ValueError(f"need m >= 1 and k >= 1, got m={m}, k={k}")
    for name, (lo, hi) in (("edge", edge_cap_range), ("cloud", cloud_cap_range)):
        if not 0 < lo <= hi:
            raise ValueError(f"invalid {name} capacity range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    edge_caps = rng.uniform(edge_cap_range[0], edge_cap_range[1], size=m)
    cloud_caps = rng.uniform(cloud_cap_range[0], cloud_cap_range[1], size=k)
    nodes = [NodeSpec(id=i, kind=NodeKind.EDGE, capacity=float(edge_caps[i])) for i in range(m)]
    nodes += [
        NodeSpec(id=m + j, kind=NodeKind.CLOUD, capacity=float(cloud_caps[j])) for j in range(k)
    ]
    return ClusterSpec(nodes=tuple(nodes))


# --- JSON persistence -------------------------------------------------------
#
# Workload file: {"seed": u64, "demand_range": [lo, hi], "tasks": [{"id", "demand", "origin"}...]}
# Cluster file:  {"nodes": [{"id", "kind", "capacity"}...]} with kind "edge" | "cloud"
# Unknown fields are rejected so schema drift fails loudly.


def _require_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"{context}: unknown fields {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise ValueError(f"{context}: missing fields {sorted(missing)}")


def workload_to_dict(workload: Workload) -> dict:
    return {
        "seed": workload.seed,
        "demand_range": [workload.demand_range[0], workload.demand_range[1]],
        "tasks": [{"id": t.id, "demand": t.demand, "origin": t.origin} for t in workload.tasks],
    }


def workload_from_dict(obj: dict) -> Workload:
    _require_keys(obj, {"seed", "demand_range", "tasks"}, "workload")
    tasks = []
    for entry in obj["tasks"]:
        _require_keys(entry, {"id", "demand", "origin"}, "workload task")
        tasks.append(Task(id=int(entry["id"]), demand=float(entry["demand"]), origin=int(entry["origin"])))
    lo, hi = obj["demand_range"]
    return Workload(tasks=tuple(tasks), seed=int(obj["seed"]), demand_range=(float(lo), float(hi)))


def cluster_to_dict(cluster: ClusterSpec) -> dict:
    return {
        "nodes": [{"id": n.id, "kind": n.kind.value, "capacity": n.capacity} for n in cluster.nodes]
    }


def cluster_from_dict(obj: dict) -> ClusterSpec:
    _require_keys(obj, {"nodes"}, "cluster")
    nodes = []
    for entry in obj["nodes"]:
        _require_keys(entry, {"id", "kind", "capacity"}, "cluster node")
        nodes.append(
            NodeSpec(id=int(entry["id"]), kind=NodeKind(entry["kind"]), capacity=float(entry["capacity"]))
        )
    return ClusterSpec(nodes=tuple(nodes))


def save_workload(workload: Workload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(workload_to_dict(workload), indent=2) + "\n", encoding="utf-8")


def load_workload(path: str | Path) -> Workload:
    return workload_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_cluster(cluster: ClusterSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cluster_to_dict(cluster), indent=2) + "\n", encoding="utf-8")


def load_cluster(path: str | Path) -> ClusterSpec:
    return cluster_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_assignment(assignment: Assignment, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps({"placement": list(assignment.placement)}) + "\n", encoding="utf-8"
    )


def load_assignment(path: str | Path) -> Assignment:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    _require_keys(obj, {"placement"}, "assignment")
    return Assignment(tuple(int(p) for p in obj["placement"]))
