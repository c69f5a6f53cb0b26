"""Experiment harness: config file schema, comparison runs, CSV reports.

A comparison run crosses task scales x algorithms x replicate seeds. Each
cell generates its own workload from the replicate seed, schedules it,
and scores the assignment; the DQN model is trained once per task scale
(state normalization depends on the demand range) and reused across the
replicates of that scale. All file output is deterministic: reruns with
the same config produce byte-identical CSVs.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dqn as dqn_mod
from .env import RewardWeights
from .model import (
    Assignment,
    ClusterSpec,
    MigrationCostModel,
    Workload,
    evaluate_assignment,
    generate_cluster,
    generate_workload,
    save_assignment,
)
from .dqn import DqnConfig, EpisodeLog
from .schedulers import (
    BudgetExceededError,
    brute_force_optimal,
    oracle_objective,
    schedule_greedy,
    schedule_load_balance,
    schedule_priority,
    schedule_random,
)

ALGORITHMS = ("ps", "lbs", "random", "greedy", "dqn", "oracle")
ORACLE_BUDGET = 10**7
ORACLE_MAX_N = 8

RESULT_COLUMNS = [
    "n_tasks",
    "algorithm",
    "seed",
    "t_total",
    "d_total",
    "objective",
    "utilization",
    "migration_count",
    "makespan",
    "wall_time_ms",
]

METRIC_COLUMNS = ["t_total", "d_total", "objective", "utilization", "migration_count", "makespan"]

TRAIN_LOG_COLUMNS = ["episode", "return", "mean_loss", "epsilon", "t_total", "utilization", "migrations"]


@dataclass(frozen=True)
class ClusterSettings:
    m: int = 10
    k: int = 3
    edge_cap_range: tuple[float, float] = (80.0, 120.0)
    cloud_cap_range: tuple[float, float] = (300.0, 500.0)
    seed: int = 0

    def build(self) -> ClusterSpec:
        return generate_cluster(self.m, self.k, self.edge_cap_range, self.cloud_cap_range, self.seed)


@dataclass(frozen=True)
class ExperimentConfig:
    cluster: ClusterSettings = field(default_factory=ClusterSettings)
    task_scales: tuple[tuple[int, float, float], ...] = ((500, 250.0, 750.0),)
    reward_weights: RewardWeights = field(default_factory=RewardWeights)
    migration: MigrationCostModel = field(default_factory=MigrationCostModel)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    replicate_seeds: tuple[int, ...] = (101, 102, 103, 104, 105)
    output_dir: str = "results"

    def __post_init__(self):
        if not self.task_scales:
            raise ValueError("need at least one task scale")
        if len(set(self.replicate_seeds)) != len(self.replicate_seeds):
            raise ValueError("replicate seeds must be distinct")


def _from_mapping(cls, obj: dict, context: str):
    import dataclasses

    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ValueError(f"{context}: unknown fields {sorted(unknown)}")
    return cls(**obj)


def config_from_dict(obj: dict) -> ExperimentConfig:
    obj = dict(obj)
    allowed = {
        "cluster",
        "task_scales",
        "reward_weights",
        "migration",
        "dqn",
        "replicate_seeds",
        "output_dir",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"experiment config: unknown fields {sorted(unknown)}")
    kwargs = {}
    if "cluster" in obj:
        cl = dict(obj["cluster"])
        for key in ("edge_cap_range", "cloud_cap_range"):
            if key in cl:
                cl[key] = tuple(cl[key])
        kwargs["cluster"] = _from_mapping(ClusterSettings, cl, "cluster")
    if "task_scales" in obj:
        kwargs["task_scales"] = tuple(
            (int(n), float(lo), float(hi)) for n, lo, hi in obj["task_scales"]
        )
    if "reward_weights" in obj:
        kwargs["reward_weights"] = _from_mapping(RewardWeights, obj["reward_weights"], "reward_weights")
    if "migration" in obj:
        kwargs["migration"] = _from_mapping(MigrationCostModel, obj["migration"], "migration")
    if "dqn" in obj:
        dq = dict(obj["dqn"])
        if "hidden" in dq:
            dq["hidden"] = tuple(dq["hidden"])
        kwargs["dqn"] = _from_mapping(DqnConfig, dq, "dqn")
    if "replicate_seeds" in obj:
        kwargs["replicate_seeds"] = tuple(int(s) for s in obj["replicate_seeds"])
    if "output_dir" in obj:
        kwargs["output_dir"] = str(obj["output_dir"])
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ResultRow:
    n_tasks: int
    algorithm: str
    seed: int
    t_total: float
    d_total: float
    objective: float
    utilization: float
    migration_count: int
    makespan: float
    wall_time_ms: float


def _num(x) -> str:
    # repr round-trips float64 exactly, keeping CSVs lossless and stable
    return repr(float(x))


def run_cell(
    algorithm: str,
    workload: Workload,
    cluster: ClusterSpec,
    config: ExperimentConfig,
    seed: int,
    dqn_params=None,
) -> tuple[Assignment, float]:
    """Schedule one workload with one algorithm; returns (assignment, wall seconds)."""
    start = time.perf_counter()
    if algorithm == "ps":
        assignment = schedule_priority(workload, cluster)
    elif algorithm == "lbs":
        assignment = schedule_load_balance(workload, cluster)
    elif algorithm == "random":
        assignment = schedule_random(workload, cluster, seed)
    elif algorithm == "greedy":
        assignment = schedule_greedy(workload, cluster, config.migration, config.reward_weights)
    elif algorithm == "oracle":
        assignment, _ = brute_force_optimal(workload, cluster, config.migration, ORACLE_BUDGET)
    elif algorithm == "dqn":
        if dqn_params is None:
            raise ValueError("dqn requested but no trained model available")
        assignment, _ = dqn_mod.greedy_rollout(
            dqn_params, workload, cluster, config.reward_weights, config.migration
        )
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return assignment, time.perf_counter() - start


def run_comparison(
    config: ExperimentConfig,
    algorithms: list[str],
    record_timing: bool = False,
    trained: dict[int, "dqn_mod.DqnAgent"] | None = None,
    dump_dir: str | Path | None = None,
) -> tuple[list[ResultRow], dict[int, "dqn_mod.DqnAgent"]]:
    """Full grid: for each scale, algorithm, and replicate seed, one ResultRow.

    Rows come back in deterministic (scale, algorithm, seed) order. Wall
    times are written as 0 unless record_timing is set, keeping default
    reports byte-reproducible. Pre-trained agents can be passed in keyed
    by task count; any missing ones are trained here and returned. With
    dump_dir set, every cell's assignment is saved there as JSON.
    """
    for algo in algorithms:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    cluster = config.cluster.build()
    if "oracle" in algorithms:
        for n, _, _ in config.task_scales:
            if n > ORACLE_MAX_N or cluster.size**n > ORACLE_BUDGET:
                raise BudgetExceededError(
                    f"oracle cannot enumerate n={n} tasks on {cluster.size} nodes "
                    f"(limit n <= {ORACLE_MAX_N} within {ORACLE_BUDGET} assignments)"
                )
    trained = dict(trained) if trained else {}
    rows: list[ResultRow] = []
    for n, lo, hi in config.task_scales:
        if "dqn" in algorithms and n not in trained:
            agent, _ = dqn_mod.train(
                n, lo, hi, cluster, config.reward_weights, config.migration, config.dqn
            )
            trained[n] = agent
        for algo in algorithms:
            params = trained[n].online if algo == "dqn" else None
            for seed in config.replicate_seeds:
                workload = generate_workload(n, lo, hi, cluster.m, seed)
                assignment, elapsed = run_cell(algo, workload, cluster, config, seed, params)
                metrics = evaluate_assignment(workload, cluster, assignment, config.migration)
                if dump_dir is not None:
                    Path(dump_dir).mkdir(parents=True, exist_ok=True)
                    save_assignment(
                        assignment, Path(dump_dir) / f"assignment_n{n}_{algo}_s{seed}.json"
                    )
                rows.append(
                    ResultRow(
                        n_tasks=n,
                        algorithm=algo,
                        seed=seed,
                        t_total=metrics.t_total,
                        d_total=metrics.d_total,
                        objective=metrics.objective,
                        utilization=metrics.utilization,
                        migration_count=metrics.migration_count,
                        makespan=metrics.makespan,
                        wall_time_ms=elapsed * 1000.0 if record_timing else 0.0,
                    )
                )
    return rows, trained


def write_results_csv(rows: list[ResultRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(RESULT_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.n_tasks,
                    r.algorithm,
                    r.seed,
                    _num(r.t_total),
                    _num(r.d_total),
                    _num(r.objective),
                    _num(r.utilization),
                    r.migration_count,
                    _num(r.makespan),
                    _num(r.wall_time_ms),
                ]
            )


def read_results_csv(path: str | Path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ValueError(
                f"{path}: expected columns {RESULT_COLUMNS}, found {reader.fieldnames}"
            )
        rows = []
        for rec in reader:
            rows.append(
                ResultRow(
                    n_tasks=int(rec["n_tasks"]),
                    algorithm=rec["algorithm"],
                    seed=int(rec["seed"]),
                    t_total=float(rec["t_total"]),
                    d_total=float(rec["d_total"]),
                    objective=float(rec["objective"]),
                    utilization=float(rec["utilization"]),
                    migration_count=int(rec["migration_count"]),
                    makespan=float(rec["makespan"]),
                    wall_time_ms=float(rec["wall_time_ms"]),
                )
            )
    return rows


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Mean and sample stddev of every metric per (n_tasks, algorithm) cell."""
    groups: dict[tuple[int, str], list[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.n_tasks, r.algorithm), []).append(r)
    out = []
    for (n, algo) in sorted(groups, key=lambda key: (key[0], key[1])):
        cell = groups[(n, algo)]
        entry = {"n_tasks": n, "algorithm": algo, "replicates": len(cell)}
        for col in METRIC_COLUMNS:
            values = np.array([getattr(r, col) for r in cell], dtype=float)
            entry[f"{col}_mean"] = float(values.mean())
            entry[f"{col}_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        out.append(entry)
    return out


def write_summary_csv(summary: list[dict], path: str | Path) -> None:
    cols = ["n_tasks", "algorithm", "replicates"]
    for col in METRIC_COLUMNS:
        cols += [f"{col}_mean", f"{col}_std"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(cols)
        for entry in summary:
            writer.writerow(
                [entry["n_tasks"], entry["algorithm"], entry["replicates"]]
                + [_num(entry[c]) for c in cols[3:]]
            )


def write_training_log_csv(log: list[EpisodeLog], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TRAIN_LOG_COLUMNS)
        for row in log:
            writer.writerow(
                [
                    row.episode,
                    _num(row.ep_return),
                    _num(row.mean_loss),
                    _num(row.epsilon),
                    _num(row.t_total),
                    _num(row.utilization),
                    row.migrations,
                ]
            )


@dataclass
class OracleCheckReport:
    instances: int
    passed: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return self.passed == self.instances and not self.failures


def oracle_check(max_n: int, instances: int, seed: int, m: int = 2, k: int = 1) -> OracleCheckReport:
    """Cross-validate the oracle on random tiny instances.

    For each instance: the oracle's internal scoring must agree exactly
    with evaluate_assignment, and the enumerated optimum must be <= the
    objective of every other scheduler.
    """
    cluster = generate_cluster(m, k, seed=seed)
    mig = MigrationCostModel()
    weights = RewardWeights()
    rng = np.random.default_rng(seed)
    if cluster.size**max_n > ORACLE_BUDGET:
        raise BudgetExceededError(
            f"{cluster.size}^{max_n} exceeds enumeration budget {ORACLE_BUDGET}"
        )
    failures = []
    passed = 0
    for i in range(instances):
        n = int(rng.integers(1, max_n + 1))
        workload = generate_workload(n, 50.0, 150.0, m, int(rng.integers(0, 2**63)))
        best, best_metrics = brute_force_optimal(workload, cluster, mig, ORACLE_BUDGET)
        internal = oracle_objective(workload, cluster, best.placement, mig)
        ok = True
        if internal != best_metrics.objective:
            failures.append(f"instance {i}: scoring mismatch {internal} != {best_metrics.objective}")
            ok = False
        rivals = {
            "ps": schedule_priority(workload, cluster),
            "lbs": schedule_load_balance(workload, cluster),
            "random": schedule_random(workload, cluster, i),
            "greedy": schedule_greedy(workload, cluster, mig, weights),
        }
        for name, assignment in rivals.items():
            obj = evaluate_assignment(workload, cluster, assignment, mig).objective
            if best_metrics.objective > obj:
                failures.append(
                    f"instance {i}: oracle {best_metrics.objective} > {name} {obj}"
                )
                ok = False
        if ok:
            passed += 1
    return OracleCheckReport(instances=instances, passed=passed, failures=failures)
