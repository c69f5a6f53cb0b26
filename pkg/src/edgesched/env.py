"""Sequential-assignment environment over the scheduling model.

One episode places the workload's tasks in arrival order; an action picks
the node for the current task. The per-step reward charges the weighted
processing time and migration cost of that placement, and the final step
additionally charges the weighted utilization shortfall of the completed
assignment, so the rewards of a full episode sum to
-(alpha*T_total + beta*(1-U_total) + gamma_m*D_total).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Assignment,
    ClusterSpec,
    MigrationCostModel,
    Workload,
    evaluate_assignment,
    migration_cost,
)


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0     # processing-time weight
    beta: float = 10.0     # utilization-shortfall weight
    gamma_m: float = 1.0   # migration-cost weight

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma_m < 0:
            raise ValueError("reward weights must be >= 0")
        if self.alpha == 0 and self.beta == 0 and self.gamma_m == 0:
            raise ValueError("at least one reward weight must be positive")


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class Episode:
    """Mutable single-owner episode state; step() is the only mutator."""

    def __init__(
        self,
        workload: Workload,
        cluster: ClusterSpec,
        weights: RewardWeights,
        model: MigrationCostModel,
    ):
        self.workload = workload
        self.cluster = cluster
        self.weights = weights
        self.model = model
        self.cursor = 0
        self.node_work = np.zeros(cluster.size)
        self.placement: list[int] = []
        self._caps = cluster.capacities()
        self._demand_hi = workload.demand_range[1]
        # suffix_mean[t] = mean demand of tasks t..n-1; 0 past the end
        demands = workload.demands()
        suffix = np.concatenate([np.cumsum(demands[::-1])[::-1], [0.0]])
        counts = np.arange(workload.n, -1, -1, dtype=float)
        counts[-1] = 1.0
        self._suffix_mean = suffix / counts

    @property
    def done(self) -> bool:
        return self.cursor >= self.workload.n

    def state_dim(self) -> int:
        return self.cluster.size + 4


def state_dim(cluster: ClusterSpec) -> int:
    """Length of the state vector for a given cluster: one slot per node plus 4."""
    return cluster.size + 4


def encode_state(episode: Episode) -> np.ndarray:
    """Fixed-width observation, every entry in [0, 1].

    Layout: per-node utilization (scaled by the running max so late-episode
    loads stay bounded), current task demand, origin-node utilization,
    fraction of tasks remaining, mean demand of remaining tasks. Demands are
    normalized by the workload's upper demand bound. Current-task features
    are zero once the episode is finished.
    """
    n = episode.workload.n
    utils = episode.node_work / episode._caps
    scale = max(1.0, float(utils.max()))
    utils = utils / scale
    vec = np.empty(episode.cluster.size + 4)
    vec[: episode.cluster.size] = utils
    if episode.cursor < n:
        task = episode.workload.tasks[episode.cursor]
        vec[-4] = task.demand / episode._demand_hi
        vec[-3] = utils[task.origin]
    else:
        vec[-4] = 0.0
        vec[-3] = 0.0
    vec[-2] = 1.0 - episode.cursor / n
    vec[-1] = episode._suffix_mean[episode.cursor] / episode._demand_hi
    return vec


def reset(
    workload: Workload,
    cluster: ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
) -> tuple[Episode, np.ndarray]:
    """Fresh episode at cursor 0 with all node loads zero."""
    episode = Episode(workload, cluster, weights, model)
    return episode, encode_state(episode)


def step(episode: Episode, action: int) -> tuple[np.ndarray, float, bool]:
    """Place the current task on `action` and advance.

    Returns (next_state, reward, done). The terminal step folds the
    utilization shortfall of the completed assignment into its reward.
    """
    if episode.done:
        raise ValueError("step() called on a finished episode")
    if action < 0 or action >= episode.cluster.size:
        raise ValueError(f"action {action} out of range for {episode.cluster.size} nodes")

    task = episode.workload.tasks[episode.cursor]
    time = task.demand / episode.cluster.nodes[action].capacity
    mig = migration_cost(task, action, episode.model, episode.cluster)
    reward = -(episode.weights.alpha * time + episode.weights.gamma_m * mig)

    episode.placement.append(action)
    episode.node_work[action] += task.demand
    episode.cursor += 1

    done = episode.done
    if done:
        metrics = evaluate_assignment(
            episode.workload, episode.cluster, Assignment(tuple(episode.placement)), episode.model
        )
        reward -= episode.weights.beta * (1.0 - metrics.utilization)
    return encode_state(episode), reward, done


def run_episode(episode: Episode, policy) -> list[Transition]:
    """Drive an episode with `policy(state) -> action`; returns its transitions."""
    transitions = []
    state = encode_state(episode)
    while not episode.done:
        action = int(policy(state))
        next_state, reward, done = step(episode, action)
        transitions.append(Transition(state, action, reward, next_state, done))
        state = next_state
    return transitions


def episode_return(transitions: list[Transition]) -> float:
    """Sum of rewards of one complete episode."""
    if not transitions:
        raise ValueError("empty transition list is not a complete episode")
    if not transitions[-1].done or any(t.done for t in transitions[:-1]):
        raise ValueError("transitions do not form exactly one complete episode")
    total = 0.0
    for t in transitions:
        total += t.reward
    return total


def dump_trace(transitions: list[Transition], path) -> None:
    """Debug dump: one JSON object per transition, one per line."""
    import json
    from pathlib import Path

    lines = []
    for t in transitions:
        lines.append(
            json.dumps(
                {
                    "state": [float(x) for x in t.state],
                    "action": int(t.action),
                    "reward": float(t.reward),
                    "next_state": [float(x) for x in t.next_state],
                    "done": bool(t.done),
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
