"""DQN training for the sequential scheduling environment.

The agent owns a single RNG stream consumed in a fixed order - one
workload seed at the start of each episode, one or two draws per
epsilon-greedy action, then batch indices for each replay sample - so an
entire training run is a pure function of its config seed. Targets come
from a periodically synced frozen copy of the online network, and the
TD loss is 0.5 * mean squared error so a plain SGD step reproduces the
tabular Q-update arithmetic exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import nn
from .env import RewardWeights, Transition, encode_state, reset, step
from .model import (
    Assignment,
    ClusterSpec,
    Metrics,
    MigrationCostModel,
    Workload,
    evaluate_assignment,
    generate_workload,
)
from .nn import MlpParams, MlpSpec, OptimState, TrainingError


@dataclass(frozen=True)
class DqnConfig:
    discount: float = 0.99
    buffer_capacity: int = 50_000
    batch_size: int = 64
    target_sync_every: int = 500
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    episodes: int = 300
    learn_start: int = 1_000
    seed: int = 0
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    grad_clip: float | None = 1.0
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.batch_size > self.buffer_capacity:
            raise ValueError("batch_size must not exceed buffer_capacity")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("batch_size and buffer_capacity must be >= 1")
        if self.episodes < 0 or self.learn_start < 0 or self.epsilon_decay_steps < 0:
            raise ValueError("episodes, learn_start, epsilon_decay_steps must be >= 0")
        if self.target_sync_every < 1:
            raise ValueError("target_sync_every must be >= 1")


class ReplayBuffer:
    """Bounded ring buffer of transitions; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0
        self.inserted = 0

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity
        self.inserted += 1

    def sample(self, rng: np.random.Generator, batch_size: int) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def items(self) -> list[Transition]:
        """Current contents, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next :] + self._items[: self._next]

    def __len__(self) -> int:
        return len(self._items)


def epsilon_at(config: DqnConfig, step_index: int) -> float:
    """Linear decay from epsilon_start to epsilon_end over epsilon_decay_steps."""
    if step_index < 0:
        raise ValueError("step index must be >= 0")
    if config.epsilon_decay_steps == 0 or step_index >= config.epsilon_decay_steps:
        return config.epsilon_end
    frac = step_index / config.epsilon_decay_steps
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac


def td_target(
    reward: float,
    next_state: np.ndarray,
    done: bool,
    target_params: MlpParams,
    discount: float,
) -> float:
    """Bootstrapped regression target: reward, plus discounted max target-net Q if not terminal."""
    if done:
        return reward
    return reward + discount * float(np.max(nn.forward(target_params, next_state)))


@dataclass
class EpisodeLog:
    episode: int
    ep_return: float
    mean_loss: float
    epsilon: float
    t_total: float
    utilization: float
    migrations: int


class DqnAgent:
    """Online/target networks plus optimizer, replay buffer, and RNG stream."""

    def __init__(self, spec: MlpSpec, config: DqnConfig):
        self.spec = spec
        self.config = config
        self.online = nn.init_params(spec)
        self.target = self.online.copy()
        self.optim = OptimState(kind=config.optimizer, learning_rate=config.learning_rate)
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.rng = np.random.default_rng(config.seed)
        self.learn_steps = 0
        self.env_steps = 0

    @classmethod
    def for_cluster(cls, cluster: ClusterSpec, config: DqnConfig) -> "DqnAgent":
        spec = MlpSpec(
            input_dim=cluster.size + 4,
            hidden=config.hidden,
            output_dim=cluster.size,
            init_seed=config.seed,
        )
        return cls(spec, config)

    def select_action(self, state: np.ndarray, epsilon: float, rng: np.random.Generator | None = None) -> int:
        """Epsilon-greedy over online Q-values; argmax ties go to the lowest index."""
        rng = self.rng if rng is None else rng
        if epsilon > 0.0 and rng.random() < epsilon:
            return int(rng.integers(0, self.spec.output_dim))
        q = nn.forward(self.online, state)
        return int(np.argmax(q))

    def learn_step(self, batch: list[Transition]) -> float:
        """One TD regression step on a batch; returns the loss.

        Loss is 0.5 * mean((Q(s,a) - target)^2) against the frozen target
        network, gradients flow through the online network only, and the
        target network is re-synced whenever the step counter hits the
        configured period.
        """
        if not batch:
            raise ValueError("learn_step needs a non-empty batch")
        states = np.stack([t.state for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        actions = np.array([t.action for t in batch])
        rewards = np.array([t.reward for t in batch], dtype=float)
        done = np.array([t.done for t in batch], dtype=bool)

        next_q = nn.forward_batch(self.target, next_states).max(axis=1)
        targets = rewards + np.where(done, 0.0, self.config.discount * next_q)

        q_all = nn.forward_batch(self.online, states)
        rows = np.arange(len(batch))
        delta = q_all[rows, actions] - targets
        loss = 0.5 * float(np.mean(delta * delta))
        if not np.isfinite(loss):
            raise TrainingError(
                f"non-finite loss at learn step {self.learn_steps}: "
                f"delta range [{delta.min()}, {delta.max()}]"
            )

        out_grad = np.zeros_like(q_all)
        out_grad[rows, actions] = delta / len(batch)
        grads = nn.backward_batch(self.online, states, out_grad)
        if self.config.grad_clip is not None:
            c = self.config.grad_clip
            grads = [(np.clip(dw, -c, c), np.clip(db, -c, c)) for dw, db in grads]
        nn.apply_update(self.online, grads, self.optim)

        self.learn_steps += 1
        if self.learn_steps % self.config.target_sync_every == 0:
            self.target = self.online.copy()
        return loss


def train(
    n_tasks: int,
    demand_lo: float,
    demand_hi: float,
    cluster: ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
    config: DqnConfig,
) -> tuple[DqnAgent, list[EpisodeLog]]:
    """Run config.episodes training episodes, one fresh workload each.

    Every transition is pushed to the replay buffer, and one learn step
    runs per environment step once learn_start transitions are buffered.
    Deterministic for a fixed config: workload seeds, exploration, and
    batch sampling all come from the agent's single RNG stream.
    """
    agent = DqnAgent.for_cluster(cluster, config)
    log: list[EpisodeLog] = []
    for ep in range(config.episodes):
        wseed = int(agent.rng.integers(0, 2**63))
        workload = generate_workload(n_tasks, demand_lo, demand_hi, cluster.m, wseed)
        episode, state = reset(workload, cluster, weights, model)
        ep_epsilon = epsilon_at(config, agent.env_steps)
        ep_return = 0.0
        losses = []
        while not episode.done:
            eps = epsilon_at(config, agent.env_steps)
            action = agent.select_action(state, eps)
            next_state, reward, done = step(episode, action)
            agent.buffer.push(Transition(state, action, reward, next_state, done))
            agent.env_steps += 1
            if len(agent.buffer) >= config.learn_start:
                batch = agent.buffer.sample(agent.rng, config.batch_size)
                losses.append(agent.learn_step(batch))
            ep_return += reward
            state = next_state
        metrics = evaluate_assignment(workload, cluster, Assignment(tuple(episode.placement)), model)
        log.append(
            EpisodeLog(
                episode=ep,
                ep_return=ep_return,
                mean_loss=float(np.mean(losses)) if losses else 0.0,
                epsilon=ep_epsilon,
                t_total=metrics.t_total,
                utilization=metrics.utilization,
                migrations=metrics.migration_count,
            )
        )
    return agent, log


def greedy_rollout(
    params: MlpParams,
    workload: Workload,
    cluster: ClusterSpec,
    weights: RewardWeights,
    model: MigrationCostModel,
) -> tuple[Assignment, Metrics]:
    """Pure-greedy (epsilon=0) episode under the given network."""
    if params.weights[0].shape[1] != cluster.size + 4 or params.weights[-1].shape[0] != cluster.size:
        raise ValueError("network dims do not match cluster size")
    episode, state = reset(workload, cluster, weights, model)
    while not episode.done:
        action = int(np.argmax(nn.forward(params, state)))
        state, _, _ = step(episode, action)
    assignment = Assignment(tuple(episode.placement))
    return assignment, evaluate_assignment(workload, cluster, assignment, model)


def save_agent(agent: DqnAgent, path: str | Path) -> None:
    """Model file: network spec + layers plus the training config block."""
    cfg = asdict(agent.config)
    cfg["hidden"] = list(cfg["hidden"])
    nn.save_model(agent.online, agent.spec, path, extra={"config": cfg})


def load_agent(path: str | Path) -> tuple[MlpSpec, MlpParams, DqnConfig]:
    spec, params, extra = nn.load_model(path)
    if "config" not in extra:
        raise ValueError(f"{path}: not a DQN model file (missing config block)")
    cfg = dict(extra["config"])
    cfg["hidden"] = tuple(cfg.get("hidden", ()))
    return spec, params, DqnConfig(**cfg)
