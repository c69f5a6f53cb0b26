"""Edge-cloud task scheduling simulator with a DQN scheduler and classic baselines."""

from .model import (
    Assignment,
    ClusterSpec,
    Metrics,
    MigrationCostModel,
    NodeKind,
    NodeSpec,
    Task,
    Workload,
    evaluate_assignment,
    generate_cluster,
    generate_workload,
    load_assignment,
    load_cluster,
    load_workload,
    migration_cost,
    save_assignment,
    save_cluster,
    save_workload,
    task_time,
)
from .schedulers import (
    BudgetExceededError,
    SchedulerKind,
    brute_force_optimal,
    oracle_objective,
    schedule_greedy,
    schedule_load_balance,
    schedule_priority,
    schedule_random,
)
from .env import (
    Episode,
    RewardWeights,
    Transition,
    dump_trace,
    encode_state,
    episode_return,
    reset,
    run_episode,
    step,
)
from .nn import GradCheckReport, MlpParams, MlpSpec, OptimState, TrainingError, gradient_check
from .dqn import DqnAgent, DqnConfig, ReplayBuffer, epsilon_at, greedy_rollout, td_target, train

__version__ = "0.1.0"
