"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured numbers (run with -s to see them all).
"""

import time

import numpy as np

from edgesched import nn
from edgesched.cli import main
from edgesched.dqn import DqnAgent, DqnConfig, ReplayBuffer, epsilon_at, greedy_rollout, train
from edgesched.env import (
    RewardWeights,
    Transition,
    reset,
    run_episode,
)
from edgesched.harness import ExperimentConfig, run_comparison
from edgesched.model import (
    Assignment,
    MigrationCostModel,
    evaluate_assignment,
    generate_cluster,
    generate_workload,
)
from edgesched.nn import MlpSpec, gradient_check
from edgesched.schedulers import (
    brute_force_optimal,
    oracle_objective,
    schedule_greedy,
    schedule_load_balance,
    schedule_priority,
    schedule_random,
)


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def test_c1_objective_correctness_and_oracle_dominance():
    rng = np.random.default_rng(1001)
    cluster = generate_cluster(2, 1, seed=1001)
    model = MigrationCostModel()
    weights = RewardWeights()
    start = time.perf_counter()
    mismatches = 0
    beaten = 0
    for i in range(100):
        n = int(rng.integers(1, 7))
        wl = generate_workload(n, 50.0, 150.0, 2, seed=int(rng.integers(0, 2**63)))
        best, best_metrics = brute_force_optimal(wl, cluster, model)
        # independent scoring must agree exactly, on the optimum and on a probe
        probe = tuple(int(p) for p in rng.integers(0, cluster.size, n))
        if oracle_objective(wl, cluster, best.placement, model) != best_metrics.objective:
            mismatches += 1
        if (
            oracle_objective(wl, cluster, probe, model)
            != evaluate_assignment(wl, cluster, Assignment(probe), model).objective
        ):
            mismatches += 1
        for rival in (
            schedule_priority(wl, cluster),
            schedule_load_balance(wl, cluster),
            schedule_random(wl, cluster, i),
            schedule_greedy(wl, cluster, model, weights),
        ):
            if best_metrics.objective > evaluate_assignment(wl, cluster, rival, model).objective:
                beaten += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and beaten == 0 and elapsed < 30.0
    report(
        "C1 objective correctness",
        ok,
        f"100 instances, scoring mismatches={mismatches}, oracle beaten {beaten} times, {elapsed:.1f}s",
    )


def test_c2_tabular_q_update_arithmetic():
    # constant 1x1 nets: Q is the bias; target net supplies max Q' = 0.5
    spec = MlpSpec(input_dim=1, hidden=(), output_dim=1, init_seed=0)
    cfg = DqnConfig(optimizer="sgd", learning_rate=0.1, discount=0.9, grad_clip=None, seed=0)
    agent = DqnAgent(spec, cfg)
    agent.online.weights[0][:] = 0.0
    agent.online.biases[0][:] = 0.0
    agent.target.weights[0][:] = 0.0
    agent.target.biases[0][:] = 0.5
    agent.learn_step([Transition(np.zeros(1), 0, 1.0, np.zeros(1), False)])
    q = float(agent.online.biases[0][0])
    ok = abs(q - 0.145) < 1e-12
    report("C2 Q-update arithmetic", ok, f"updated Q={q!r}, expected 0.145 within 1e-12")


def test_c3_reward_decomposition():
    cluster = generate_cluster(3, 2, seed=2002)
    model = MigrationCostModel()
    rng = np.random.default_rng(2002)
    worst = 0.0
    for trial in range(50):
        weights = RewardWeights(
            alpha=float(rng.uniform(0.0, 2.0)),
            beta=float(rng.uniform(0.0, 20.0)),
            gamma_m=float(rng.uniform(0.1, 2.0)),
        )
        wl = generate_workload(int(rng.integers(2, 25)), 50.0, 150.0, 3, seed=int(rng.integers(0, 2**63)))
        episode, _ = reset(wl, cluster, weights, model)
        transitions = run_episode(episode, lambda s: rng.integers(0, cluster.size))
        total = sum(t.reward for t in transitions)
        m = evaluate_assignment(wl, cluster, Assignment(tuple(episode.placement)), model)
        expected = -(
            weights.alpha * m.t_total + weights.beta * (1.0 - m.utilization) + weights.gamma_m * m.d_total
        )
        worst = max(worst, abs(total - expected))
    ok = worst < 1e-9
    report("C3 reward decomposition", ok, f"50 episodes, worst |sum(r) - episodic| = {worst:.2e}")


def test_c4_gradient_fidelity():
    rng = np.random.default_rng(3003)
    specs = [nn.DEFAULT_CHECK_SPEC]
    for _ in range(5):
        hidden = tuple(int(rng.integers(4, 65)) for _ in range(int(rng.integers(1, 3))))
        specs.append(
            MlpSpec(
                input_dim=int(rng.integers(2, 12)),
                hidden=hidden,
                output_dim=int(rng.integers(2, 10)),
                init_seed=int(rng.integers(0, 2**31)),
            )
        )
    worst = 0.0
    for spec in specs:
        rep = gradient_check(spec, seed=3003, tolerance=1e-4)
        worst = max(worst, rep.max_rel_error)
    ok = worst < 1e-4
    report("C4 gradient fidelity", ok, f"6 specs, worst relative error = {worst:.2e}")


def test_c5_learning_progress():
    cluster = generate_cluster(4, 2, seed=7)
    weights = RewardWeights()
    model = MigrationCostModel()
    all_improved = True
    total_wins, total_cases = 0, 0
    details = []
    for seed in (1, 2, 3):
        start = time.perf_counter()
        agent, log = train(20, 50.0, 150.0, cluster, weights, model, DqnConfig(episodes=300, seed=seed))
        elapsed = time.perf_counter() - start
        assert elapsed < 300.0, f"seed {seed} took {elapsed:.0f}s"
        first = float(np.mean([l.ep_return for l in log[:50]]))
        last = float(np.mean([l.ep_return for l in log[-50:]]))
        improved = last > first
        all_improved &= improved
        wins = 0
        for i in range(20):
            wl = generate_workload(20, 50.0, 150.0, cluster.m, seed=9000 + i)
            _, m_dqn = greedy_rollout(agent.online, wl, cluster, weights, model)
            m_rnd = evaluate_assignment(wl, cluster, schedule_random(wl, cluster, 9000 + i), model)
            wins += m_dqn.objective <= m_rnd.objective
        total_wins += wins
        total_cases += 20
        details.append(f"seed {seed}: first50={first:.1f} last50={last:.1f} vs_random={wins}/20 {elapsed:.0f}s")
    win_rate = total_wins / total_cases
    ok = all_improved and win_rate >= 0.9
    report("C5 learning progress", ok, "; ".join(details) + f"; win rate {win_rate:.0%}")


def test_c6_near_oracle_at_tiny_scale():
    cluster = generate_cluster(2, 1, seed=11)
    # reward aligned with the scheduling objective so the comparison is
    # against what the network was actually trained to minimize
    weights = RewardWeights(alpha=1.0, beta=0.0, gamma_m=1.0)
    model = MigrationCostModel()
    start = time.perf_counter()
    agent, _ = train(6, 50.0, 150.0, cluster, weights, model, DqnConfig(episodes=1000, seed=5))
    elapsed = time.perf_counter() - start
    hits = 0
    worst_ratio = 0.0
    for i in range(50):
        wl = generate_workload(6, 50.0, 150.0, cluster.m, seed=70_000 + i)
        _, m_dqn = greedy_rollout(agent.online, wl, cluster, weights, model)
        _, m_opt = brute_force_optimal(wl, cluster, model)
        ratio = m_dqn.objective / m_opt.objective
        worst_ratio = max(worst_ratio, ratio)
        hits += ratio <= 1.10
    ok = hits >= 40 and elapsed < 300.0
    report(
        "C6 near-oracle at tiny scale",
        ok,
        f"{hits}/50 within 10% of optimal (worst ratio {worst_ratio:.3f}), trained in {elapsed:.0f}s",
    )


def test_c7_processing_time_ordering_at_500_tasks():
    config = ExperimentConfig()  # 500 tasks, demands 250-750, 10 edge + 3 cloud nodes
    rows, _ = run_comparison(config, ["ps", "lbs", "dqn"])
    by_seed = {}
    for r in rows:
        by_seed.setdefault(r.seed, {})[r.algorithm] = r.t_total
    hits = 0
    lines = []
    for seed in config.replicate_seeds:
        cell = by_seed[seed]
        ordered = cell["dqn"] < cell["lbs"] < cell["ps"]
        hits += ordered
        lines.append(
            f"seed {seed}: dqn={cell['dqn']:.0f} lbs={cell['lbs']:.0f} ps={cell['ps']:.0f} "
            f"{'ok' if ordered else 'violated'}"
        )
    ok = hits >= 4
    report(
        "C7 processing-time ordering (dqn < lbs < ps)",
        ok,
        f"{hits}/5 seed sets ordered; " + "; ".join(lines),
    )


def test_c8_cli_determinism(tmp_path):
    import json

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "cluster": {"m": 2, "k": 1, "seed": 3},
                "task_scales": [[6, 50, 150]],
                "dqn": {
                    "episodes": 6,
                    "seed": 4,
                    "learn_start": 12,
                    "buffer_capacity": 200,
                    "batch_size": 8,
                    "hidden": [16],
                },
                "replicate_seeds": [21, 22],
                "output_dir": str(tmp_path / "out"),
            }
        )
    )
    for name in ("a", "b"):
        assert main(["train", "--config", str(cfg_path), "--out", str(tmp_path / f"{name}.json")]) == 0
        assert (
            main(
                [
                    "compare",
                    "--config",
                    str(cfg_path),
                    "--algorithms",
                    "ps,lbs,dqn",
                    "--no-figures",
                    "--out",
                    str(tmp_path / name / "results.csv"),
                ]
            )
            == 0
        )
    model_same = (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    log_same = (tmp_path / "a_log.csv").read_bytes() == (tmp_path / "b_log.csv").read_bytes()
    results_same = (
        (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()
    )
    summary_same = (
        (tmp_path / "a/results_summary.csv").read_bytes()
        == (tmp_path / "b/results_summary.csv").read_bytes()
    )
    ok = model_same and log_same and results_same and summary_same
    report(
        "C8 CLI determinism",
        ok,
        f"model={model_same} log={log_same} results={results_same} summary={summary_same}",
    )


def test_c9_replay_and_schedule_invariants():
    # ring buffer evicts oldest-first
    buf = ReplayBuffer(2)
    a = Transition(np.array([0.0]), 0, 0.0, np.array([0.0]), False)
    b = Transition(np.array([1.0]), 1, 0.0, np.array([1.0]), False)
    c = Transition(np.array([2.0]), 2, 0.0, np.array([2.0]), False)
    for t in (a, b, c):
        buf.push(t)
    eviction_ok = buf.items() == [b, c] and len(buf) == 2

    # epsilon schedule endpoints and midpoint
    cfg = DqnConfig(epsilon_decay_steps=1000)
    eps_ok = (
        epsilon_at(cfg, 0) == 1.0
        and epsilon_at(cfg, 1000) == 0.05
        and epsilon_at(cfg, 10_000) == 0.05
        and abs(epsilon_at(cfg, 500) - 0.525) < 1e-12
    )

    # target network equals online bit-for-bit right after a sync
    spec = MlpSpec(input_dim=3, hidden=(5,), output_dim=2, init_seed=1)
    agent = DqnAgent(spec, DqnConfig(seed=1, target_sync_every=2, grad_clip=None))
    rng = np.random.default_rng(2)
    sync_ok = True
    for i in range(1, 5):
        before = [w.copy() for w in agent.target.weights] + [bb.copy() for bb in agent.target.biases]
        batch = [Transition(rng.normal(size=3), 0, 1.0, rng.normal(size=3), False) for _ in range(4)]
        agent.learn_step(batch)
        after = list(agent.target.weights) + list(agent.target.biases)
        if i % 2 == 0:
            online = list(agent.online.weights) + list(agent.online.biases)
            sync_ok &= all(np.array_equal(x, y) for x, y in zip(after, online))
        else:
            sync_ok &= all(np.array_equal(x, y) for x, y in zip(before, after))

    ok = eviction_ok and eps_ok and sync_ok
    report(
        "C9 replay and schedule invariants",
        ok,
        f"eviction={eviction_ok} epsilon={eps_ok} target_sync={sync_ok}",
    )
