"""Command-line interface.

Subcommands: gen, train, compare, oracle-check, gradcheck, plot.
Exit codes are a stable contract: 0 success, 2 usage or configuration
error, 3 training failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dqn as dqn_mod
from . import harness, nn, plots
from .model import generate_cluster, generate_workload, save_cluster, save_workload
from .nn import MlpSpec, TrainingError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_VERIFICATION = 4


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config JSON")
    common.add_argument("--seed", type=int, help="override the command's seed")
    common.add_argument("--out", type=Path, help="output path")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgesched", description=__doc__)
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", parents=[common], help="generate workload.json and cluster.json")
    p_gen.add_argument("--n", type=int, default=100, help="number of tasks")
    p_gen.add_argument("--demand-lo", type=float, default=50.0)
    p_gen.add_argument("--demand-hi", type=float, default=150.0)
    p_gen.add_argument("--m", type=int, default=10, help="edge node count")
    p_gen.add_argument("--k", type=int, default=3, help="cloud node count")
    p_gen.add_argument("--edge-cap-lo", type=float, default=80.0)
    p_gen.add_argument("--edge-cap-hi", type=float, default=120.0)
    p_gen.add_argument("--cloud-cap-lo", type=float, default=300.0)
    p_gen.add_argument("--cloud-cap-hi", type=float, default=500.0)

    p_train = sub.add_parser("train", parents=[common], help="train a DQN model from a config")
    p_train.add_argument("--scale-index", type=int, default=0, help="which task_scales row to train for")

    p_cmp = sub.add_parser("compare", parents=[common], help="run the algorithm comparison grid")
    p_cmp.add_argument(
        "--algorithms",
        default="ps,lbs,dqn",
        help="comma-separated subset of: " + ",".join(harness.ALGORITHMS),
    )
    p_cmp.add_argument("--model", type=Path, help="pre-trained model to use for every scale")
    p_cmp.add_argument("--timing", action="store_true", help="record real wall times in the CSV")
    p_cmp.add_argument("--no-figures", action="store_true", help="skip SVG figure rendering")
    p_cmp.add_argument(
        "--dump-assignments", action="store_true", help="save every cell's placement as JSON"
    )

    p_oc = sub.add_parser("oracle-check", parents=[common], help="cross-validate the brute-force oracle")
    p_oc.add_argument("--max-n", type=int, default=6)
    p_oc.add_argument("--instances", type=int, default=100)
    p_oc.add_argument("--m", type=int, default=2)
    p_oc.add_argument("--k", type=int, default=1)

    p_gc = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient verification")
    p_gc.add_argument("--tolerance", type=float, default=1e-4)

    p_plot = sub.add_parser("plot", parents=[common], help="render one SVG chart from a results CSV")
    p_plot.add_argument("--results", type=Path, required=True, help="results CSV from compare")
    p_plot.add_argument("--kind", choices=plots.PLOT_KINDS, required=True)

    return parser


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else 0
    out_dir = args.out if args.out is not None else Path(".")
    workload = generate_workload(args.n, args.demand_lo, args.demand_hi, args.m, seed)
    cluster = generate_cluster(
        args.m,
        args.k,
        (args.edge_cap_lo, args.edge_cap_hi),
        (args.cloud_cap_lo, args.cloud_cap_hi),
        seed,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_workload(workload, out_dir / "workload.json")
    save_cluster(cluster, out_dir / "cluster.json")
    print(f"wrote {out_dir / 'workload.json'} and {out_dir / 'cluster.json'}")
    return EXIT_OK


def _load_config(args) -> harness.ExperimentConfig:
    if args.config is None:
        raise ValueError("--config is required for this command")
    config = harness.load_config(args.config)
    if args.seed is not None:
        import dataclasses

        config = dataclasses.replace(
            config, dqn=dataclasses.replace(config.dqn, seed=args.seed)
        )
    return config


def cmd_train(args) -> int:
    config = _load_config(args)
    if not 0 <= args.scale_index < len(config.task_scales):
        raise ValueError(f"scale index {args.scale_index} out of range")
    n, lo, hi = config.task_scales[args.scale_index]
    cluster = config.cluster.build()
    agent, log = dqn_mod.train(
        n, lo, hi, cluster, config.reward_weights, config.migration, config.dqn
    )
    model_path = args.out if args.out is not None else Path(config.output_dir) / "model.json"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    dqn_mod.save_agent(agent, model_path)
    log_path = model_path.with_name(model_path.stem + "_log.csv")
    harness.write_training_log_csv(log, log_path)
    if log:
        last = log[-1]
        print(
            f"episode {last.episode}: return={last.ep_return:.4f} "
            f"mean_loss={last.mean_loss:.6f} epsilon={last.epsilon:.3f} "
            f"t_total={last.t_total:.2f}"
        )
    else:
        print("no episodes trained; wrote initialized model")
    print(f"wrote {model_path} and {log_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _load_config(args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    if not algorithms:
        raise ValueError("no algorithms requested")
    trained = None
    if args.model is not None and "dqn" in algorithms:
        if not args.model.exists():
            raise ValueError(f"model file not found: {args.model}")
        spec, params, model_cfg = dqn_mod.load_agent(args.model)
        agent = dqn_mod.DqnAgent(spec, model_cfg)
        agent.online = params
        trained = {n: agent for n, _, _ in config.task_scales}
    results_path = args.out if args.out is not None else Path(config.output_dir) / "results.csv"
    results_path.parent.mkdir(parents=True, exist_ok=True)
    dump_dir = results_path.parent / "assignments" if args.dump_assignments else None
    rows, _ = harness.run_comparison(
        config, algorithms, record_timing=args.timing, trained=trained, dump_dir=dump_dir
    )
    harness.write_results_csv(rows, results_path)
    summary_path = results_path.with_name(results_path.stem + "_summary.csv")
    harness.write_summary_csv(harness.summarize(rows), summary_path)
    written = [results_path, summary_path]
    if not args.no_figures:
        written += plots.render_report_figures(rows, results_path.parent, results_path.stem)
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    seed = args.seed if args.seed is not None else 0
    report = harness.oracle_check(args.max_n, args.instances, seed, args.m, args.k)
    print(f"oracle check: {report.passed}/{report.instances} instances passed")
    for line in report.failures:
        print(f"FAIL {line}")
    return EXIT_OK if report.ok else EXIT_VERIFICATION


def cmd_gradcheck(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(seed)
    specs = [nn.DEFAULT_CHECK_SPEC]
    for _ in range(5):
        n_hidden = int(rng.integers(1, 3))
        hidden = tuple(int(rng.integers(4, 65)) for _ in range(n_hidden))
        specs.append(
            MlpSpec(
                input_dim=int(rng.integers(2, 12)),
                hidden=hidden,
                output_dim=int(rng.integers(2, 10)),
                init_seed=int(rng.integers(0, 2**31)),
            )
        )
    worst = None
    ok = True
    for spec in specs:
        report = nn.gradient_check(spec, seed=seed, tolerance=args.tolerance)
        dims = f"{spec.input_dim}->{'->'.join(map(str, spec.hidden))}->{spec.output_dim}"
        status = "pass" if report.passed else "FAIL"
        print(f"{status} {dims}: max_rel_error={report.max_rel_error:.3e} at {report.worst_param}")
        if worst is None or report.max_rel_error > worst.max_rel_error:
            worst = report
        ok = ok and report.passed
    if not ok:
        print(f"worst coordinate: {worst.worst_param} rel_error={worst.max_rel_error:.3e}")
        return EXIT_VERIFICATION
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.out is None:
        raise ValueError("--out is required for plot")
    rows = harness.read_results_csv(args.results)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    plots.render_plot(rows, args.kind, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "compare": cmd_compare,
    "oracle-check": cmd_oracle_check,
    "gradcheck": cmd_gradcheck,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
