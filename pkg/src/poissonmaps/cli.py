"""Command-line front end: gen-data, train, rollout, eval, lyapunov, gradient-check.

Every command is reproducible from its ``--seed``; numeric defaults follow
the standard data/training protocol (20x51 trajectories at dt 0.1, 2000
epochs, Adam from lr 1.0 decaying to 0.1) and can all be overridden.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import cases, diagnostics, groundtruth, network as net, systems, training
from ._version import __version__

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CASE_MISMATCH = 2
EXIT_NONFINITE_LOSS = 3


@dataclass
class RunConfig:
    """Bundle of everything a command resolved from its arguments."""

    case: str
    system: cases.System
    sampler: groundtruth.SamplerConfig | None = None
    train: training.TrainConfig | None = None
    seed: int = 0


def _load_system(args, case=None):
    if getattr(args, "params", None):
        with open(args.params) as fh:
            doc = json.load(fh)
        system = cases.system_from_json(doc)
        if case is not None and system.case != case:
            raise SystemExit(EXIT_CASE_MISMATCH)
        if getattr(args, "zeta", None) is not None:
            system = cases.System(system.case, system.params, args.zeta)
        return system
    return cases.make_system(case or args.case, zeta=getattr(args, "zeta", None))


def cmd_gen_data(args):
    protocol = (
        groundtruth.SamplerConfig.eval_protocol
        if args.eval_protocol
        else groundtruth.SamplerConfig.train_protocol
    )
    run = RunConfig(
        case=args.case,
        system=_load_system(args),
        sampler=protocol(
            args.case, seed=args.seed, n_traj=args.n_traj, n_steps=args.n_steps, dt=args.dt
        ),
        seed=args.seed,
    )
    pairs, trajs = groundtruth.generate_dataset(run.system, run.sampler)
    manifest = groundtruth.save_dataset(args.out, trajs, run.sampler, run.system.to_json())
    print(f"wrote {len(pairs)} pairs ({len(trajs)} trajectories) to {args.out}")
    print(f"manifest: {manifest}")
    return EXIT_OK


def _read_init_params(arg, n_params):
    if "," in arg:
        values = np.array([float(tok) for tok in arg.split(",") if tok.strip()])
    else:
        with open(arg) as fh:
            values = np.asarray(json.load(fh), dtype=float)
    if values.shape != (n_params,):
        raise SystemExit(EXIT_ERROR)
    return values


def cmd_train(args):
    trajs, manifest = groundtruth.load_dataset(args.data)
    if not trajs:
        print("empty dataset", file=sys.stderr)
        return EXIT_ERROR
    data_case = trajs[0].case
    if args.case is not None and args.case != data_case:
        print(f"dataset case {data_case!r} does not match --case {args.case!r}", file=sys.stderr)
        return EXIT_CASE_MISMATCH
    pairs = groundtruth.trajectories_to_pairs(trajs)
    X, Y, dt = groundtruth.pairs_to_arrays(pairs)
    spec = net.NetworkSpec(case=data_case, cycles=args.cycles, dt=dt, activation=args.activation)
    model = net.Network(spec)
    config = training.TrainConfig(
        epochs=args.epochs,
        lr_initial=args.lr_initial,
        lr_final=args.lr_final,
        seed=args.seed,
        gradient_check=args.gradient_check,
    )
    params0 = _read_init_params(args.init, model.n_params) if args.init else None
    try:
        params, report = training.train(model, X, Y, config, params0=params0)
    except training.NonFiniteLossError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NONFINITE_LOSS
    if args.gradient_check:
        print(f"gradient check: max relative residual {report.grad_check_residual:.3e}")
        if report.grad_check_residual > 1e-5:
            print("gradient check failed (> 1e-5)", file=sys.stderr)
            return EXIT_ERROR
    net.save_model(args.out, spec, params)
    if args.log:
        training.write_loss_log(args.log, report)
    if not np.isfinite(report.final_loss):
        return EXIT_NONFINITE_LOSS
    print(
        f"trained {model.n_params} parameters for {config.epochs} epochs: "
        f"loss {report.losses[0]:.3e} -> {report.final_loss:.3e} "
        f"(best at epoch {report.best_epoch}, {report.wall_time:.1f}s)"
    )
    print(f"model: {args.out}")
    return EXIT_OK


def _initial_state(args, case, dim):
    if args.init:
        if "," in args.init:
            y0 = np.array([float(tok) for tok in args.init.split(",") if tok.strip()])
        else:
            with open(args.init) as fh:
                y0 = np.asarray(json.load(fh), dtype=float)
        if y0.shape != (dim,):
            raise SystemExit(EXIT_ERROR)
        return y0
    config = groundtruth.SamplerConfig.eval_protocol(case, seed=args.seed)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(args.seed), 0])))
    return groundtruth.sample_initial(case, config, rng)


def cmd_rollout(args):
    model, params = net.load_model(args.model)
    y0 = _initial_state(args, model.spec.case, model.dim)
    traj = model.rollout(params, y0, args.steps)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"y{k}" for k in range(model.dim)])
        for t, y in zip(traj.times, traj.states):
            writer.writerow([f"{t:.10g}"] + [f"{v:.16g}" for v in y])
    print(f"rolled out {args.steps} steps to {args.out}")
    return EXIT_OK


def cmd_eval(args):
    model, params = net.load_model(args.model)
    case = model.spec.case
    system = _load_system(args, case=case)
    y0 = _initial_state(args, case, model.dim)
    model_series, truth_series = diagnostics.compare(
        model, params, system, y0, args.steps, csv_path=args.out
    )
    drift_model = model_series.casimir_drift()
    drift_truth = truth_series.casimir_drift()
    print(f"model casimir drift:  {np.max(drift_model):.3e}")
    print(f"truth casimir drift:  {np.max(drift_truth):.3e}")
    print(f"final mae: {model_series.mae[-1]:.3e}")
    print(f"metrics: {args.out}")
    return EXIT_OK


def cmd_lyapunov(args):
    system = _load_system(args)
    y0 = _initial_state(args, system.case, system.dim)
    est = diagnostics.lyapunov(
        system,
        y0,
        delta0=args.delta0,
        horizon=args.horizon,
        renorm_dt=args.renorm_dt,
        seed=args.seed,
    )
    print(f"lambda = {est.lam:.6f}  (delta0={est.delta0:g}, horizon={est.horizon:g})")
    return EXIT_OK


def cmd_gradient_check(args):
    system = cases.make_system(args.case)
    config = groundtruth.SamplerConfig.train_protocol(
        args.case, seed=args.seed, n_traj=2, n_steps=4, dt=args.dt
    )
    pairs, _ = groundtruth.generate_dataset(system, config)
    X, Y, dt = groundtruth.pairs_to_arrays(pairs)
    spec = net.NetworkSpec(case=args.case, cycles=args.cycles, dt=dt)
    model = net.Network(spec)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    params = net.init_params(spec, rng)
    residual = training.gradient_check(model, params, X, Y)
    print(f"gradient check: max relative residual {residual:.3e}")
    return EXIT_OK if residual <= 1e-5 else EXIT_ERROR


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poissonmaps",
        description="Structure-preserving learning of coupled rigid-body and SE(3) dynamics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a reference dataset")
    p.add_argument("--case", required=True, choices=cases.CASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-traj", type=int, default=20)
    p.add_argument("--n-steps", type=int, default=51)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--zeta", type=float, default=None, help="soften the Hamiltonian")
    p.add_argument("--params", default=None, help="system parameter JSON")
    p.add_argument("--eval-protocol", action="store_true", help="held-out initial ranges")
    p.add_argument("--out", default="dataset.jsonl")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--case", default=None, choices=cases.CASES)
    p.add_argument("--cycles", type=int, default=3)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr-initial", type=float, default=1.0)
    p.add_argument("--lr-final", type=float, default=0.1)
    p.add_argument("--activation", default="tanh", choices=("tanh", "sigmoid"))
    p.add_argument("--init", default=None, help="initial params: JSON file or inline list")
    p.add_argument("--gradient-check", action="store_true")
    p.add_argument("--out", default="model.json")
    p.add_argument("--log", default=None, help="loss CSV path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="roll a trained model forward")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", default=None, help="initial state: JSON file or inline list")
    p.add_argument("--out", default="rollout.csv")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("eval", help="compare a trained model against the reference")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", default=None)
    p.add_argument("--params", default=None, help="system parameter JSON")
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--out", default="metrics.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lyapunov", help="estimate the leading Lyapunov exponent")
    p.add_argument("--case", required=True, choices=cases.CASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--params", default=None)
    p.add_argument("--init", default=None)
    p.add_argument("--delta0", type=float, default=1e-8)
    p.add_argument("--horizon", type=float, default=200.0)
    p.add_argument("--renorm-dt", type=float, default=1.0)
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("gradient-check", help="compare reverse-mode and FD gradients")
    p.add_argument("--case", required=True, choices=cases.CASES)
    p.add_argument("--cycles", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=0.1)
    p.set_defaults(func=cmd_gradient_check)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
