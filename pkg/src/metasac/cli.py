"""Command-line entry point: train / sweep / gradcheck / metrics."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import harness, metagrad, metrics
from . import networks as nets
from .harness import RunConfig

_BOOL = {"on": True, "off": False, "true": True, "false": False, "1": True, "0": False}

# config-file / flag keys that map straight onto RunConfig fields
_FIELD_TYPES = {f.name: f.type for f in RunConfig.__dataclass_fields__.values()}


def _coerce(key: str, value: str):
    t = _FIELD_TYPES[key]
    if t == "bool":
        return _BOOL[value.lower()]
    if t == "int":
        return int(value)
    if t == "float":
        return float(value)
    return value


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment; keys use underscores."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = _coerce(key, value)
    return out


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="config file; command-line flags override it")
    p.add_argument("--env", choices=["pointmass", "pendulum"])
    p.add_argument("--algo", choices=list(harness.ALGOS))
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int, dest="total_steps")
    p.add_argument("--alpha", type=float, dest="alpha0")
    p.add_argument("--lr-alpha", type=float, dest="lr_alpha")
    p.add_argument("--target-entropy", type=float, dest="target_entropy")
    p.add_argument("--meta-states", choices=["initial", "arbitrary"], dest="meta_states")
    p.add_argument("--meta-q", choices=["soft", "classic"], dest="meta_q")
    p.add_argument("--resample", choices=["on", "off"])
    p.add_argument("--meta-order", choices=["alpha-first", "alg1"], dest="meta_order")
    p.add_argument("--tau", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--batch", type=int, dest="batch_size")
    p.add_argument("--hidden", type=int)
    p.add_argument("--out")


def _build_config(args) -> RunConfig:
    kv = read_config_file(args.config) if args.config else {}
    for key in _FIELD_TYPES:
        v = getattr(args, key, None)
        if v is not None:
            kv[key] = v
    if getattr(args, "resample", None) is not None:
        kv["resample"] = _BOOL[args.resample]
    return RunConfig(**kv)


def cmd_train(args) -> int:
    config = _build_config(args)
    log = harness.train(config)
    out = config.out or "run.csv"
    harness.emit_csv(log, out)
    if args.svg:
        harness.write_svg(log.rows, args.svg)
    if log.rows:
        last = log.rows[-1]
        print(
            f"done: {config.env}/{config.algo} seed={config.seed} steps={config.total_steps} "
            f"final_return={last.eval_return_mean:.3f} log_alpha={last.log_alpha:.3f} -> {out}"
        )
    return 0


def cmd_sweep(args) -> int:
    base = _build_config(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    algos = args.algos.split(",") if args.algos else [base.algo]
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else [base.alpha0]
    configs = []
    for algo in algos:
        grid = alphas if algo == "sac-v1" else [base.alpha0]
        for a0 in grid:
            for seed in seeds:
                kv = {**base.__dict__, "algo": algo, "alpha0": a0, "seed": seed,
                      "policy_optimizer": ""}
                configs.append(RunConfig(**kv))
    out = args.out or "sweep.csv"
    _, summary = harness.sweep(configs, window=args.window, workers=args.workers, out_path=out)
    for env_name, label, n, mean, half_std in summary:
        print(f"{env_name:10s} {label:24s} n={n} final_window_mean={mean:.3f} +- {half_std:.3f}")
    print(f"summary -> {out}")
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for i in range(args.instances):
        width = int(rng.choice([4, 8, 16]))
        batch = int(rng.choice([4, 16]))
        sdim, adim = int(rng.integers(2, 5)), int(rng.integers(1, 4))
        pi_spec = nets.PolicySpec(sdim, adim, 1.0, (width, width))
        q_spec = nets.QSpec(sdim, adim, (width, width))
        pi = nets.init_policy(pi_spec, rng)
        qp = nets.init_q(q_spec, rng)
        states = rng.standard_normal((batch, sdim))
        noise = rng.standard_normal((batch, adim))
        s0 = rng.standard_normal((batch, sdim))
        a0 = float(np.exp(rng.uniform(-4.0, 0.0)))
        v = {k: rng.uniform(0.0, 0.1, size=p.shape) for k, p in pi.items()}
        common = (pi_spec, q_spec, pi, qp, states, noise, s0, a0, v, 3e-4, 0.99, 1e-12)
        g = metagrad.meta_alpha_grad(*common)
        o = metagrad.meta_alpha_fd_oracle(*common, h=args.h)
        rel = abs(g - o) / max(abs(o), 1e-8)
        worst = max(worst, rel)
        if args.verbose:
            print(f"instance {i:3d}: analytic={g:+.6e} fd={o:+.6e} rel_err={rel:.2e}")
    print(f"gradcheck: {args.instances} instances, max relative error {worst:.3e} "
          f"(tolerance {args.tol:g})")
    return 0 if worst <= args.tol else 1


def cmd_metrics(args) -> int:
    states = np.loadtxt(args.states, delimiter=",", ndmin=2)
    print(f"samples: {states.shape[0]} x {states.shape[1]}")
    print(f"knn_entropy(k={args.k}): {metrics.knn_entropy(states, k=args.k):.6f}")
    if args.checkpoint:
        params, meta = nets.load_checkpoint(args.checkpoint)
        pi_spec = nets.PolicySpec(
            meta["state_dim"], meta["action_dim"], meta["action_bound"],
            tuple(meta["hidden"]),
        )
        h = metrics.trajectory_entropy_rate(
            states, pi_spec, params, mode=args.mode,
            rng=np.random.default_rng(args.seed),
        )
        print(f"traj_entropy_rate({args.mode}): {h:.6f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="metasac")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one training job, write a CSV log")
    _add_run_flags(p)
    p.add_argument("--svg", help="also write a simple learning-curve SVG")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("sweep", help="multi-seed / multi-setting runs plus a summary CSV")
    _add_run_flags(p)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--algos", help="comma list, e.g. sac-v1,sac-v2,meta-sac")
    p.add_argument("--alphas", help="fixed-alpha grid for sac-v1, e.g. 0.05,0.1,0.2,0.4")
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("gradcheck", help="metagradient vs finite-difference oracle")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("metrics", help="entropy estimators over a saved rollout file")
    p.add_argument("--states", required=True, help="CSV, one state vector per row")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--checkpoint", help="policy checkpoint for the trajectory entropy rate")
    p.add_argument("--mode", choices=["gaussian", "mc"], default="mc")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_metrics)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
