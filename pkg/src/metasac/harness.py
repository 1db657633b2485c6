"""Experiment orchestration: training loop, sweeps, CSV logging.

All randomness flows from one seeded root generator split into named
streams, so a run is a pure function of its config.
"""

from __future__ import annotations

import copy
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import alpha as alpha_mod
from . import metagrad, metrics
from . import networks as nets
from . import sac
from .buffers import InitialStateBuffer, ReplayBuffer, Transition
from .envs import make_env

ALGOS = ("sac-v1", "sac-v2", "meta-sac")

CSV_HEADER = "step,eval_return_mean,eval_return_std,log_alpha,q_loss,pi_loss,traj_entropy_rate,state_entropy"


@dataclass
class RunConfig:
    env: str = "pointmass"
    algo: str = "meta-sac"
    seed: int = 0
    total_steps: int = 30_000
    start_step: int = 1_000
    eval_interval: int = 1_000
    eval_rollouts: int = 10
    # networks / optimization (desk-scale width; use 256 for larger problems)
    hidden: int = 64
    batch_size: int = 256
    gamma: float = 0.99
    tau: float = 0.05
    lr_q: float = 3e-4
    lr_pi: float = 3e-4
    twin_q: bool = True
    policy_optimizer: str = ""  # "" = rmsprop for meta-sac, adam otherwise
    rmsprop_rho: float = 0.99
    rmsprop_eps: float = 1e-12
    # temperature
    alpha0: float = 0.2
    alpha_decay: float = 0.0  # fixed tuner only
    alpha_final: float = 0.0  # fixed tuner: >0 selects decay hitting this at the last step
    lr_alpha: float = 3e-3  # scaled up from 3e-4 for the ~100x shorter desk runs
    alpha_grad_clip: float = 0.05
    alpha_optimizer: str = "sgd"
    target_entropy: float = math.nan  # nan = -action_dim
    # replay
    buffer_capacity: int = 1_000_000
    d0_size: int = 256
    # ablations
    meta_states: str = "initial"  # "initial" | "arbitrary"
    meta_q: str = "soft"  # "soft" | "classic"
    resample: bool = True
    meta_order: str = "alpha-first"  # "alpha-first" | "alg1"
    warmup_policy: bool = False  # sample the untrained policy before start_step
    # diagnostics
    metrics_mode: str = "mc"
    metrics_knn_samples: int = 2_000
    out: str = ""

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {ALGOS}")
        if self.total_steps < self.start_step:
            raise ValueError("total_steps must be >= start_step")
        if self.eval_interval < 1:
            raise ValueError("eval_interval must be >= 1")
        if self.meta_states not in ("initial", "arbitrary"):
            raise ValueError(f"bad meta_states {self.meta_states!r}")
        if self.meta_q not in ("soft", "classic"):
            raise ValueError(f"bad meta_q {self.meta_q!r}")
        if self.meta_order not in ("alpha-first", "alg1"):
            raise ValueError(f"bad meta_order {self.meta_order!r}")
        if not self.policy_optimizer:
            self.policy_optimizer = "rmsprop" if self.algo == "meta-sac" else "adam"


@dataclass
class LogRow:
    step: int
    eval_return_mean: float
    eval_return_std: float
    log_alpha: float
    q_loss: float
    pi_loss: float
    traj_entropy_rate: float
    state_entropy: float


@dataclass
class RunLog:
    config: RunConfig
    rows: list[LogRow] = field(default_factory=list)
    applied_alpha_grads: list[float] = field(default_factory=list)
    initial_log_alpha: float = 0.0


def _streams(seed: int) -> dict[str, np.random.Generator]:
    root = np.random.SeedSequence(seed)
    names = ("init", "env", "explore", "policy-noise", "replay", "eval", "metrics")
    return {n: np.random.default_rng(s) for n, s in zip(names, root.spawn(len(names)))}


def train(config: RunConfig) -> RunLog:
    env = make_env(config.env)
    espec = env.spec
    hidden = (config.hidden, config.hidden)
    pi_spec = nets.PolicySpec(espec.state_dim, espec.action_dim, espec.action_bound, hidden)
    q_spec = nets.QSpec(espec.state_dim, espec.action_dim, hidden, twin=config.twin_q)
    rngs = _streams(config.seed)

    pi = nets.init_policy(pi_spec, rngs["init"])
    q = nets.init_q(q_spec, rngs["init"])
    q_targ = copy.deepcopy(q)
    q_opt = sac.make_optimizer("adam", config.lr_q)
    pi_opt = sac.make_optimizer(
        config.policy_optimizer, config.lr_pi, rho=config.rmsprop_rho, eps_rms=config.rmsprop_eps
    )
    if config.algo == "meta-sac" and not isinstance(pi_opt, sac.RMSProp):
        raise ValueError("meta-sac needs the rmsprop policy optimizer")

    # auxiliary critic trained without the entropy term, for the classic-Q ablation
    aux = aux_targ = aux_opt = None
    if config.algo == "meta-sac" and config.meta_q == "classic":
        aux = nets.init_q(q_spec, rngs["init"])
        aux_targ = copy.deepcopy(aux)
        aux_opt = sac.make_optimizer("adam", config.lr_q)

    target_entropy = config.target_entropy
    if math.isnan(target_entropy):
        target_entropy = -float(espec.action_dim)

    fixed = None
    astate = None
    if config.algo == "sac-v1":
        decay = config.alpha_decay
        if config.alpha_final > 0.0:
            fixed = alpha_mod.FixedAlpha.from_endpoints(
                config.alpha0, config.alpha_final, config.total_steps
            )
        else:
            fixed = alpha_mod.FixedAlpha(config.alpha0, decay)
    else:
        astate = alpha_mod.AlphaState(
            log_alpha=min(math.log(config.alpha0), 0.0),
            lr=config.lr_alpha,
            grad_clip=config.alpha_grad_clip,
            optimizer=config.alpha_optimizer,
        )

    d0 = InitialStateBuffer(env, config.d0_size, rngs["env"])
    buffer = ReplayBuffer(espec.state_dim, espec.action_dim, config.buffer_capacity)

    log = RunLog(config=config)
    log.initial_log_alpha = math.log(fixed.value(0)) if fixed else astate.log_alpha
    last_q_loss = 0.0
    last_pi_loss = 0.0

    def current_alpha(t: int) -> float:
        return fixed.value(t) if fixed else astate.alpha

    def q_update(batch, a_now: float):
        nonlocal last_q_loss
        y = sac.q_target(
            pi_spec, q_spec, pi, q_targ, batch, a_now, config.gamma, rngs["policy-noise"]
        )
        last_q_loss, grads = sac.q_loss(q_spec, q, batch, y)
        q_opt.step(q, grads)
        nets.polyak_update(q_targ, q, config.tau)
        if aux is not None:
            y2 = sac.q_target(
                pi_spec, q_spec, pi, aux_targ, batch, a_now, config.gamma,
                rngs["policy-noise"], soft=False,
            )
            _, g2 = sac.q_loss(q_spec, aux, batch, y2)
            aux_opt.step(aux, g2)
            nets.polyak_update(aux_targ, aux, config.tau)

    def pi_update(batch, a_now: float) -> float:
        nonlocal last_pi_loss
        noise = rngs["policy-noise"].standard_normal((len(batch), espec.action_dim))
        last_pi_loss, grads, mean_logp = sac.policy_loss(
            pi_spec, q_spec, pi, q, a_now, batch.s, noise
        )
        pi_opt.step(pi, grads)
        return mean_logp

    def alpha_update_meta(batch):
        if config.meta_states == "initial":
            s0 = d0.sample(config.batch_size, rngs["replay"])
        else:
            s0 = buffer.sample(config.batch_size, rngs["replay"]).s
        noise = rngs["policy-noise"].standard_normal((len(batch), espec.action_dim))
        g = metagrad.meta_alpha_grad(
            pi_spec, q_spec, pi, q, batch.s, noise, s0, astate.alpha,
            pi_opt.snapshot(pi), config.lr_pi, config.rmsprop_rho, config.rmsprop_eps,
            q_meta=aux,
        )
        _, applied = alpha_mod.meta_update(astate, g)
        log.applied_alpha_grads.append(applied)

    def update_cycle():
        batch = buffer.sample(config.batch_size, rngs["replay"])
        if config.algo == "meta-sac" and config.meta_order == "alpha-first":
            alpha_update_meta(batch)
            real = buffer.resample_fresh(batch, rngs["replay"], config.resample)
            a_now = astate.alpha
            q_update(real, a_now)
            pi_update(real, a_now)
        elif config.algo == "meta-sac":  # literal listed order: critic, policy, then alpha
            real = buffer.resample_fresh(batch, rngs["replay"], config.resample)
            a_now = astate.alpha
            q_update(real, a_now)
            pi_update(real, a_now)
            alpha_update_meta(batch)
        else:
            a_now = current_alpha(t)
            q_update(batch, a_now)
            mean_logp = pi_update(batch, a_now)
            if config.algo == "sac-v2":
                alpha_mod.dual_update(astate, [mean_logp], target_entropy)

    def do_eval(step: int):
        mean, std, eval_states = sac.evaluate(
            env, pi_spec, pi, config.eval_rollouts, rngs["eval"]
        )
        traj_h = metrics.trajectory_entropy_rate(
            eval_states, pi_spec, pi, mode=config.metrics_mode, rng=rngs["metrics"]
        )
        n = min(buffer.size, config.metrics_knn_samples)
        if n > 3:
            idx = rngs["metrics"].choice(buffer.size, size=n, replace=False)
            state_h = metrics.knn_entropy(buffer._s[idx], k=3)
        else:
            state_h = 0.0
        la = math.log(current_alpha(step)) if fixed else astate.log_alpha
        log.rows.append(
            LogRow(step, mean, std, la, last_q_loss, last_pi_loss, traj_h, state_h)
        )

    state = env.reset(rngs["env"])
    for t in range(1, config.total_steps + 1):
        if t <= config.start_step and not config.warmup_policy:
            action = rngs["explore"].uniform(
                -espec.action_bound, espec.action_bound, size=espec.action_dim
            )
        else:
            noise = rngs["policy-noise"].standard_normal((1, espec.action_dim))
            action = nets.policy_sample_np(pi_spec, pi, state.vec[None, :], noise)[0][0]
        nxt, reward, done = env.step(state, action)
        # horizon truncation still bootstraps, so terminal stays False here
        buffer.push(Transition(state.vec, np.asarray(action), reward, nxt.vec, False))
        state = env.reset(rngs["env"]) if done else nxt

        if t > config.start_step:
            update_cycle()
            if not (math.isfinite(last_q_loss) and math.isfinite(last_pi_loss)):
                raise FloatingPointError(f"non-finite loss at step {t}")
        if t % config.eval_interval == 0:
            do_eval(t)
    return log


# ---------------------------------------------------------------------------
# CSV and plotting


def _fmt(x: float) -> str:
    return "%.17g" % x


def emit_csv(log: RunLog, path: str):
    with open(path, "w") as f:
        f.write(CSV_HEADER + "\n")
        for r in log.rows:
            vals = [str(r.step)] + [
                _fmt(v)
                for v in (
                    r.eval_return_mean, r.eval_return_std, r.log_alpha,
                    r.q_loss, r.pi_loss, r.traj_entropy_rate, r.state_entropy,
                )
            ]
            f.write(",".join(vals) + "\n")


def parse_csv(path: str) -> list[LogRow]:
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in f:
            cells = line.strip().split(",")
            rows.append(LogRow(int(cells[0]), *[float(c) for c in cells[1:]]))
    return rows


def smooth_curve(values, window: int = 20):
    """Running mean over the trailing `window` points (curve smoothing)."""
    values = np.asarray(values, dtype=np.float64)
    return np.array([values[max(0, i + 1 - window): i + 1].mean() for i in range(len(values))])


def write_svg(rows: list[LogRow], path: str, width: int = 640, height: int = 360):
    """Bare-bones learning-curve chart (step vs. mean evaluation return)."""
    xs = [r.step for r in rows]
    ys = [r.eval_return_mean for r in rows]
    if not xs:
        xs, ys = [0], [0.0]
    x0, x1 = min(xs), max(xs) or 1
    y0, y1 = min(ys), max(ys)
    if y1 == y0:
        y1 = y0 + 1.0
    pts = " ".join(
        f"{40 + (x - x0) / (x1 - x0 or 1) * (width - 60):.1f},"
        f"{height - 30 - (y - y0) / (y1 - y0) * (height - 60):.1f}"
        for x, y in zip(xs, ys)
    )
    with open(path, "w") as f:
        f.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
            f'<rect width="100%" height="100%" fill="white"/>'
            f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>'
            f'<text x="10" y="15" font-size="12">return [{y0:.2f}, {y1:.2f}] '
            f"over steps [{x0}, {x1}]</text></svg>\n"
        )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class RunResult:
    config: RunConfig
    final_window_mean: float
    final_log_alpha: float
    initial_log_alpha: float
    error: str = ""
    log: RunLog | None = None


def _run_one(args) -> RunResult:
    config, window, keep_log = args
    try:
        log = train(config)
        returns = [r.eval_return_mean for r in log.rows]
        fw = float(np.mean(returns[-window:])) if returns else math.nan
        return RunResult(
            config, fw,
            log.rows[-1].log_alpha if log.rows else math.nan,
            log.initial_log_alpha,
            log=log if keep_log else None,
        )
    except Exception as e:  # keep partial sweep results
        return RunResult(config, math.nan, math.nan, math.nan, error=f"{type(e).__name__}: {e}")


def _label(c: RunConfig) -> str:
    if c.algo == "sac-v1":
        return f"sac-v1(alpha={c.alpha0:g})"
    return c.algo


def sweep(
    configs: list[RunConfig],
    window: int = 20,
    workers: int = 1,
    out_path: str | None = None,
    keep_logs: bool = False,
):
    """Run each config, aggregate final-window returns per (env, algo) group.

    Returns (per-run results, summary rows). Each summary row is
    (env, label, n_seeds, mean, half_std) over seeds, mirroring the
    mean / half-std convention of the learning-curve plots.
    """
    if not configs:
        raise ValueError("sweep: no configs")
    jobs = [(c, window, keep_logs) for c in configs]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_run_one, jobs)
    else:
        results = [_run_one(j) for j in jobs]

    groups: dict[tuple[str, str], list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.config.env, _label(r.config)), []).append(r)
    summary = []
    for (env_name, label), rs in sorted(groups.items()):
        ok = [r.final_window_mean for r in rs if not r.error]
        mean = float(np.mean(ok)) if ok else math.nan
        half_std = float(np.std(ok) / 2.0) if ok else math.nan
        summary.append((env_name, label, len(ok), mean, half_std))
    if out_path:
        with open(out_path, "w") as f:
            f.write("env,setting,n_seeds,final_window_mean,half_std\n")
            for env_name, label, n, mean, half_std in summary:
                f.write(f"{env_name},{label},{n},{_fmt(mean)},{_fmt(half_std)}\n")
    for r in results:
        if r.error:
            print(f"sweep: run failed ({r.config.env}/{r.config.algo}/seed={r.config.seed}): {r.error}")
    return results, summary
