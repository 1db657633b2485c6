"""Short training runs on the point-mass environment.

Trains each temperature strategy for a few thousand steps and prints the
evaluation curve; writes a CSV log and an SVG learning curve for the
metagradient run.
"""

from metasac import harness


def main():
    for algo in ("sac-v1", "sac-v2", "meta-sac"):
        cfg = harness.RunConfig(
            env="pointmass", algo=algo, seed=0,
            total_steps=4000, start_step=500, eval_interval=500,
            eval_rollouts=4, hidden=32, batch_size=64, d0_size=64,
            metrics_mode="gaussian", metrics_knn_samples=500,
        )
        log = harness.train(cfg)
        curve = "  ".join(f"{r.step}:{r.eval_return_mean:.1f}" for r in log.rows)
        print(f"{algo:8s}  {curve}")
        print(f"{'':8s}  log_alpha {log.initial_log_alpha:+.3f} -> {log.rows[-1].log_alpha:+.3f}")
        if algo == "meta-sac":
            harness.emit_csv(log, "pointmass_meta.csv")
            harness.write_svg(log.rows, "pointmass_meta.svg")
            print("wrote pointmass_meta.csv and pointmass_meta.svg")


if __name__ == "__main__":
    main()
