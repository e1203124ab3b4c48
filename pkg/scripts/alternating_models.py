"""Mutual-information profiles for the qubit models E-H with alternating couplings.

Also reports, at the final time, the slope of model G's curve at fragment
size 2 and across the half-environment point.

    python3 scripts/alternating_models.py --trials 500 --out-dir results/alternating
"""

import argparse
import os

from darwinism.experiments import ExperimentSpec, run, write_outputs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--models", default="E,F,G,H")
    p.add_argument("--n-env", type=int, default=11)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--t-max", type=float, default=None, help="defaults to eight switching periods")
    p.add_argument("--t-points", type=int, default=100)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out-dir", default="results/alternating")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name in args.models.split(","):
        spec = ExperimentSpec(name, args.n_env, trials=args.trials, t_max=args.t_max, t_points=args.t_points,
                              workers=args.workers)
        result = run(spec)
        path = os.path.join(args.out_dir, f"model_{name}.csv")
        write_outputs(result, path, vars(args))
        curve = result.profile.mean[-1]
        n = args.n_env
        print(f"model {name}: {result.verdict.label}, final plateau score {result.plateau_scores()[-1]:.3f}, "
              f"slope at 2 {(curve[3] - curve[1]) / 2:.3f}, at N/2 {curve[n // 2 + 1] - curve[n // 2]:.3f}")


if __name__ == "__main__":
    main()
