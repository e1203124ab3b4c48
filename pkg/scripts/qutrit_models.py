"""Mutual-information profiles for the qutrit-system models A-D.

Writes one CSV (plus metadata) per model and prints the plateau score at
the final time.

    python3 scripts/qutrit_models.py --trials 100 --out-dir results/qutrit
"""

import argparse
import os

from darwinism.experiments import ExperimentSpec, run, write_outputs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--models", default="A,B,C,D")
    p.add_argument("--n-env", type=int, default=10)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--t-points", type=int, default=100)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="results/qutrit")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name in args.models.split(","):
        spec = ExperimentSpec(name, args.n_env, trials=args.trials, t_points=args.t_points,
                              workers=args.workers, seed=args.seed)
        result = run(spec)
        path = os.path.join(args.out_dir, f"model_{name}.csv")
        write_outputs(result, path, vars(args))
        print(f"model {name}: {result.verdict.label}, final plateau score {result.plateau_scores()[-1]:.3f} -> {path}")


if __name__ == "__main__":
    main()
