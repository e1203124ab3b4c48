"""Models A and D started from entangled, separable, product and singly-branching states.

One random state of each kind is drawn (fixed by --state-seed) and shared
by every trial.

    python3 scripts/initial_state_matrix.py --trials 96 --out-dir results/initial_states
"""

import argparse
import os

import numpy as np

from darwinism.experiments import ExperimentSpec, run, write_outputs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-env", type=int, default=10)
    p.add_argument("--trials", type=int, default=96)
    p.add_argument("--t-points", type=int, default=61)
    p.add_argument("--state-seed", type=int, default=12345)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out-dir", default="results/initial_states")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name in ("A", "D"):
        for kind in ("ent", "sep", "prod", "sbf"):
            spec = ExperimentSpec(name, args.n_env, initial_state=kind, trials=args.trials,
                                  t_points=args.t_points, state_seed=args.state_seed, workers=args.workers)
            result = run(spec)
            path = os.path.join(args.out_dir, f"model_{name}_{kind}.csv")
            write_outputs(result, path, vars(args))
            scores = result.plateau_scores()
            print(f"model {name} x {kind}: plateau score first {scores[0]:.3f}, max {np.max(scores):.3f}, "
                  f"final {scores[-1]:.3f}")


if __name__ == "__main__":
    main()
