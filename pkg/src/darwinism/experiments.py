"""Multi-trial simulation harness.

A run draws one coupling instance per trial (seed = master seed + trial
index), evolves the chosen initial state, and averages the normalized
mutual-information curves across trials. Random initial states are drawn
once from a separate state seed and shared by every trial.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .classifier import ClassifierVerdict, classify
from .evolution import StateVector, evolve
from .information import FragmentSampler, MIProfile, SYSTEM_ENTROPY_FLOOR, linearity_r2, plateau_fraction, state_mi_curve
from .model import HamiltonianModel, SubsystemLayout, instantiate
from .presets import DEMON_SYSTEM_STATE, DEMON_UNIT_STATE, preset
from .rng import stream

MAX_TRIALS = 10_000
INITIAL_KINDS = ("qutrit_product", "y_product", "plus_product", "ent", "sep", "prod", "sbf", "demon", "explicit")
CSV_COLUMNS = ("time", "fragment_size", "mean_mi", "mean_mi_normalized", "stderr", "trials", "n_env")
AVERAGING_CAVEAT = (
    "Averages over random coupling draws stand in for the self-averaging a much larger "
    "environment would provide; single small-environment trials fluctuate strongly."
)


class ResourceCapError(ValueError):
    pass


# ---------------------------------------------------------------------------
# initial states


def _haar_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    # first column of a Haar unitary == normalized complex Gaussian vector
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def _product(vectors) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, v)
    return out


def make_initial_state(kind: str, layout: SubsystemLayout, seed: int = 0, amplitudes=None) -> StateVector:
    """Named initial-state family on ``layout``; random kinds draw from the "haar" stream of ``seed``."""
    dims = layout.dims
    if kind == "qutrit_product":
        if dims[0] != 3:
            raise ValueError("qutrit_product needs a qutrit system")
        return StateVector(layout, _product(np.ones(d) / np.sqrt(d) for d in dims))
    if kind == "plus_product":
        return StateVector(layout, _product(np.ones(d) / np.sqrt(d) for d in dims))
    if kind == "y_product":
        if any(d != 2 for d in dims):
            raise ValueError("y_product needs qubits on every site")
        return StateVector(layout, _product(np.array([1.0, 1.0j]) / np.sqrt(2) for _ in dims))
    if kind == "demon":
        if dims[0] != 3 or any(d != 2 for d in dims[1:]):
            raise ValueError("demon state needs a qutrit system and qubit units")
        return StateVector(layout, _product([DEMON_SYSTEM_STATE] + [DEMON_UNIT_STATE] * (len(dims) - 1)))
    if kind == "explicit":
        if amplitudes is None:
            raise ValueError("explicit initial state needs amplitudes")
        return StateVector.normalized(layout, amplitudes)
    rng = stream(seed, "haar")
    if kind == "ent":
        return StateVector(layout, _haar_vector(rng, layout.dim))
    if kind == "sep":
        env_dim = layout.dim // dims[0]
        return StateVector(layout, np.kron(_haar_vector(rng, dims[0]), _haar_vector(rng, env_dim)))
    if kind == "prod":
        return StateVector(layout, _product(_haar_vector(rng, d) for d in dims))
    if kind == "sbf":
        d_s = dims[0]
        amp = np.zeros(layout.dim, dtype=complex)
        for n in range(d_s):
            env = _product(_haar_vector(rng, d) for d in dims[1:])
            amp += np.kron(np.eye(d_s)[n], env) / np.sqrt(d_s)
        return StateVector(layout, amp)
    raise ValueError(f"unknown initial state kind {kind!r}")


# ---------------------------------------------------------------------------
# specs and results


@dataclass
class ExperimentSpec:
    preset: str = "A"
    n_env: int | None = None
    params: dict = field(default_factory=dict)
    initial_state: str | None = None  # None: the preset's default
    trials: int = 1
    t_max: float | None = None  # None: the preset's default
    t_points: int = 100
    times: list | None = None  # explicit grid overrides t_max / t_points
    sampler: str = "auto"
    seed: int = 0
    state_seed: int = 12345
    sizes: list | None = None  # restrict fragment sizes (all by default)
    all_units: bool = False  # collision models: use every unit as fragment universe
    epsilon: float = 0.15
    workers: int = 1
    tol: float = 1e-10
    amplitudes: list | None = None  # for initial_state == "explicit"

    def build_model(self) -> HamiltonianModel:
        return preset(self.preset, self.n_env, self.params)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("amplitudes")
        return out


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    profile: MIProfile
    verdict: ClassifierVerdict
    trial_meta: list
    wall_time: dict
    linearity: np.ndarray | None = None
    resolved: dict = field(default_factory=dict)

    def plateau_scores(self, epsilon: float | None = None) -> np.ndarray:
        eps = self.spec.epsilon if epsilon is None else epsilon
        return np.array([plateau_fraction(self.profile.mean[i, : int(n) + 1], eps)
                         for i, n in enumerate(self.profile.n_env)])


def time_grid(spec: ExperimentSpec, model: HamiltonianModel) -> np.ndarray:
    if spec.times is not None:
        return np.asarray(spec.times, dtype=float)
    t_max = spec.t_max if spec.t_max is not None else float(model.meta.get("t_max", 6.0))
    if spec.t_points < 1:
        raise ValueError("t_points must be >= 1")
    return np.linspace(0.0, t_max, spec.t_points)


def fragment_universe(model: HamiltonianModel, t: float, all_units: bool = False) -> list[int]:
    """Environment sites counted as fragments at time t.

    For collision models only units whose window opened strictly before t
    (i.e. that have interacted for some interval) count, unless all_units.
    """
    sites = list(range(1, model.layout.n_env + 1))
    if all_units or not model.is_collision():
        return sites
    out = []
    for s in sites:
        start = model.window_start(s)
        if start is not None and start < t - 1e-12:
            out.append(s)
    return out


def _initial(spec: ExperimentSpec, model: HamiltonianModel) -> StateVector:
    kind = spec.initial_state or model.meta.get("initial_state", "plus_product")
    return make_initial_state(kind, model.layout, spec.state_seed, spec.amplitudes)


def run_trial(spec: ExperimentSpec, model: HamiltonianModel, psi0: StateVector, trial: int, times: np.ndarray):
    """(system entropy (T,), raw mean MI (T, N+1), metadata) for one coefficient draw."""
    seed = spec.seed + trial
    instance = instantiate(model, seed)
    traj = evolve(instance, psi0, times, spec.tol)
    sampler = FragmentSampler.parse(spec.sampler)
    n = model.layout.n_env
    s_sys = np.zeros(len(times))
    raw = np.full((len(times), n + 1), np.nan)
    for i, t in enumerate(times):
        universe = fragment_universe(model, t, spec.all_units)
        s_s, mean, _ = state_mi_curve(traj.states[i], universe, sampler, seed, model.layout.dims, spec.sizes)
        s_sys[i] = s_s
        raw[i, : len(mean)] = mean
    digest = hashlib.sha256(instance.coefficients.tobytes()).hexdigest()[:16]
    norm_dev = float(np.max(np.abs(np.linalg.norm(traj.states, axis=1) - 1.0)))
    return s_sys, raw, {"trial": trial, "seed": seed, "coefficients_sha256": digest, "max_norm_deviation": norm_dev}


def _trial_job(args):
    spec, model, psi0, trial, times = args
    t0 = time.perf_counter()
    out = run_trial(spec, model, psi0, trial, times)
    return out + (time.perf_counter() - t0,)


def run(spec: ExperimentSpec, model: HamiltonianModel | None = None) -> ExperimentResult:
    """Run every trial and average the normalized curves in trial order."""
    if not 1 <= spec.trials <= MAX_TRIALS:
        raise ResourceCapError(f"trials must be in 1..{MAX_TRIALS}")
    t_start = time.perf_counter()
    model = spec.build_model() if model is None else model
    verdict = classify(model)
    times = time_grid(spec, model)
    psi0 = _initial(spec, model)
    jobs = [(spec, model, psi0, k, times) for k in range(spec.trials)]
    if spec.workers > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_trial_job, jobs))  # map keeps trial order
    else:
        results = [_trial_job(j) for j in jobs]
    n = model.layout.n_env
    norm = np.zeros((spec.trials, len(times), n + 1))
    raw = np.zeros_like(norm)
    s_sys = np.zeros((spec.trials, len(times)))
    for k, (s, r, _, _) in enumerate(results):
        s_sys[k] = s
        raw[k] = r
        ok = s > SYSTEM_ENTROPY_FLOOR
        norm[k] = np.where(ok[:, None], r / np.where(ok, s, 1.0)[:, None], np.where(np.isnan(r), np.nan, 0.0))
    mean = norm.mean(axis=0)
    stderr = norm.std(axis=0, ddof=1) / np.sqrt(spec.trials) if spec.trials > 1 else np.zeros_like(mean)
    n_env = np.array([len(fragment_universe(model, t, spec.all_units)) for t in times])
    profile = MIProfile(times, np.arange(n + 1), mean, stderr, raw.mean(axis=0), spec.trials, n_env,
                        system_entropy=s_sys.mean(axis=0))
    trial_secs = [r[3] for r in results]
    wall = {"total_s": time.perf_counter() - t_start, "trial_mean_s": float(np.mean(trial_secs)),
            "trial_max_s": float(np.max(trial_secs))}
    result = ExperimentResult(spec, profile, verdict, [r[2] for r in results], wall)
    result.resolved = {
        "initial_state": spec.initial_state or model.meta.get("initial_state"),
        "n_env": n,
        "t_max": float(times[-1]),
        "t_points": int(len(times)),
        "model_meta": model.meta,
    }
    if model.is_collision():
        result.linearity = linearity_by_time(profile)
    return result


def linearity_by_time(profile: MIProfile) -> np.ndarray:
    """R^2 of a straight-line fit of raw MI against fragment size, per time (NaN below 3 fragments)."""
    out = np.full(len(profile.times), np.nan)
    for i, n in enumerate(profile.n_env):
        if n >= 3:
            out[i] = linearity_r2(profile.mean_raw[i, : int(n) + 1])
    return out


def run_demon(spec: ExperimentSpec) -> ExperimentResult:
    """Demon run: MI profile over interacted units plus the per-time linearity diagnostic."""
    if spec.preset != "demon":
        raise ValueError("run_demon needs the demon preset")
    result = run(spec)
    result.linearity = linearity_by_time(result.profile)
    return result


# ---------------------------------------------------------------------------
# persistence


def write_csv(result: ExperimentResult, path: str) -> None:
    p = result.profile
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for i, t in enumerate(p.times):
            for f in range(int(p.n_env[i]) + 1):
                if np.isnan(p.mean[i, f]):
                    continue
                w.writerow([repr(float(t)), f, repr(float(p.mean_raw[i, f])), repr(float(p.mean[i, f])),
                            repr(float(p.stderr[i, f])), p.trials, int(p.n_env[i])])


def read_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    return rows


def metadata(result: ExperimentResult, config: dict | None = None) -> dict:
    from .modelio import verdict_to_dict

    scores = result.plateau_scores()
    meta = {
        "software": {"package": "darwinism", "version": __version__, "numpy": np.__version__},
        "spec": result.spec.to_dict(),
        "resolved": result.resolved,
        "config": config or {},
        "trials": result.trial_meta,
        "verdict": verdict_to_dict(result.verdict),
        "wall_time": result.wall_time,
        "plateau": {
            "epsilon": result.spec.epsilon,
            "note": "plateau score = fraction of sizes 1..N-1 with |normalized MI - 1| <= epsilon "
                    "(an operational criterion of this toolkit)",
            "times": [float(t) for t in result.profile.times],
            "scores": [float(s) for s in scores],
        },
        "caveat": AVERAGING_CAVEAT,
    }
    if result.linearity is not None:
        meta["linearity_r2"] = [None if math.isnan(v) else float(v) for v in result.linearity]
    return meta


def write_outputs(result: ExperimentResult, csv_path: str, config: dict | None = None) -> str:
    """CSV plus ``<csv>.meta.json``; partial files are removed if writing fails."""
    meta_path = csv_path + ".meta.json"
    try:
        write_csv(result, csv_path)
        with open(meta_path, "w") as fh:
            json.dump(metadata(result, config), fh, indent=2, default=_json_default)
    except BaseException:
        for p in (csv_path, meta_path):
            if os.path.exists(p):
                os.remove(p)
        raise
    return meta_path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------------------
# decoherence factor averages


def decoherence_average(spec: ExperimentSpec, pointer_basis=None, pair=(0, 1),
                        model: HamiltonianModel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(times, trial average of |Gamma(t)|^2) between two pointer branches.

    The pointer basis defaults to the eigenbasis of the classifier's pointer
    observable.
    """
    if not 1 <= spec.trials <= MAX_TRIALS:
        raise ResourceCapError(f"trials must be in 1..{MAX_TRIALS}")
    from .evolution import decoherence_factor

    model = spec.build_model() if model is None else model
    if pointer_basis is None:
        verdict = classify(model)
        if verdict.pointer_observable is None:
            raise ValueError("model has no pointer observable; pass pointer_basis explicitly")
        pointer_basis = verdict.pointer_eigen()[1]
    times = time_grid(spec, model)
    psi0 = _initial(spec, model)
    acc = np.zeros(len(times))
    for k in range(spec.trials):
        traj = evolve(instantiate(model, spec.seed + k), psi0, times, spec.tol)
        acc += np.abs(decoherence_factor(traj, pointer_basis, pair)) ** 2
    return times, acc / spec.trials
