"""Command-line front end: classify, simulate, sweep.

Exit codes: classify returns 0 (supports), 2 (fails), 3 (state-preparation
prefix) or 4 (inconclusive); every command returns 64 on unreadable input
and 65 when a resource cap is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .classifier import classify
from .experiments import (
    ExperimentSpec,
    ResourceCapError,
    decoherence_average,
    run,
    write_outputs,
)
from .information import FragmentSampler
from .model import Coefficient, DimensionCapError, replace_coefficients
from .modelio import ModelParseError, load_model, model_to_dict, verdict_to_dict
from .presets import PRESETS, UnknownPresetError, preset

EXIT_OK = 0
EXIT_FAILS = 2
EXIT_PREFIX = 3
EXIT_INCONCLUSIVE = 4
EXIT_USAGE = 64
EXIT_CAP = 65

DEFAULTS = {
    "preset": None,
    "model_file": None,
    "n_env": None,
    "params": {},
    "trials": 1,
    "seed": 0,
    "state_seed": 12345,
    "t_max": None,
    "t_points": 100,
    "fragment_sampler": "auto",
    "epsilon": 0.15,
    "out": None,
    "workers": os.cpu_count() or 1,
    "initial_state": None,
    "all_units": False,
    "axis": None,
    "values": None,
}

SWEEP_AXES = ("initial_state_kind", "distribution_kind", "replaced_unit_index")
SWEEP_DEFAULT_VALUES = {
    "initial_state_kind": ["ent", "sep", "prod", "sbf"],
    "distribution_kind": ["normal", "rademacher"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_model_flags(p):
    p.add_argument("--preset", choices=PRESETS, default=None)
    p.add_argument("--model-file", dest="model_file", default=None)
    p.add_argument("--n-env", dest="n_env", type=int, default=None)
    p.add_argument("--param", dest="param", action="append", default=None, metavar="KEY=VALUE",
                   help="preset parameter, e.g. sigma_J=1 or dist=rademacher (repeatable)")
    p.add_argument("--config", default=None, help="JSON file of option values (flags take precedence)")
    p.add_argument("--out", default=None)


def _add_run_flags(p):
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--state-seed", dest="state_seed", type=int, default=None)
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    p.add_argument("--t-points", dest="t_points", type=int, default=None)
    p.add_argument("--fragment-sampler", dest="fragment_sampler", default=None,
                   help="exhaustive | random:k | auto")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--initial-state", dest="initial_state", default=None)
    p.add_argument("--all-units", dest="all_units", action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="darwinism", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("classify", help="classify a model")
    _add_model_flags(p)
    p = sub.add_parser("simulate", help="simulate a model and write the MI profile as CSV")
    _add_model_flags(p)
    _add_run_flags(p)
    p = sub.add_parser("sweep", help="simulate one model across values of an axis")
    _add_model_flags(p)
    _add_run_flags(p)
    p.add_argument("--axis", choices=SWEEP_AXES, default=None)
    p.add_argument("--values", default=None, help="comma-separated axis values")
    return parser


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    config = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold an object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        config.update(file_cfg)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            config[key] = value
    if getattr(args, "param", None):
        params = dict(config.get("params") or {})
        for item in args.param:
            if "=" not in item:
                raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            params[k] = _parse_value(v)
        config["params"] = params
    config["command"] = args.command
    return config


def _load(config: dict):
    if config["model_file"] and config["preset"]:
        raise UsageError("give either --preset or --model-file, not both")
    if config["model_file"]:
        return load_model(config["model_file"])
    if not config["preset"]:
        raise UsageError("a --preset or --model-file is required")
    return preset(config["preset"], config["n_env"], config["params"])


def _fmt_matrix(m) -> str:
    return np.array2string(np.round(np.asarray(m), 4), max_line_width=120, suppress_small=True)


def cmd_classify(config: dict) -> int:
    model = _load(config)
    v = classify(model)
    print(f"model: {model.name}  layout: {list(model.layout.dims)}")
    print(f"verdict: {v.label}")
    print(f"reason: {v.reason}")
    print(f"env_separable={v.env_separable} continuous_support={v.continuous_support} "
          f"mixing_free={v.mixing_free} commutant_dim={v.commutant_dim} pointer_degenerate={v.pointer_degenerate}")
    if v.pointer_observable is not None:
        evals, evecs = v.pointer_eigen()
        print("pointer spectrum:", np.round(evals, 6))
        print("pointer basis (columns):")
        print(_fmt_matrix(evecs))
    if v.witness is not None:
        print(f"mixing witness: {v.witness.description} on sites {sorted(v.witness.sites)} "
              f"(norm {v.witness.norm:.6g})")
        print(_fmt_matrix(v.witness.operator))
    for w in v.warnings:
        print("warning:", w)
    if config["out"]:
        report = {"config": _jsonable(config), "model": model_to_dict(model), "verdict": verdict_to_dict(v)}
        _write_json(config["out"], report)
    return v.exit_code()


def _spec(config: dict, **over) -> ExperimentSpec:
    FragmentSampler.parse(config["fragment_sampler"])  # validate early
    kw = dict(
        preset=config["preset"] or "custom",
        n_env=config["n_env"],
        params=dict(config["params"] or {}),
        initial_state=config["initial_state"],
        trials=int(config["trials"]),
        t_max=config["t_max"],
        t_points=int(config["t_points"]),
        sampler=config["fragment_sampler"],
        seed=int(config["seed"]),
        state_seed=int(config["state_seed"]),
        all_units=bool(config["all_units"]),
        epsilon=float(config["epsilon"]),
        workers=max(1, int(config["workers"])),
    )
    kw.update(over)
    return ExperimentSpec(**kw)


def cmd_simulate(config: dict) -> int:
    model = _load(config)
    spec = _spec(config)
    out = config["out"] or f"{model.name}.csv"
    result = run(spec, model)
    write_outputs(result, out, _jsonable(config))
    scores = result.plateau_scores()
    print(f"verdict: {result.verdict.label}")
    print(f"final time {result.profile.times[-1]:g}: plateau score {scores[-1]:.3f} (epsilon {spec.epsilon})")
    print(f"wrote {out} and {out}.meta.json")
    return EXIT_OK


def _sweep_values(config: dict, model) -> list:
    axis = config["axis"]
    if axis is None:
        raise UsageError("sweep needs --axis")
    if config["values"]:
        vals = config["values"]
        vals = vals.split(",") if isinstance(vals, str) else list(vals)
    elif axis == "replaced_unit_index":
        if model.name not in ("J", "K"):
            raise UsageError("replaced_unit_index sweeps need preset J or K")
        vals = list(range(1, model.layout.n_env + 1))
    else:
        vals = SWEEP_DEFAULT_VALUES[axis]
    if axis == "replaced_unit_index":
        vals = [int(v) for v in vals]
    return vals


def cmd_sweep(config: dict) -> int:
    base_model = _load(config)
    values = _sweep_values(config, base_model)
    out_dir = config["out"] or f"sweep_{base_model.name}_{config['axis']}"
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for value in values:
        model, over = base_model, {}
        if config["axis"] == "initial_state_kind":
            over["initial_state"] = value
        elif config["axis"] == "distribution_kind":
            if config["preset"]:
                params = dict(config["params"] or {})
                params["dist"] = value
                model = preset(config["preset"], config["n_env"], params)
                over["params"] = params
            else:
                dist = Coefficient.rademacher(1.0) if value == "rademacher" else Coefficient.normal(0.0, 1.0)
                model = replace_coefficients(base_model, dist)
        else:
            if base_model.name not in ("J", "K"):
                raise UsageError("replaced_unit_index sweeps need preset J or K")
            params = dict(config["params"] or {})
            params["replaced_unit"] = value
            model = preset(base_model.name, base_model.layout.n_env, params)
            over["params"] = params
        spec = _spec(config, **over)
        result = run(spec, model)
        path = os.path.join(out_dir, f"{value}.csv")
        write_outputs(result, path, _jsonable({**config, "sweep_value": value}))
        scores = result.plateau_scores()
        row = {
            "value": value,
            "verdict": result.verdict.label,
            "final_time": float(result.profile.times[-1]),
            "final_plateau_score": float(scores[-1]),
            "max_plateau_score": float(np.nanmax(scores)),
            "final_size1_normalized": float(result.profile.mean[-1, 1]) if result.profile.n_env[-1] >= 1 else float("nan"),
        }
        if base_model.name == "qubit" or config["axis"] == "distribution_kind":
            try:
                times, g2 = decoherence_average(spec, model=model)
            except ValueError:
                times, g2 = None, None
            if g2 is not None:
                pos = times > 0
                late = times >= 2.0
                row["min_distance_gamma2_from_1"] = float(np.min(1 - g2[pos])) if pos.any() else float("nan")
                row["max_gamma2_after_t2"] = float(np.max(g2[late])) if late.any() else float("nan")
        rows.append(row)
        print(", ".join(f"{k}={v}" for k, v in row.items()))
    keys = list(dict.fromkeys(k for r in rows for k in r))
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} results and summary.csv to {out_dir}")
    return EXIT_OK


def _jsonable(config: dict) -> dict:
    return {k: v for k, v in config.items() if isinstance(v, (str, int, float, bool, list, dict, type(None)))}


def _write_json(path: str, data: dict):
    try:
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
    except BaseException:
        if os.path.exists(path):
            os.remove(path)
        raise


COMMANDS = {"classify": cmd_classify, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except (UsageError, ModelParseError, UnknownPresetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DimensionCapError, ResourceCapError) as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
