"""JSON model files and verdict reports.

A model file looks like::

    {
      "layout": [3, 2, 2],
      "system_free": {"op": "gellmann_1"},
      "env_free": [{"site": 1, "op": "pauli_z", "coefficient": 0.5}],
      "interactions": [
        {"system_op": "gellmann_8", "env_site": 1, "env_op": "pauli_z",
         "coefficient": {"kind": "normal", "mean": 0, "sigma": 1},
         "schedule": {"kind": "window", "start": 0, "stop": 0.95}}
      ],
      "raw_terms": [{"factors": [{"site": 1, "op": "pauli_z"}, {"site": 2, "op": "pauli_z"}]}]
    }

or starts from a named model via ``"preset": {"name": "A", "n_env": 4,
"params": {}}`` with any top-level key replacing the preset's field.
Operators are names (``pauli_x|y|z``, ``identity``, ``gellmann_1..8``,
``Z2``, ``X01``, ``X02``, ``dyad_i_j``), explicit matrices whose entries
are numbers or ``[re, im]`` pairs, or ``{"sum": [{"coef": c, "op": ...}]}``.
"""

from __future__ import annotations

import json
import re

import numpy as np

from . import linalg
from .classifier import ClassifierVerdict
from .model import (
    Coefficient,
    DimensionCapError,
    FreeTerm,
    HamiltonianModel,
    InteractionTerm,
    RawTerm,
    Schedule,
    SubsystemLayout,
)
from .presets import preset


class ModelParseError(ValueError):
    pass


_NAMED = {
    "pauli_x": linalg.PAULI_X,
    "pauli_y": linalg.PAULI_Y,
    "pauli_z": linalg.PAULI_Z,
    "Z2": linalg.Z2,
    "X01": linalg.X01,
    "X02": linalg.X02,
}


def parse_op(spec, dim: int) -> np.ndarray:
    """Operator of dimension ``dim`` from a name, explicit matrix, or weighted sum."""
    if isinstance(spec, str):
        if spec in _NAMED:
            op = _NAMED[spec]
        elif spec == "identity":
            op = np.eye(dim, dtype=complex)
        elif m := re.fullmatch(r"gellmann_([1-8])", spec):
            op = linalg.gellmann(int(m.group(1)))
        elif m := re.fullmatch(r"dyad_(\d+)_(\d+)", spec):
            i, j = int(m.group(1)), int(m.group(2))
            if max(i, j) >= dim:
                raise ModelParseError(f"{spec} does not fit dimension {dim}")
            op = linalg.dyad(i, j, dim)
        else:
            raise ModelParseError(f"unknown operator name {spec!r}")
    elif isinstance(spec, dict):
        if set(spec) != {"sum"} or not isinstance(spec["sum"], list):
            raise ModelParseError("operator objects must be {'sum': [...]}")
        op = np.zeros((dim, dim), dtype=complex)
        for item in spec["sum"]:
            op = op + _complex(item.get("coef", 1.0)) * parse_op(item["op"], dim)
    elif isinstance(spec, list):
        try:
            op = np.array([[_complex(x) for x in row] for row in spec], dtype=complex)
        except TypeError as exc:
            raise ModelParseError(f"bad explicit matrix: {exc}") from exc
    else:
        raise ModelParseError(f"cannot read operator {spec!r}")
    if op.shape != (dim, dim):
        raise ModelParseError(f"operator of shape {op.shape} does not fit dimension {dim}")
    return op


def _complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    raise ModelParseError(f"bad complex entry {x!r}")


def parse_coefficient(spec) -> Coefficient:
    if spec is None:
        return Coefficient.constant(1.0)
    if isinstance(spec, (int, float)):
        return Coefficient.constant(spec)
    kind = spec.get("kind")
    if kind == "constant":
        return Coefficient.constant(spec.get("value", 1.0))
    if kind == "normal":
        return Coefficient.normal(spec.get("mean", 0.0), spec.get("sigma", 1.0))
    if kind == "rademacher":
        return Coefficient.rademacher(spec.get("magnitude", 1.0))
    if kind == "uniform":
        return Coefficient.uniform(spec["lo"], spec["hi"])
    raise ModelParseError(f"unknown coefficient kind {kind!r}")


def parse_schedule(spec) -> Schedule:
    if spec is None:
        return Schedule.always()
    kind = spec.get("kind", "always_on")
    if kind == "always_on":
        return Schedule.always()
    if kind == "alternating":
        return Schedule.alternating(spec["tau"], spec.get("phase", "a"), spec.get("guard", 0.01))
    if kind == "window":
        return Schedule.window(spec["start"], spec["stop"])
    raise ModelParseError(f"unknown schedule kind {kind!r}")


def model_from_dict(data: dict, max_dim: int | None = None) -> HamiltonianModel:
    try:
        return _model_from_dict(data, max_dim)
    except (DimensionCapError, ModelParseError):
        raise
    except (KeyError, ValueError, TypeError, IndexError, AttributeError) as exc:
        raise ModelParseError(f"invalid model description: {exc!r}") from exc


def _model_from_dict(data: dict, max_dim):
    if not isinstance(data, dict):
        raise ModelParseError("model file must contain an object")
    base = None
    if "preset" in data:
        p = data["preset"]
        base = preset(p["name"], p.get("n_env"), p.get("params", {}))
    if "layout" in data:
        dims = tuple(int(d) for d in data["layout"])
        layout = SubsystemLayout(dims) if max_dim is None else SubsystemLayout(dims, max_dim)
    elif base is not None:
        layout = base.layout if max_dim is None else SubsystemLayout(base.layout.dims, max_dim)
    else:
        raise ModelParseError("model needs a layout or a preset")
    dims = layout.dims

    if "system_free" in data:
        sf = data["system_free"]
        system_free = None if sf is None else FreeTerm(
            0, parse_op(sf["op"], dims[0]), parse_coefficient(sf.get("coefficient")),
            parse_schedule(sf.get("schedule")), sf.get("label", ""))
    else:
        system_free = base.system_free if base else None

    if "env_free" in data:
        env_free = []
        for item in data["env_free"]:
            site = int(item["site"])
            _check_site(site, dims, env=True)
            env_free.append(FreeTerm(site, parse_op(item["op"], dims[site]), parse_coefficient(item.get("coefficient")),
                                     parse_schedule(item.get("schedule")), item.get("label", "")))
    else:
        env_free = list(base.env_free) if base else []

    if "interactions" in data:
        inter = []
        for item in data["interactions"]:
            site = int(item["env_site"])
            _check_site(site, dims, env=True)
            inter.append(InteractionTerm(
                parse_op(item["system_op"], dims[0]), site, parse_op(item["env_op"], dims[site]),
                parse_coefficient(item.get("coefficient", {"kind": "normal", "mean": 0.0, "sigma": 1.0})),
                parse_schedule(item.get("schedule")), item.get("label", "")))
    else:
        inter = list(base.interactions) if base else []

    if "raw_terms" in data:
        raw = []
        for item in data["raw_terms"]:
            factors = []
            for f in item["factors"]:
                site = int(f["site"])
                _check_site(site, dims)
                factors.append((site, parse_op(f["op"], dims[site])))
            raw.append(RawTerm(tuple(factors), parse_coefficient(item.get("coefficient")),
                               parse_schedule(item.get("schedule")), item.get("label", "")))
    else:
        raw = list(base.raw_terms) if base else []

    name = data.get("name", base.name if base else "custom")
    meta = dict(base.meta) if base else {}
    meta.update(data.get("meta", {}))
    return HamiltonianModel(layout, system_free, env_free, inter, raw, name, meta)


def _check_site(site, dims, env=False):
    lo = 1 if env else 0
    if not lo <= site < len(dims):
        raise ModelParseError(f"site {site} outside layout {list(dims)}")


def load_model(path: str, max_dim: int | None = None) -> HamiltonianModel:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: {exc}") from exc
    return model_from_dict(data, max_dim)


# ---------------------------------------------------------------------------
# serialization


def matrix_to_list(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def model_to_dict(model: HamiltonianModel) -> dict:
    def term(t):
        return {"coefficient": t.coefficient.to_dict(), "schedule": t.schedule.to_dict(), "label": t.label}

    out = {"name": model.name, "layout": list(model.layout.dims)}
    out["system_free"] = None if model.system_free is None else {"op": matrix_to_list(model.system_free.op),
                                                                 **term(model.system_free)}
    out["env_free"] = [{"site": t.site, "op": matrix_to_list(t.op), **term(t)} for t in model.env_free]
    out["interactions"] = [{"system_op": matrix_to_list(t.system_op), "env_site": t.env_site,
                            "env_op": matrix_to_list(t.env_op), **term(t)} for t in model.interactions]
    out["raw_terms"] = [{"factors": [{"site": s, "op": matrix_to_list(o)} for s, o in t.factor_list], **term(t)}
                        for t in model.raw_terms]
    out["meta"] = {k: v for k, v in model.meta.items() if isinstance(v, (int, float, str, bool))}
    return out


def verdict_to_dict(v: ClassifierVerdict) -> dict:
    out = {
        "overall": v.overall,
        "label": v.label,
        "reason": v.reason,
        "exit_code": v.exit_code(),
        "env_separable": v.env_separable,
        "continuous_support": v.continuous_support,
        "mixing_free": v.mixing_free,
        "commutant_dim": v.commutant_dim,
        "pointer_degenerate": v.pointer_degenerate,
        "schedule_prefix_cutoff": v.schedule_prefix_cutoff,
        "warnings": list(v.warnings),
        "pointer_observable": None,
        "witness": None,
    }
    if v.pointer_observable is not None:
        evals, evecs = v.pointer_eigen()
        out["pointer_observable"] = {
            "matrix": matrix_to_list(v.pointer_observable),
            "spectrum": [float(e) for e in evals],
            "eigenbasis": matrix_to_list(evecs),
        }
    if v.witness is not None:
        out["witness"] = {
            "description": v.witness.description,
            "sites": sorted(int(s) for s in v.witness.sites),
            "norm": v.witness.norm,
            "operator": matrix_to_list(v.witness.operator),
        }
    return out
