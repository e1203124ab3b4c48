"""Named example Hamiltonians.

Qutrit models A-D, alternating qubit models E-H, qubit collision models
I-L, the three-level demon, the parallel-decoherent qubit model and a
truncated micromaser (classification only).
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .linalg import PAULI_X, PAULI_Y, PAULI_Z, X01, X02, Z2, gellmann
from .model import (
    Coefficient,
    FreeTerm,
    HamiltonianModel,
    InteractionTerm,
    Schedule,
    SubsystemLayout,
)

PRESETS = ("A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "demon", "qubit", "micromaser")

# default environment size and simulation horizon per preset
DEFAULT_N_ENV = {**{k: 10 for k in "ABCD"}, **{k: 11 for k in "EFGH"}, **{k: 12 for k in "IJKL"},
               "demon": 12, "qubit": 10, "micromaser": 6}

DEFAULTS = {
    "sigma_J": 1.0,
    "sigma_K": 1.0,
    "tau_alternating": 3.0,
    "tau_collision": 1.0,
    "delta": 0.95,
    "guard": 0.01,
    "gamma": 4.0 / 3.0,
}

DEMON_SYSTEM_STATE = np.array([1.0, 1.0, 2.0j]) / np.sqrt(6.0)
DEMON_UNIT_STATE = np.array([1.0, 2.0j]) / np.sqrt(5.0)


class UnknownPresetError(KeyError):
    pass


def _get(params: dict, key: str, default_key: str | None = None) -> float:
    if key in params:
        return float(params[key])
    return DEFAULTS[default_key or key]


def preset(name: str, n_env: int | None = None, params: dict | None = None) -> HamiltonianModel:
    """Build a named model with ``n_env`` environment sites."""
    params = dict(params or {})
    if name not in PRESETS:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    n = DEFAULT_N_ENV[name] if n_env is None else int(n_env)
    if n < 1:
        raise ValueError("n_env must be >= 1")
    builder = _BUILDERS.get(name) or _BUILDERS[name[0]]
    return builder(name, n, params)


def _normal(params, key):
    return Coefficient.normal(0.0, _get(params, key))


def _coupling(params, key):
    """Coupling distribution, switchable via params['dist']."""
    kind = params.get("dist", "normal")
    sigma = _get(params, key)
    if kind == "normal":
        return Coefficient.normal(0.0, sigma)
    if kind == "rademacher":
        return Coefficient.rademacher(sigma)
    if kind == "uniform":
        return Coefficient.uniform(-sigma * np.sqrt(3), sigma * np.sqrt(3))
    if kind == "constant":
        return Coefficient.constant(sigma)
    raise ValueError(f"unknown coupling distribution {kind!r}")


def _qutrit(name, n, params):
    layout = SubsystemLayout((3,) + (2,) * n)
    cj, ck = _coupling(params, "sigma_J"), _coupling(params, "sigma_K")
    terms = []
    for i in range(1, n + 1):
        if name == "A":
            terms.append(InteractionTerm(Z2 + X01, i, PAULI_Z, cj, label="(Z2+X01) sz"))
        elif name == "B":
            terms.append(InteractionTerm(Z2, i, PAULI_Z, cj, label="Z2 sz"))
            terms.append(InteractionTerm(X01, i, PAULI_Z, ck, label="X01 sz"))
        elif name == "C":
            terms.append(InteractionTerm(Z2, i, PAULI_Z, cj, label="Z2 sz"))
            terms.append(InteractionTerm(X01, i, PAULI_X, ck, label="X01 sx"))
        else:
            terms.append(InteractionTerm(X02, i, PAULI_Z, cj, label="X02 sz"))
            terms.append(InteractionTerm(X01, i, PAULI_X, ck, label="X01 sx"))
    meta = {"initial_state": "qutrit_product", "t_max": 6.0}
    return HamiltonianModel(layout, interactions=terms, name=name, meta=meta)


def _alternating(name, n, params):
    layout = SubsystemLayout((2,) * (n + 1))
    tau = _get(params, "tau", "tau_alternating")
    guard = _get(params, "guard")
    cj, ck = _coupling(params, "sigma_J"), _coupling(params, "sigma_K")
    a, b = Schedule.alternating(tau, "a", guard), Schedule.alternating(tau, "b", guard)
    terms = []
    for i in range(1, n + 1):
        if name == "E":
            terms.append(InteractionTerm(PAULI_Z + PAULI_X, i, PAULI_Z, cj, label="(sz+sx) sz"))
        elif name == "F":
            terms.append(InteractionTerm(PAULI_Z, i, PAULI_Z, cj, a, label="sz sz"))
            terms.append(InteractionTerm(PAULI_X, i, PAULI_Z, ck, b, label="sx sz"))
        elif name == "G":
            terms.append(InteractionTerm(PAULI_Z, i, PAULI_Z, cj, a, label="sz sz"))
            terms.append(InteractionTerm(PAULI_X, i, PAULI_X, ck, b, label="sx sx"))
        else:
            terms.append(InteractionTerm(PAULI_Z, i, PAULI_Z, cj, a, label="sz sz"))
            terms.append(InteractionTerm(PAULI_Z, i, PAULI_X, ck, b, label="sz sx"))
    meta = {"initial_state": "y_product", "t_max": 8 * tau, "tau": tau, "guard": guard}
    return HamiltonianModel(layout, interactions=terms, name=name, meta=meta)


def _collision(name, n, params):
    layout = SubsystemLayout((2,) * (n + 1))
    tau = _get(params, "tau", "tau_collision")
    delta = _get(params, "delta")
    if not 0 < delta <= tau:
        raise ValueError("collision models need 0 < delta <= tau")
    coupling = Coefficient.constant(params.get("J", 1.0))
    replaced = {"J": int(params.get("replaced_unit", 1)), "K": int(params.get("replaced_unit", 5))}.get(name)
    if replaced is not None and not 1 <= replaced <= n:
        raise ValueError(f"replaced_unit {replaced} outside 1..{n}")
    terms = []
    for u in range(1, n + 1):
        window = Schedule.window((u - 1) * tau, (u - 1) * tau + delta)
        if name == "L":
            flip = u % 2 == 0
        else:
            flip = u == replaced
        sys_op, label = (PAULI_X, "sx sz") if flip else (PAULI_Z, "sz sz")
        terms.append(InteractionTerm(sys_op, u, PAULI_Z, coupling, window, label=label))
    meta = {"initial_state": "y_product", "t_max": n * tau, "tau": tau, "delta": delta, "collision": True}
    if replaced is not None:
        meta["replaced_unit"] = replaced
    return HamiltonianModel(layout, interactions=terms, name=name, meta=meta)


def demon_operators(gamma: float):
    """(H_S, [(system op, unit op, weight), ...]) for the three-level demon.

    gamma (|A,1><C,0| + h.c.) = gamma/2 (X_AC sx + Y_AC sy).
    """
    h_s = gellmann(1) + gellmann(6)
    pairs = [(gellmann(4), PAULI_X, gamma / 2), (gellmann(5), PAULI_Y, gamma / 2)]
    return h_s, pairs


def _demon(name, n, params):
    layout = SubsystemLayout((3,) + (2,) * n)
    tau = _get(params, "tau", "tau_collision")
    delta = _get(params, "delta")
    gamma = _get(params, "gamma")
    h_s, pairs = demon_operators(gamma)
    terms = []
    for u in range(1, n + 1):
        window = Schedule.window((u - 1) * tau, (u - 1) * tau + delta)
        for s_op, e_op, w in pairs:
            terms.append(InteractionTerm(s_op, u, e_op, Coefficient.constant(w), window, label="demon V"))
    meta = {"initial_state": "demon", "t_max": n * tau, "tau": tau, "delta": delta, "collision": True,
            "gamma": gamma}
    return HamiltonianModel(layout, FreeTerm(0, h_s, label="H_S demon"), interactions=terms, name=name, meta=meta)


def _qubit(name, n, params):
    """Parallel-decoherent qubit model: sz (x) sum_i J_i sz_i."""
    layout = SubsystemLayout((2,) * (n + 1))
    cj = _coupling(params, "sigma_J")
    terms = [InteractionTerm(PAULI_Z, i, PAULI_Z, cj, label="sz sz") for i in range(1, n + 1)]
    meta = {"initial_state": "plus_product", "t_max": 20.0}
    return HamiltonianModel(layout, interactions=terms, name=name, meta=meta)


def _micromaser(name, n, params):
    """Jaynes-Cummings collision model with the cavity truncated to ``fock`` levels."""
    fock = int(params.get("fock", 4))
    omega = float(params.get("omega", 1.0))
    detuning = float(params.get("detuning", 1.0))
    g = float(params.get("g", 1.0))
    tau = _get(params, "tau", "tau_collision")
    delta = _get(params, "delta")
    layout = SubsystemLayout((fock,) + (2,) * n)
    a = np.diag(np.sqrt(np.arange(1, fock)), 1).astype(complex)
    lower = linalg.dyad(0, 1, 2)
    jc = np.kron(a.conj().T, lower) + np.kron(a, lower.conj().T)
    _, _, pairs, _ = linalg.operator_schmidt(jc, fock, 2)
    number = a.conj().T @ a
    h_s = omega * (number - np.trace(number) / fock * np.eye(fock))
    terms, env_free = [], []
    for u in range(1, n + 1):
        window = Schedule.window((u - 1) * tau, (u - 1) * tau + delta)
        env_free.append(FreeTerm(u, detuning / 2 * PAULI_Z, label="atom"))
        for s_op, e_op in pairs:
            terms.append(InteractionTerm(s_op, u, e_op, Coefficient.constant(g), window, label="JC"))
    meta = {"initial_state": "plus_product", "t_max": n * tau, "tau": tau, "delta": delta, "collision": True,
            "truncation": fock}
    return HamiltonianModel(layout, FreeTerm(0, h_s, label="cavity"), env_free, terms, name=name, meta=meta)


_BUILDERS = {
    "A": _qutrit, "B": _qutrit, "C": _qutrit, "D": _qutrit,
    "E": _alternating, "F": _alternating, "G": _alternating, "H": _alternating,
    "I": _collision, "J": _collision, "K": _collision, "L": _collision,
    "demon": _demon, "qubit": _qubit, "micromaser": _micromaser,
}
