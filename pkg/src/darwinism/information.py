"""Reduced states, entropies and system-fragment mutual information.

Reduced density matrices are contracted straight from the amplitudes.
For pure joint states the entropy of a subsystem equals that of its
complement, so every entropy is taken on whichever side is smaller, and
fragments of equal shape are diagonalized together in one batched call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream

CLIP_TOL = 1e-12
TRACE_TOL = 1e-8
MAX_FRAGMENTS = 256
SYSTEM_ENTROPY_FLOOR = 1e-9


def _amps(psi):
    return np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)


def _dims(psi, layout=None):
    if layout is None:
        layout = getattr(psi, "layout", None)
    if layout is None:
        raise ValueError("layout required for raw amplitude arrays")
    return tuple(getattr(layout, "dims", layout))


def partial_trace(psi, keep, layout=None) -> np.ndarray:
    """Density matrix on the sites in ``keep`` (ascending order)."""
    dims = _dims(psi, layout)
    keep = sorted(set(int(k) for k in keep))
    if any(not 0 <= k < len(dims) for k in keep):
        raise IndexError(f"sites {keep} invalid for layout {dims}")
    t = _amps(psi).reshape(dims)
    rest = [j for j in range(len(dims)) if j not in keep]
    dk = math.prod(dims[k] for k in keep)
    m = np.transpose(t, keep + rest).reshape(dk, -1)
    return m @ m.conj().T


def partial_trace_dm(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace of a density matrix (reference path for mixed inputs)."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(set(keep))
    t = np.asarray(rho).reshape(dims + dims)
    rest = [j for j in range(n) if j not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = [letters[j] for j in range(n)]
    col = [letters[j].upper() for j in range(n)]
    for j in rest:
        col[j] = row[j]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    d = math.prod(dims[k] for k in keep)
    return np.einsum("".join(row) + "".join(col) + "->" + out, t).reshape(d, d)


def entropy_from_eigenvalues(evals: np.ndarray) -> np.ndarray:
    """Von Neumann entropy in bits along the last axis; eigenvalues clipped to [0, 1]."""
    p = np.clip(np.real(evals), 0.0, 1.0)
    p = np.where(p > CLIP_TOL, p, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def entropy(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise ValueError("density matrix trace deviates from 1")
    return float(entropy_from_eigenvalues(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))


def subsystem_entropies(psi, subsets, layout=None) -> np.ndarray:
    """Entropy of each site subset of a pure joint state.

    Each subset is evaluated on whichever of itself and its complement has
    the smaller dimension; subsets with equal shape share one eigvalsh call.
    """
    dims = _dims(psi, layout)
    n = len(dims)
    t = _amps(psi).reshape(dims)
    out = np.zeros(len(subsets))
    jobs: dict[tuple[int, int], list[tuple[int, list[int]]]] = {}
    for i, sub in enumerate(subsets):
        sub = sorted(set(sub))
        rest = [j for j in range(n) if j not in sub]
        if not sub or not rest:
            continue  # empty set or whole pure state
        da = math.prod(dims[j] for j in sub)
        db = math.prod(dims[j] for j in rest)
        side = sub if da <= db else rest
        other = rest if da <= db else sub
        key = (min(da, db), max(da, db))
        jobs.setdefault(key, []).append((i, side + other))
    for (small, big), items in jobs.items():
        mats = np.empty((len(items), small, small), dtype=complex)
        for k, (_, perm) in enumerate(items):
            m = np.transpose(t, perm).reshape(small, big)
            mats[k] = m @ m.conj().T
        ent = entropy_from_eigenvalues(np.linalg.eigvalsh(mats))
        for k, (i, _) in enumerate(items):
            out[i] = ent[k]
    return out


def mutual_information(psi, fragment, layout=None) -> float:
    """I(S:F) = S(S) + S(F) - S(SF) in bits (pure or not: reduced states are formed directly)."""
    dims = _dims(psi, layout)
    frag = sorted(set(int(f) for f in fragment))
    if any(not 1 <= f < len(dims) for f in frag):
        raise IndexError(f"fragment {frag} invalid for layout {dims}")
    if not frag:
        return 0.0
    s_s = entropy(partial_trace(psi, [0], dims))
    s_f = entropy(partial_trace(psi, frag, dims))
    s_sf = entropy(partial_trace(psi, [0] + frag, dims))
    return s_s + s_f - s_sf


# ---------------------------------------------------------------------------
# fragment sampling


@dataclass(frozen=True)
class FragmentSampler:
    """"exhaustive", "random" (k fragments) or "auto" (exhaustive up to k, else k random)."""

    kind: str = "auto"
    k: int = MAX_FRAGMENTS

    def __post_init__(self):
        if self.kind not in ("exhaustive", "random", "auto"):
            raise ValueError(f"unknown fragment sampler {self.kind!r}")
        if self.k < 1:
            raise ValueError("sample count must be positive")

    @classmethod
    def parse(cls, text: str) -> "FragmentSampler":
        text = text.strip()
        if text in ("exhaustive", "auto"):
            return cls(text)
        if text.startswith("random:"):
            return cls("random", int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse fragment sampler {text!r}")

    def __str__(self):
        return self.kind if self.kind == "exhaustive" else f"{self.kind}:{self.k}"

    def fragments(self, universe, size: int, seed: int = 0) -> list[tuple[int, ...]]:
        universe = sorted(universe)
        n = len(universe)
        if not 0 <= size <= n:
            raise ValueError(f"fragment size {size} outside 0..{n}")
        total = math.comb(n, size)
        if self.kind == "exhaustive" or (self.kind == "auto" and total <= self.k):
            return list(itertools.combinations(universe, size))
        if self.kind == "random" and self.k > total:
            raise ValueError(f"cannot draw {self.k} distinct fragments out of {total}")
        rng = stream(seed, "fragments", n, size)
        picks = np.sort(rng.choice(total, size=min(self.k, total), replace=False))
        combos = itertools.combinations(universe, size)
        out, nxt = [], 0
        for idx, c in enumerate(combos):
            if nxt < len(picks) and idx == picks[nxt]:
                out.append(c)
                nxt += 1
        return out


def fragment_mi(psi, fragments, layout=None, s_system: float | None = None) -> np.ndarray:
    """Mutual information of every fragment with the system, for a pure joint state."""
    dims = _dims(psi, layout)
    n = len(dims)
    env = set(range(1, n))
    subsets = [tuple(f) for f in fragments] + [tuple(sorted(env - set(f))) for f in fragments]
    uniq = {s: i for i, s in enumerate(dict.fromkeys(subsets + [(0,)]))}
    ent = subsystem_entropies(psi, list(uniq), dims)
    s_s = ent[uniq[(0,)]] if s_system is None else s_system
    k = len(fragments)
    # S(S u F) = S(E \ F) for pure joint states
    return np.array([s_s + ent[uniq[subsets[i]]] - ent[uniq[subsets[k + i]]] for i in range(k)])


def mi_by_size(psi, size: int, sampler: FragmentSampler | str = "auto", seed: int = 0, layout=None,
               universe=None) -> tuple[float, float]:
    """Mean and standard error of the system-fragment mutual information over fragments of one size."""
    dims = _dims(psi, layout)
    if isinstance(sampler, str):
        sampler = FragmentSampler.parse(sampler)
    universe = list(range(1, len(dims))) if universe is None else sorted(universe)
    frags = sampler.fragments(universe, size, seed)
    if size == 0:
        return 0.0, 0.0
    vals = fragment_mi(psi, frags, dims)
    err = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(np.mean(vals)), err


def state_mi_curve(psi, universe, sampler: FragmentSampler, seed: int = 0, layout=None, sizes=None):
    """(system entropy, mean MI per size, fragment spread per size) over ``universe`` fragments.

    Arrays run over sizes 0..len(universe); sizes not requested are NaN.
    """
    dims = _dims(psi, layout)
    universe = sorted(universe)
    n = len(universe)
    sizes = range(n + 1) if sizes is None else [s for s in sizes if 0 <= s <= n]
    frag_lists = {s: sampler.fragments(universe, s, seed) for s in sizes if s > 0}
    all_frags = [f for s in frag_lists for f in frag_lists[s]]
    s_s = float(subsystem_entropies(psi, [(0,)], dims)[0])
    vals = fragment_mi(psi, all_frags, dims, s_system=s_s) if all_frags else np.zeros(0)
    mean = np.full(n + 1, np.nan)
    spread = np.full(n + 1, np.nan)
    pos = 0
    for s in sizes:
        if s == 0:
            mean[0], spread[0] = 0.0, 0.0
            continue
        v = vals[pos:pos + len(frag_lists[s])]
        pos += len(v)
        mean[s] = v.mean()
        spread[s] = v.std(ddof=1) / np.sqrt(len(v)) if len(v) > 1 else 0.0
    return s_s, mean, spread


# ---------------------------------------------------------------------------
# profiles and plateau metrics


@dataclass
class MIProfile:
    """Trial-averaged mutual information on a time x fragment-size grid.

    ``mean`` is normalized by the system entropy of each trial when
    ``normalization == "by_system_entropy"``; ``mean_raw`` always holds
    bits. Cells for sizes beyond the fragment universe at that time are NaN.
    """

    times: np.ndarray
    sizes: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    mean_raw: np.ndarray
    trials: int
    n_env: np.ndarray  # fragment-universe size per time
    normalization: str = "by_system_entropy"
    system_entropy: np.ndarray = field(default=None)

    def time_index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} not in profile")
        return i

    def curve(self, t: float) -> np.ndarray:
        i = self.time_index(t)
        return self.mean[i, : int(self.n_env[i]) + 1]


def plateau_fraction(curve: np.ndarray, epsilon: float = 0.15) -> float:
    """Fraction of sizes 1..N-1 whose normalized MI lies within epsilon of 1."""
    n = len(curve) - 1
    if n < 2:
        return 0.0
    inner = np.asarray(curve[1:n], dtype=float)
    return float(np.mean(np.abs(inner - 1.0) <= epsilon))


def plateau_score(profile: MIProfile, t: float, epsilon: float = 0.15) -> float:
    return plateau_fraction(profile.curve(t), epsilon)


def linearity_r2(curve: np.ndarray) -> float:
    """Coefficient of determination of a least-squares line through MI(size), sizes 0..N."""
    y = np.asarray(curve, dtype=float)
    x = np.arange(len(y), dtype=float)
    if len(y) < 3:
        return 1.0
    slope, icpt = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + icpt)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return 1.0 if ss_tot == 0 else float(1.0 - ss_res / ss_tot)
