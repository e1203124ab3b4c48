"""Declarative system-environment Hamiltonians.

A model is a layout (system first, then environment sites), an optional
free system term, single-site environment terms, and two-body
system-environment couplings. Each term carries a coefficient distribution
and an on/off schedule; drawing the coefficients once for a seed gives a
:class:`ModelInstance` that can be assembled into a sparse joint operator
at any time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import linalg
from .rng import stream

DEFAULT_MAX_DIM = 2**14
TRACE_TOL = 1e-12


class DimensionCapError(ValueError):
    pass


@dataclass(frozen=True)
class SubsystemLayout:
    dims: tuple[int, ...]
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("layout needs at least the system")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        if math.prod(dims) > self.max_dim:
            raise DimensionCapError(f"joint dimension {math.prod(dims)} exceeds cap {self.max_dim}")

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n_env(self) -> int:
        return len(self.dims) - 1

    @property
    def system_dim(self) -> int:
        return self.dims[0]

    @property
    def env_dims(self) -> tuple[int, ...]:
        return self.dims[1:]

    def env_layout(self) -> "SubsystemLayout":
        return SubsystemLayout(self.dims[1:] if len(self.dims) > 1 else (), self.max_dim)


# ---------------------------------------------------------------------------
# coefficients and schedules


@dataclass(frozen=True)
class Coefficient:
    """Distribution a coupling strength is drawn from."""

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "normal", "rademacher", "uniform"):
            raise ValueError(f"unknown coefficient distribution {self.kind!r}")
        if self.kind == "normal" and not self.b > 0:
            raise ValueError("normal distribution needs sigma > 0")
        if self.kind == "uniform" and not self.a < self.b:
            raise ValueError("uniform distribution needs lo < hi")

    @classmethod
    def constant(cls, value: float) -> "Coefficient":
        return cls("constant", float(value))

    @classmethod
    def normal(cls, mean: float = 0.0, sigma: float = 1.0) -> "Coefficient":
        return cls("normal", float(mean), float(sigma))

    @classmethod
    def rademacher(cls, magnitude: float = 1.0) -> "Coefficient":
        return cls("rademacher", float(magnitude))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "Coefficient":
        return cls("uniform", float(lo), float(hi))

    def support_is_continuous(self) -> bool:
        return self.kind in ("normal", "uniform")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.a
        if self.kind == "normal":
            return float(rng.normal(self.a, self.b))
        if self.kind == "rademacher":
            return self.a if rng.random() < 0.5 else -self.a
        return float(rng.uniform(self.a, self.b))

    def scaled(self, c: float) -> "Coefficient":
        if self.kind == "normal":
            return Coefficient(self.kind, self.a * c, self.b * abs(c))
        if self.kind == "uniform":
            lo, hi = sorted((self.a * c, self.b * c))
            return Coefficient(self.kind, lo, hi)
        return Coefficient(self.kind, self.a * c, self.b)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.a}
        if self.kind == "normal":
            return {"kind": "normal", "mean": self.a, "sigma": self.b}
        if self.kind == "rademacher":
            return {"kind": "rademacher", "magnitude": self.a}
        return {"kind": "uniform", "lo": self.a, "hi": self.b}


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant 0/1 switch.

    ``alternating`` with phase "a" is on while floor(t/tau) is even, phase
    "b" while it is odd; in both cases the last ``guard`` of every period is
    off. ``window`` is on for start <= t < stop.
    """

    kind: str = "always_on"
    tau: float = 0.0
    guard: float = 0.0
    phase: str = "a"
    start: float = 0.0
    stop: float = 0.0

    def __post_init__(self):
        if self.kind not in ("always_on", "alternating", "window"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.kind == "alternating":
            if self.tau <= 0 or not 0 <= self.guard < self.tau or self.phase not in ("a", "b"):
                raise ValueError("alternating schedule needs tau > 0, 0 <= guard < tau, phase a|b")
        if self.kind == "window" and not self.start < self.stop:
            raise ValueError("window schedule needs start < stop")

    @classmethod
    def always(cls) -> "Schedule":
        return cls()

    @classmethod
    def alternating(cls, tau: float, phase: str, guard: float = 0.01) -> "Schedule":
        return cls("alternating", tau=float(tau), guard=float(guard), phase=phase)

    @classmethod
    def window(cls, start: float, stop: float) -> "Schedule":
        return cls("window", start=float(start), stop=float(stop))

    def value(self, t: float) -> int:
        if self.kind == "always_on":
            return 1
        if self.kind == "window":
            return int(self.start <= t < self.stop)
        k = math.floor(t / self.tau)
        if (k % 2 == 0) != (self.phase == "a"):
            return 0
        return int(t - k * self.tau < self.tau - self.guard)

    def breakpoints(self, horizon: float) -> list[float]:
        if self.kind == "always_on":
            return []
        if self.kind == "window":
            return [x for x in (self.start, self.stop) if 0 <= x <= horizon]
        pts = []
        k = 0
        while k * self.tau <= horizon:
            pts.append(k * self.tau)
            if self.guard > 0:
                pts.append((k + 1) * self.tau - self.guard)
            k += 1
        return [x for x in pts if 0 <= x <= horizon]

    def to_dict(self) -> dict:
        if self.kind == "always_on":
            return {"kind": "always_on"}
        if self.kind == "window":
            return {"kind": "window", "start": self.start, "stop": self.stop}
        return {"kind": "alternating", "tau": self.tau, "guard": self.guard, "phase": self.phase}


ALWAYS = Schedule()


# ---------------------------------------------------------------------------
# terms


def _check_hermitian_traceless(op: np.ndarray, what: str, traceless: bool = True):
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    if not linalg.is_hermitian(op):
        raise ValueError(f"{what} must be Hermitian")
    if traceless and abs(np.trace(op)) > TRACE_TOL * max(1.0, np.abs(op).max()):
        raise ValueError(f"{what} must be traceless")


@dataclass(frozen=True, eq=False)
class FreeTerm:
    site: int
    op: np.ndarray
    coefficient: Coefficient = Coefficient.constant(1.0)
    schedule: Schedule = ALWAYS
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "op", np.asarray(self.op, dtype=complex))
        # free terms may carry a trace; it only adds a global phase
        _check_hermitian_traceless(self.op, f"free term on site {self.site}", traceless=False)

    def factors(self) -> dict:
        return {self.site: self.op}


@dataclass(frozen=True, eq=False)
class InteractionTerm:
    system_op: np.ndarray
    env_site: int
    env_op: np.ndarray
    coefficient: Coefficient = Coefficient.normal()
    schedule: Schedule = ALWAYS
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "system_op", np.asarray(self.system_op, dtype=complex))
        object.__setattr__(self, "env_op", np.asarray(self.env_op, dtype=complex))
        if self.env_site < 1:
            raise ValueError("interaction env_site must be >= 1")
        _check_hermitian_traceless(self.system_op, "interaction system operator")
        _check_hermitian_traceless(self.env_op, "interaction environment operator")

    def factors(self) -> dict:
        return {0: self.system_op, self.env_site: self.env_op}


@dataclass(frozen=True, eq=False)
class RawTerm:
    """Product of site-local Hermitian factors, as ingested from a model file.

    Unlike :class:`InteractionTerm` this can couple environment sites to
    each other; the classifier detects that.
    """

    factor_list: tuple[tuple[int, np.ndarray], ...]
    coefficient: Coefficient = Coefficient.constant(1.0)
    schedule: Schedule = ALWAYS
    label: str = ""

    def __post_init__(self):
        fl = tuple((int(s), np.asarray(o, dtype=complex)) for s, o in self.factor_list)
        if len({s for s, _ in fl}) != len(fl):
            raise ValueError("raw term lists a site twice")
        for s, o in fl:
            _check_hermitian_traceless(o, f"raw factor on site {s}", traceless=False)
        object.__setattr__(self, "factor_list", fl)

    def factors(self) -> dict:
        return dict(self.factor_list)


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    layout: SubsystemLayout
    system_free: FreeTerm | None = None
    env_free: tuple[FreeTerm, ...] = ()
    interactions: tuple[InteractionTerm, ...] = ()
    raw_terms: tuple[RawTerm, ...] = ()
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("env_free", "interactions", "raw_terms"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        dims = self.layout.dims
        if self.system_free is not None:
            if self.system_free.site != 0:
                raise ValueError("system free term must sit on site 0")
            if self.system_free.op.shape != (dims[0], dims[0]):
                raise ValueError("system free term does not match the system dimension")
        for term in self.env_free:
            if not 1 <= term.site < len(dims) or term.op.shape != (dims[term.site],) * 2:
                raise ValueError(f"environment free term on site {term.site} does not fit layout {dims}")
        for term in self.interactions:
            if term.env_site >= len(dims):
                raise ValueError(f"interaction site {term.env_site} outside layout {dims}")
            if term.system_op.shape != (dims[0], dims[0]) or term.env_op.shape != (dims[term.env_site],) * 2:
                raise ValueError(f"interaction on site {term.env_site} does not match layout {dims}")
        for term in self.raw_terms:
            for s, o in term.factor_list:
                if not 0 <= s < len(dims) or o.shape != (dims[s], dims[s]):
                    raise ValueError(f"raw factor on site {s} does not fit layout {dims}")
        object.__setattr__(self, "_ops", None)

    def terms(self) -> list:
        out = [] if self.system_free is None else [self.system_free]
        return out + list(self.env_free) + list(self.interactions) + list(self.raw_terms)

    def term_operators(self) -> list[sp.csr_matrix]:
        """Embedded joint operators of every term (coefficient excluded), cached."""
        if self._ops is None:
            object.__setattr__(self, "_ops", [linalg.embed_product(t.factors(), self.layout) for t in self.terms()])
        return self._ops

    def breakpoints(self, horizon: float) -> list[float]:
        pts = {0.0, float(horizon)}
        for term in self.terms():
            pts.update(term.schedule.breakpoints(horizon))
        return sorted(_dedupe(pts))

    def horizon(self) -> float:
        """Length of time covering every distinct schedule phase once."""
        h = 1.0
        for term in self.terms():
            s = term.schedule
            if s.kind == "alternating":
                h = max(h, 2 * s.tau)
            elif s.kind == "window":
                h = max(h, s.stop)
        return h

    def is_collision(self) -> bool:
        return bool(self.interactions) and all(t.schedule.kind == "window" for t in self.interactions)

    def window_start(self, site: int) -> float | None:
        """Earliest window opening among the interactions on ``site`` (None if always coupled)."""
        starts = []
        for t in self.interactions:
            if t.env_site != site:
                continue
            if t.schedule.kind != "window":
                return None
            starts.append(t.schedule.start)
        return min(starts) if starts else None


def _dedupe(values, tol: float = 1e-12) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True, eq=False)
class ModelInstance:
    model: HamiltonianModel
    seed: int
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_phase_cache", {})

    def active_mask(self, t: float) -> tuple[bool, ...]:
        return tuple(bool(term.schedule.value(t)) for term in self.model.terms())

    def operator_for_mask(self, mask: tuple[bool, ...]) -> sp.csr_matrix:
        cached = self._phase_cache.get(mask)
        if cached is not None:
            return cached
        ops = self.model.term_operators()
        h = sp.csr_matrix((self.model.layout.dim,) * 2, dtype=complex)
        for on, c, op in zip(mask, self.coefficients, ops):
            if on and c != 0.0:
                h = h + c * op
        h = h.tocsr()
        h.sum_duplicates()
        h.eliminate_zeros()
        self._phase_cache[mask] = h
        return h


def instantiate(model: HamiltonianModel, seed: int) -> ModelInstance:
    rng = stream(seed, "coefficients")
    coeffs = np.array([term.coefficient.sample(rng) for term in model.terms()], dtype=float)
    return ModelInstance(model, int(seed), coeffs)


def assemble(instance: ModelInstance, t: float) -> sp.csr_matrix:
    """Joint Hamiltonian at time t: sum of active terms times their drawn coefficients."""
    if t < 0:
        raise ValueError("assemble needs t >= 0")
    return instance.operator_for_mask(instance.active_mask(t))


def breakpoints(instance_or_model, horizon: float) -> list[float]:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    model = instance_or_model.model if isinstance(instance_or_model, ModelInstance) else instance_or_model
    return model.breakpoints(horizon)


def interaction_sites(model: HamiltonianModel) -> list[int]:
    return sorted({t.env_site for t in model.interactions})


def replace_coefficients(model: HamiltonianModel, dist: Coefficient, indices: Sequence[int] | None = None):
    """Copy of ``model`` with interaction coefficient distributions swapped."""
    new = []
    for i, term in enumerate(model.interactions):
        if indices is None or i in indices:
            term = InteractionTerm(term.system_op, term.env_site, term.env_op, dist, term.schedule, term.label)
        new.append(term)
    return HamiltonianModel(model.layout, model.system_free, model.env_free, tuple(new), model.raw_terms,
                            model.name, dict(model.meta))
