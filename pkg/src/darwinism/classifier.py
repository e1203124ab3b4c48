"""Static checks deciding whether a Hamiltonian can support redundant records.

The checks are

* a pointer observable: a non-trivial Hermitian system operator commuting
  with the free system Hamiltonian and every system-side interaction
  operator, at every schedule phase;
* freedom from induced mixing: every nested commutator of system-side
  operators whose generating sequence touches two or more environment
  sites must vanish;
* a separable environment Hamiltonian (no environment-environment terms);
* continuous support of the coupling distributions for interactions that
  act for unbounded time.

For collision models a failing verdict is retried on suffixes of the unit
sequence: if the tail of the sequence satisfies all checks, the early
collisions are reinterpreted as state preparation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .evolution import site_purities
from .model import HamiltonianModel, InteractionTerm, RawTerm, SubsystemLayout
from .rng import stream

NULL_RTOL = 1e-10
ZERO_TOL = 1e-10

SUPPORTS = "supports_QD"
FAILS_NO_POINTER = "fails_no_pointer"
FAILS_MIXING = "fails_mixing"
FAILS_SUPPORT = "fails_support"
PREFIX = "state_prep_prefix"
INCONCLUSIVE = "inconclusive"


class NoPointerBasisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Generator:
    op: np.ndarray
    sites: frozenset
    label: str


def default_sample_times(model: HamiltonianModel) -> list[float]:
    """One interior time per schedule phase over a full period."""
    pts = model.breakpoints(model.horizon())
    return [0.5 * (a + b) for a, b in zip(pts[:-1], pts[1:])]


def _term_split(term, layout: SubsystemLayout):
    """(system factor or None, environment sites touched non-trivially)."""
    if isinstance(term, InteractionTerm):
        return term.system_op, frozenset([term.env_site])
    factors = term.factors()
    env = frozenset(
        s for s, o in factors.items() if s != 0 and linalg.operator_support(o, (layout.dims[s],))
    )
    sys_op = factors.get(0)
    if sys_op is not None and not linalg.operator_support(sys_op, (layout.dims[0],)):
        sys_op = None
    return sys_op, env


def system_generators(model: HamiltonianModel, sample_times=None) -> list[Generator]:
    """System-side operators active at any sample time, with their site tags.

    Coefficients are ignored: a term enters if its schedule is on at some
    sample time and its coefficient distribution is not identically zero.
    """
    times = default_sample_times(model) if sample_times is None else list(sample_times)
    if not times:
        raise ValueError("need at least one sample time")
    layout = model.layout
    out: list[Generator] = []

    def active(term):
        c = term.coefficient
        if c.kind == "constant" and c.a == 0.0:
            return False
        return any(term.schedule.value(t) for t in times)

    if model.system_free is not None and active(model.system_free):
        op = model.system_free.op
        op = op - np.trace(op) / op.shape[0] * np.eye(op.shape[0])
        if linalg.hs_norm(op) > ZERO_TOL:
            out.append(Generator(op, frozenset(), "H_S"))
    for term in list(model.interactions) + list(model.raw_terms):
        if not active(term):
            continue
        sys_op, env = _term_split(term, layout)
        if sys_op is None:
            continue
        sys_op = sys_op - np.trace(sys_op) / sys_op.shape[0] * np.eye(sys_op.shape[0])
        if linalg.hs_norm(sys_op) <= ZERO_TOL:
            continue
        if not env:
            out.append(Generator(sys_op, frozenset(), "H_S"))
        else:
            name = "S(" + ",".join(f"site{s}" for s in sorted(env)) + ")"
            out.append(Generator(sys_op, env, name))
    return _dedupe_generators(out)


def _dedupe_generators(gens: list[Generator]) -> list[Generator]:
    out: list[Generator] = []
    for g in gens:
        if any(h.sites == g.sites and np.allclose(h.op, g.op, atol=1e-14, rtol=0) for h in out):
            continue
        out.append(g)
    return out


# ---------------------------------------------------------------------------
# commutant and pointer observable


@dataclass
class CommutantBasis:
    generators: list
    basis: list
    pointer: np.ndarray | None = None
    pointer_degenerate: bool = False

    @property
    def has_pointer(self) -> bool:
        return len(self.basis) > 1

    @property
    def dim(self) -> int:
        return len(self.basis)


def _commutator_map(generators, basis):
    """Real matrix of X -> ([G, X] for G in generators) on Hermitian coordinates."""
    cols = []
    for b in basis:
        parts = [linalg.commutator(g, b).ravel() for g in generators]
        v = np.concatenate(parts) if parts else np.zeros(0, dtype=complex)
        cols.append(np.concatenate([v.real, v.imag]))
    return np.array(cols).T


def commutant(generators, d: int, rtol: float = NULL_RTOL) -> list[np.ndarray]:
    """HS-orthonormal Hermitian basis of the operators commuting with every generator.

    The identity (normalized) is always the first element.
    """
    basis = linalg.hermitian_basis(d)
    ident, traceless = basis[0], basis[1:]
    gens = []
    for g in generators:
        g = np.asarray(g, dtype=complex)
        n = linalg.hs_norm(g)
        if n > 0:
            gens.append(g / n)
    if not gens:
        return basis
    m = _commutator_map(gens, traceless)
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    cutoff = rtol * (s[0] if s.size and s[0] > 0 else 1.0)
    rank = int(np.sum(s > cutoff))
    null = vt[rank:]
    out = [ident]
    for row in null:
        op = sum(c * b for c, b in zip(row, traceless))
        out.append(0.5 * (op + op.conj().T))
    return out


def pointer_observable(model: HamiltonianModel, sample_times=None, rtol: float = NULL_RTOL) -> CommutantBasis:
    """Joint commutant of the system-side operators at every sample time.

    The representative pointer is a fixed-seed random combination of the
    non-identity basis elements: its eigenbasis is the finest basis common
    to the whole commutant, and it is degenerate only when every element
    of the commutant is.
    """
    gens = system_generators(model, sample_times)
    d = model.layout.system_dim
    basis = commutant([g.op for g in gens], d, rtol)
    out = CommutantBasis([g.op for g in gens], basis)
    if out.has_pointer:
        weights = stream(0, "pointer").normal(size=len(basis) - 1)
        rep = sum(w * b for w, b in zip(weights, basis[1:]))
        rep = rep / linalg.hs_norm(rep)
        out.pointer = rep
        evals = np.linalg.eigvalsh(rep)
        out.pointer_degenerate = bool(np.min(np.diff(evals)) < 1e-8) if d > 1 else False
    return out


# ---------------------------------------------------------------------------
# mixing closure


@dataclass(frozen=True)
class Witness:
    description: str
    operator: np.ndarray
    sites: frozenset

    @property
    def norm(self) -> float:
        return linalg.hs_norm(self.operator)


class _Span:
    """Incrementally orthonormalized span of complex matrices."""

    def __init__(self, tol: float):
        self.q: list[np.ndarray] = []
        self.tol = tol

    def add(self, op: np.ndarray) -> bool:
        n0 = linalg.hs_norm(op)
        if n0 <= ZERO_TOL:
            return False
        v = op.ravel() / n0
        for _ in range(2):
            for q in self.q:
                v = v - np.vdot(q, v) * q
        n = np.linalg.norm(v)
        if n <= self.tol:
            return False
        self.q.append(v / n)
        return True


def mixing_closure(model: HamiltonianModel, sample_times=None, max_ops: int | None = None):
    """Decide whether nested commutators of system operators can couple distinct sites.

    Returns (mixing_free, witness). mixing_free is None (inconclusive)
    when the closure would exceed ``max_ops`` stored operators. The
    witness is the first (shortest) non-vanishing nested commutator whose
    generating sequence touches two or more environment sites, in the raw
    (unnormalized) operators of the model.
    """
    gens = system_generators(model, sample_times)
    return closure_from_generators(gens, model.layout.system_dim, max_ops)


def closure_from_generators(gens: list[Generator], d: int, max_ops: int | None = None):
    if max_ops is not None and max_ops < d * d:
        raise ValueError("max_ops must be at least dim(system)^2")
    # a single generator already touching two sites is itself a witness
    for g in gens:
        if len(g.sites) >= 2:
            return False, Witness(g.label, g.op.copy(), g.sites)
    groups: dict[frozenset, list[Generator]] = {}
    for g in gens:
        groups.setdefault(g.sites, []).append(g)
    tagged = [t for t in groups if t]
    if max_ops is None:
        max_ops = (len(tagged) + 1) * d * d
    # Every tagged operator lies in the ideal generated by the interaction
    # operators, which is spanned by right-nested commutators whose innermost
    # element is an interaction operator. One span per single-site tag,
    # explored level by level so the first witness found is a shortest one.
    spans = {t: _Span(NULL_RTOL) for t in tagged}
    frontier: list[tuple[frozenset, np.ndarray, str]] = []
    for g in gens:
        if g.sites and spans[g.sites].add(g.op):
            frontier.append((g.sites, g.op, g.label))
    stored = sum(len(s.q) for s in spans.values())
    while frontier:
        nxt = []
        for tags, y, desc in frontier:
            for g in gens:
                tag = tags | g.sites
                c = linalg.commutator(g.op, y)
                if linalg.hs_norm(c) <= ZERO_TOL * max(1.0, linalg.hs_norm(g.op) * linalg.hs_norm(y)):
                    continue
                label = f"[{g.label},{desc}]"
                if len(tag) >= 2:
                    return False, Witness(label, c, tag)
                if spans[tag].add(c):
                    stored += 1
                    if stored > max_ops:
                        return None, None
                    nxt.append((tag, c, label))
        frontier = nxt
    return True, None


def single_site_noncommuting(model: HamiltonianModel, sample_times=None) -> list[int]:
    """Sites whose own system-side operators fail to commute with each other."""
    gens = system_generators(model, sample_times)
    bad = set()
    for g in gens:
        for h in gens:
            if g.sites and g.sites == h.sites and linalg.hs_norm(linalg.commutator(g.op, h.op)) > ZERO_TOL:
                bad.update(g.sites)
    return sorted(bad)


# ---------------------------------------------------------------------------
# separability and support


def check_env_separability(model: HamiltonianModel) -> bool:
    """False iff some term without a system factor acts on two or more environment sites."""
    for term in model.raw_terms:
        sys_op, env = _term_split(term, model.layout)
        if sys_op is None and len(env) >= 2:
            return False
    return True


def check_support(model: HamiltonianModel) -> bool:
    """Interactions acting for unbounded time need continuous coefficient distributions.

    Window-scheduled terms are exempt.
    """
    for term in list(model.interactions) + list(model.raw_terms):
        if isinstance(term, RawTerm):
            sys_op, env = _term_split(term, model.layout)
            if sys_op is None or not env:
                continue
        if term.schedule.kind == "window":
            continue
        if not term.coefficient.support_is_continuous():
            return False
    return True


# ---------------------------------------------------------------------------
# verdict


@dataclass
class ClassifierVerdict:
    overall: str
    reason: str = ""
    pointer_observable: np.ndarray | None = None
    pointer_degenerate: bool = False
    commutant_dim: int = 1
    mixing_free: bool | None = None
    witness: Witness | None = None
    env_separable: bool = True
    continuous_support: bool = True
    schedule_prefix_cutoff: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def label(self) -> str:
        if self.overall == PREFIX:
            return f"{PREFIX}({self.schedule_prefix_cutoff:g})"
        return self.overall

    @property
    def fails(self) -> bool:
        return self.overall.startswith("fails")

    def pointer_eigen(self):
        if self.pointer_observable is None:
            return None, None
        return linalg.hermitian_eig(self.pointer_observable)

    def exit_code(self) -> int:
        if self.overall == SUPPORTS:
            return 0
        if self.overall == PREFIX:
            return 3
        if self.overall == INCONCLUSIVE:
            return 4
        return 2


def _submodel(model: HamiltonianModel, units: set[int]) -> HamiltonianModel:
    keep = tuple(t for t in model.interactions if t.env_site in units)
    return HamiltonianModel(model.layout, model.system_free, model.env_free, keep, model.raw_terms,
                            model.name, model.meta)


def _core_checks(model: HamiltonianModel, sample_times, max_ops):
    """(pointer basis, mixing_free, witness)."""
    cb = pointer_observable(model, sample_times)
    mixing, witness = mixing_closure(model, sample_times, max_ops)
    return cb, mixing, witness


def _prefix_cutoff(model: HamiltonianModel, max_ops) -> tuple[float, CommutantBasis] | None:
    """Smallest state-preparation prefix after which the collision sequence is compatible.

    Units are ordered by window opening; the suffix must keep at least
    max(2, ceil(N/2)) units so that a single trailing collision never
    counts as a recovery.
    """
    if not model.is_collision() or model.raw_terms:
        return None
    units = sorted({t.env_site for t in model.interactions}, key=lambda s: model.window_start(s))
    n = len(units)
    min_len = max(2, math.ceil(n / 2))
    for p in range(1, n - min_len + 1):
        suffix = set(units[p:])
        sub = _submodel(model, suffix)
        cb, mixing, _ = _core_checks(sub, default_sample_times(sub), max_ops)
        if cb.has_pointer and mixing:
            return model.window_start(units[p]), cb
    return None


def classify(model: HamiltonianModel, sample_times=None, max_ops: int | None = None) -> ClassifierVerdict:
    """Compose all checks into a single verdict."""
    time_dependent = any(t.schedule.kind != "always_on" for t in model.terms())
    warnings = []
    if "truncation" in model.meta:
        warnings.append(
            f"oscillator truncated to {model.meta['truncation']} levels; verdict holds for the truncated model only"
        )
    separable = check_env_separability(model)
    support = check_support(model)
    cb, mixing, witness = _core_checks(model, sample_times, max_ops)
    verdict = ClassifierVerdict(
        overall=SUPPORTS,
        pointer_observable=cb.pointer,
        pointer_degenerate=cb.pointer_degenerate,
        commutant_dim=cb.dim,
        mixing_free=mixing,
        witness=witness,
        env_separable=separable,
        continuous_support=support,
        warnings=warnings,
    )
    if not separable:
        verdict.overall, verdict.reason = FAILS_MIXING, "interactions between environment sites"
        return verdict
    if mixing is None:
        verdict.overall, verdict.reason = INCONCLUSIVE, "commutator closure exceeded its operator budget"
        return verdict
    if not cb.has_pointer or not mixing:
        prefix = _prefix_cutoff(model, max_ops)
        if prefix is not None:
            cutoff, sub_cb = prefix
            verdict.overall = PREFIX
            verdict.schedule_prefix_cutoff = cutoff
            verdict.reason = f"collisions before t={cutoff:g} act as state preparation"
            verdict.pointer_observable = sub_cb.pointer
            verdict.pointer_degenerate = sub_cb.pointer_degenerate
            verdict.commutant_dim = sub_cb.dim
            return verdict
        if not cb.has_pointer:
            verdict.overall = FAILS_NO_POINTER
            verdict.reason = "no time-independent pointer observable" if time_dependent else "no pointer observable"
        else:
            verdict.overall = FAILS_MIXING
            verdict.reason = f"induced mixing between environment sites: {witness.description}"
        return verdict
    if not support:
        verdict.overall, verdict.reason = FAILS_SUPPORT, "always-on coupling with discrete coefficient distribution"
        return verdict
    bad = single_site_noncommuting(model, sample_times)
    if bad:
        verdict.warnings.append(
            f"non-commuting interactions confined to single sites {bad}; those sites behave as part of the system"
        )
    if cb.pointer_degenerate:
        verdict.warnings.append("pointer observable is degenerate; records cover only its eigenspaces")
    verdict.reason = "pointer observable exists, no induced mixing, separable environment"
    return verdict


# ---------------------------------------------------------------------------
# initial-state admissibility


def branch_conditionals(psi: np.ndarray, dims: tuple[int, ...], basis: np.ndarray, floor: float = 1e-14):
    """[(index, weight c_n, normalized conditional environment vector)] for pointer states in ``basis`` columns."""
    rows = basis.conj().T @ np.asarray(psi).reshape(dims[0], -1)
    out = []
    for n, row in enumerate(rows):
        w = np.linalg.norm(row)
        if w * w < floor:
            continue
        out.append((n, w, row / w))
    return out


def check_initial_state(psi, layout: SubsystemLayout, tol: float = 1e-8, pointer_basis=None) -> bool:
    """True iff the state is singly branching in a candidate pointer basis.

    Candidates are ``pointer_basis`` when given, otherwise the
    computational basis and the eigenbasis of the reduced system state.
    """
    psi = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    dims = layout.dims
    if psi.shape != (layout.dim,):
        raise ValueError("state does not match layout")
    if abs(np.linalg.norm(psi) - 1) > 1e-8:
        raise ValueError("state must be normalized")
    if pointer_basis is not None:
        candidates = [np.asarray(pointer_basis, dtype=complex)]
    else:
        m = psi.reshape(dims[0], -1)
        rho_s = m @ m.conj().T
        candidates = [np.eye(dims[0], dtype=complex), np.linalg.eigh(rho_s)[1]]
    if not candidates:
        raise NoPointerBasisError("no pointer basis available")
    env_dims = dims[1:]
    for basis in candidates:
        ok = True
        for _, _, phi in branch_conditionals(psi, dims, basis):
            if env_dims and np.any(site_purities(phi, env_dims) < 1 - tol):
                ok = False
                break
        if ok:
            return True
    return False
