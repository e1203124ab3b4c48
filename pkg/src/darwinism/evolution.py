"""Exact state-vector propagation under piecewise-constant Hamiltonians."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import linalg
from .model import ModelInstance, SubsystemLayout

NORM_TOL = 1e-10


class NotBranchingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SubsystemLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amp.shape != (self.layout.dim,):
            raise ValueError(f"state of length {amp.shape[0]} does not match layout dimension {self.layout.dim}")
        if abs(np.linalg.norm(amp) - 1.0) > NORM_TOL:
            raise ValueError("state vector must be normalized")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, layout: SubsystemLayout, amplitudes) -> "StateVector":
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(layout, amp / np.linalg.norm(amp))

    @classmethod
    def product(cls, layout: SubsystemLayout, locals_) -> "StateVector":
        amp = np.ones(1, dtype=complex)
        for v in locals_:
            amp = np.kron(amp, np.asarray(v, dtype=complex) / np.linalg.norm(v))
        return cls(layout, amp)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)


@dataclass(frozen=True, eq=False)
class Trajectory:
    layout: SubsystemLayout
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> StateVector:
        return StateVector(self.layout, self.states[i])


# ---------------------------------------------------------------------------
# phase operators, optionally cached on disk


def _cache_key(instance: ModelInstance, mask) -> str:
    h = hashlib.sha256()
    h.update(repr(instance.model.layout.dims).encode())
    for op in instance.model.term_operators():
        h.update(op.indptr.tobytes())
        h.update(op.indices.tobytes())
        h.update(op.data.tobytes())
    h.update(np.asarray(instance.coefficients, dtype=float).tobytes())
    h.update(bytes(mask))
    return h.hexdigest()


def phase_operator(instance: ModelInstance, mask) -> sp.csr_matrix:
    """Hamiltonian for one schedule phase, cached in memory and in DARWINISM_CACHE_DIR if set."""
    cache_dir = os.environ.get("DARWINISM_CACHE_DIR")
    if not cache_dir or mask in instance._phase_cache:
        return instance.operator_for_mask(mask)
    path = os.path.join(cache_dir, _cache_key(instance, mask) + ".npz")
    if os.path.exists(path):
        h = sp.load_npz(path).tocsr()
        instance._phase_cache[mask] = h
        return h
    h = instance.operator_for_mask(mask)
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + f".{os.getpid()}.tmp.npz"
    sp.save_npz(tmp, h)
    os.replace(tmp, path)
    return h


# ---------------------------------------------------------------------------
# propagation


def evolve(instance: ModelInstance, psi0, times, tol: float = 1e-10) -> Trajectory:
    """States at the requested times; schedule breakpoints are never stepped across."""
    layout = instance.model.layout
    psi = psi0 if isinstance(psi0, StateVector) else StateVector(layout, psi0)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be ascending and start at t >= 0")
    out = np.empty((times.size, layout.dim), dtype=complex)
    horizon = float(times[-1])
    edges = instance.model.breakpoints(horizon) if horizon > 0 else [0.0]
    w = psi.amplitudes.copy()
    t = 0.0
    checked = set()
    for i, target in enumerate(times):
        while t < target:
            nxt = min([e for e in edges if e > t + 1e-13] + [target])
            nxt = min(nxt, target)
            mask = instance.active_mask(0.5 * (t + nxt))
            h = phase_operator(instance, mask)
            if h.nnz:
                if mask not in checked:
                    if not linalg.is_hermitian(h):
                        raise linalg.NotHermitianError("assembled Hamiltonian is not Hermitian")
                    checked.add(mask)
                w = linalg.expm_action(h, nxt - t, w / np.linalg.norm(w), tol=tol, check=False)
            t = nxt
        out[i] = w
    return Trajectory(layout, times, out)


# ---------------------------------------------------------------------------
# branches


@dataclass(frozen=True, eq=False)
class Branch:
    index: int
    weight: complex
    env_state: np.ndarray | None  # normalized, over the environment layout
    block: np.ndarray | None = None  # (k, env_dim) for degenerate pointer subspaces


@dataclass(frozen=True, eq=False)
class BranchDecomposition:
    branches: dict = field(default_factory=dict)

    def total_weight(self) -> float:
        return float(sum(abs(b.weight) ** 2 for b in self.branches.values()))

    def __getitem__(self, n):
        return self.branches[n]

    def __contains__(self, n):
        return n in self.branches


def branch_decompose(psi, pointer_basis, eigenvalues=None, floor: float = 1e-14, degen_tol: float = 1e-8):
    """Project a joint state onto the pointer states (columns of ``pointer_basis``).

    Weights are real non-negative (the phase lives in the conditional
    state). With ``eigenvalues`` given, degenerate pointer states are
    grouped and the branch keeps the whole projected block.
    """
    amp = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    basis = np.asarray(pointer_basis, dtype=complex)
    d = basis.shape[0]
    rows = basis.conj().T @ amp.reshape(d, -1)
    groups = [[n] for n in range(d)]
    if eigenvalues is not None:
        ev = np.asarray(eigenvalues, dtype=float)
        order = np.argsort(ev)
        groups = []
        for n in order:
            if groups and abs(ev[n] - ev[groups[-1][-1]]) <= degen_tol:
                groups[-1].append(int(n))
            else:
                groups.append([int(n)])
    out = {}
    for g in groups:
        if len(g) == 1:
            n = g[0]
            w = np.linalg.norm(rows[n])
            if w * w < floor:
                continue
            out[n] = Branch(n, w, rows[n] / w)
        else:
            block = rows[g]
            w = np.linalg.norm(block)
            if w * w < floor:
                continue
            out[g[0]] = Branch(g[0], w, None, block / w)
    return BranchDecomposition(out)


def site_purities(phi: np.ndarray, dims) -> np.ndarray:
    """Purity of every single-site reduced state of a pure vector over ``dims``."""
    t = np.asarray(phi).reshape(tuple(dims))
    out = np.empty(len(dims))
    for j in range(len(dims)):
        m = np.moveaxis(t, j, 0).reshape(dims[j], -1)
        rho = m @ m.conj().T
        out[j] = np.real(np.vdot(rho, rho))
    return out


def decoherence_factor(traj: Trajectory, pointer_basis, branch_pair, tol: float = 1e-8) -> np.ndarray:
    """Overlap of two branch-conditioned environment states at each trajectory time.

    For singly-branching states each conditional environment state is a
    product, so the overlap equals the product of the per-site overlaps.
    """
    n, m = branch_pair
    env_dims = traj.layout.env_dims
    out = np.empty(len(traj), dtype=complex)
    for i in range(len(traj)):
        dec = branch_decompose(traj.states[i], pointer_basis)
        if n not in dec or m not in dec:
            raise NotBranchingError(f"branch {n} or {m} carries no weight at t={traj.times[i]:g}")
        phi_n, phi_m = dec[n].env_state, dec[m].env_state
        for phi in (phi_n, phi_m):
            if np.any(site_purities(phi, env_dims) < 1 - tol):
                raise NotBranchingError(f"conditional environment state is not a product at t={traj.times[i]:g}")
        out[i] = np.vdot(phi_n, phi_m)
    return out
