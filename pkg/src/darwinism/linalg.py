"""Dense and sparse complex-matrix primitives.

Operators are plain ``numpy`` arrays (dense) or ``scipy.sparse`` CSR matrices
(joint-space operators). All arithmetic is complex double precision.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

HERMITIAN_RTOL = 1e-12


class NotHermitianError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# named local operators

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def dyad(i: int, j: int, d: int) -> np.ndarray:
    """|i><j| in dimension d."""
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def gellmann(k: int) -> np.ndarray:
    """Gell-Mann matrix lambda_k, k = 1..8 (qutrit)."""
    if k == 1:
        return dyad(0, 1, 3) + dyad(1, 0, 3)
    if k == 2:
        return -1j * dyad(0, 1, 3) + 1j * dyad(1, 0, 3)
    if k == 3:
        return dyad(0, 0, 3) - dyad(1, 1, 3)
    if k == 4:
        return dyad(0, 2, 3) + dyad(2, 0, 3)
    if k == 5:
        return -1j * dyad(0, 2, 3) + 1j * dyad(2, 0, 3)
    if k == 6:
        return dyad(1, 2, 3) + dyad(2, 1, 3)
    if k == 7:
        return -1j * dyad(1, 2, 3) + 1j * dyad(2, 1, 3)
    if k == 8:
        return np.diag([1.0, 1.0, -2.0]).astype(complex) / np.sqrt(3)
    raise ValueError(f"no Gell-Mann matrix with index {k}")


# qutrit shorthands used by the qutrit models
Z2 = gellmann(8)
X01 = gellmann(1)
X02 = gellmann(4)


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (Tr A B = delta) Hermitian basis of d x d matrices.

    The first element is I/sqrt(d); the rest are generalized Gell-Mann
    matrices scaled to unit Hilbert-Schmidt norm.
    """
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            basis.append((dyad(j, k, d) + dyad(k, j, d)) / np.sqrt(2))
            basis.append((-1j * dyad(j, k, d) + 1j * dyad(k, j, d)) / np.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag).astype(complex) / np.sqrt(l * (l + 1)))
    return basis


# ---------------------------------------------------------------------------
# basic algebra


def kron(a, b):
    if sp.issparse(a) or sp.issparse(b):
        return sp.kron(a, b, format="csr")
    return np.kron(a, b)


def commutator(a, b):
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square shapes, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    if sp.issparse(m):
        diff = abs(m - m.conj().T)
        scale = abs(m).max() if m.nnz else 0.0
        worst = diff.max() if diff.nnz else 0.0
    else:
        m = np.asarray(m)
        scale = np.abs(m).max() if m.size else 0.0
        worst = np.abs(m - m.conj().T).max() if m.size else 0.0
    return worst <= rtol * max(scale, np.finfo(float).tiny)


def hs_norm(m) -> float:
    if sp.issparse(m):
        return float(sp.linalg.norm(m))
    return float(np.linalg.norm(m))


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise NotHermitianError("hermitian_eig called on a non-Hermitian matrix")
    return np.linalg.eigh(m)


def embed(local, site: int, layout) -> sp.csr_matrix:
    """Joint-space operator acting as ``local`` on ``site`` and identity elsewhere."""
    dims = layout.dims
    if not 0 <= site < len(dims):
        raise IndexError(f"site {site} out of range for layout {dims}")
    if local.shape != (dims[site], dims[site]):
        raise ValueError(f"operator of shape {local.shape} does not fit site {site} (dim {dims[site]})")
    return embed_product({site: local}, layout)


def embed_product(factors: dict, layout) -> sp.csr_matrix:
    """Tensor product of site-local factors, identity on unlisted sites."""
    dims = layout.dims
    out = None
    run = 1  # accumulated identity dimension not yet multiplied in
    for site, d in enumerate(dims):
        if site in factors:
            op = sp.csr_matrix(np.asarray(factors[site], dtype=complex))
            if op.shape != (d, d):
                raise ValueError(f"operator of shape {op.shape} does not fit site {site} (dim {d})")
            block = sp.kron(sp.identity(run, dtype=complex, format="csr"), op, format="csr") if run > 1 else op
            out = block if out is None else sp.kron(out, block, format="csr")
            run = 1
        else:
            run *= d
    if out is None:
        return sp.identity(run, dtype=complex, format="csr")
    if run > 1:
        out = sp.kron(out, sp.identity(run, dtype=complex, format="csr"), format="csr")
    out.sum_duplicates()
    out.eliminate_zeros()
    return out


def to_triplets(m: sp.spmatrix) -> list[tuple[int, int, complex]]:
    coo = sp.coo_matrix(m)
    coo.sum_duplicates()
    return [(int(r), int(c), complex(v)) for r, c, v in zip(coo.row, coo.col, coo.data)]


def from_triplets(dim: int, triplets) -> sp.csr_matrix:
    if not triplets:
        return sp.csr_matrix((dim, dim), dtype=complex)
    rows, cols, vals = zip(*triplets)
    if len(set(zip(rows, cols))) != len(rows):
        raise ValueError("duplicate (row, col) entries")
    if max(rows) >= dim or max(cols) >= dim or min(rows) < 0 or min(cols) < 0:
        raise IndexError("triplet index outside the operator dimension")
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(dim, dim))


# ---------------------------------------------------------------------------
# support and operator-Schmidt analysis


def operator_support(op: np.ndarray, dims: tuple[int, ...], atol: float = 1e-12) -> set[int]:
    """Sites on which a (dense) joint operator acts non-trivially.

    Site j is trivial iff op == Tr_j(op)/d_j (x) I_j.
    """
    op = np.asarray(op, dtype=complex)
    n = len(dims)
    t = op.reshape(tuple(dims) + tuple(dims))
    scale = max(np.abs(op).max(), 1.0)
    support = set()
    for j in range(n):
        moved = np.moveaxis(t, [j, n + j], [-2, -1])
        reduced = np.trace(moved, axis1=-2, axis2=-1) / dims[j]
        rebuilt = reduced[..., None, None] * np.eye(dims[j])
        if np.abs(rebuilt - moved).max() > atol * scale:
            support.add(j)
    return support


def operator_schmidt(op: np.ndarray, da: int, db: int, atol: float = 1e-12):
    """Split a Hermitian operator on A (x) B into Hermitian pieces.

    Returns (a_free, b_free, pairs, constant) with
    op = constant*I + a_free (x) I + I (x) b_free + sum_k s_k (x) e_k,
    every piece traceless and Hermitian.
    """
    op = np.asarray(op, dtype=complex)
    ba, bb = hermitian_basis(da), hermitian_basis(db)
    coeff = np.empty((len(ba), len(bb)))
    for a, x in enumerate(ba):
        for b, y in enumerate(bb):
            coeff[a, b] = np.real(np.trace(np.kron(x, y) @ op))
    constant = coeff[0, 0] / np.sqrt(da * db)
    a_free = np.zeros((da, da), dtype=complex)
    for a in range(1, len(ba)):
        a_free += (coeff[a, 0] / np.sqrt(db)) * ba[a]
    b_free = np.zeros((db, db), dtype=complex)
    for b in range(1, len(bb)):
        b_free += (coeff[0, b] / np.sqrt(da)) * bb[b]
    core = coeff[1:, 1:]
    pairs = []
    if core.size:
        u, s, vt = np.linalg.svd(core)
        for k, sv in enumerate(s):
            if sv <= atol * max(1.0, s[0]):
                continue
            sa = sum(u[a, k] * ba[a + 1] for a in range(core.shape[0]))
            eb = sum(vt[k, b] * bb[b + 1] for b in range(core.shape[1]))
            pairs.append((sv * sa, eb))
    return a_free, b_free, pairs, constant


# ---------------------------------------------------------------------------
# matrix-exponential action


def expm_action(
    h,
    dt: float,
    psi: np.ndarray,
    tol: float = 1e-10,
    krylov_dim: int = 30,
    max_substeps: int = 100_000,
    check: bool = True,
) -> np.ndarray:
    """exp(-i dt h) psi via Lanczos with a-posteriori error control.

    One Lanczos basis is built per substep; the substep length is the
    largest (halving from the remaining time) whose error estimate stays
    within its share ``tol * s / |dt|`` of the total budget.
    """
    psi = np.asarray(psi, dtype=complex)
    if check:
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ValueError("expm_action expects a normalized state")
        if not is_hermitian(h):
            raise NotHermitianError("expm_action needs a Hermitian generator")
    if dt == 0:
        return psi.copy()
    total = abs(dt)
    sign = 1.0 if dt > 0 else -1.0
    m = min(krylov_dim, psi.shape[0])
    w = psi.copy()
    done = 0.0
    for _ in range(max_substeps):
        remaining = total - done
        if remaining <= 0.0:
            return w
        basis, alpha, beta = _lanczos(h, w, m)
        k = len(alpha)
        evals, evecs = sla.eigh_tridiagonal(alpha, beta[: k - 1]) if k > 1 else (alpha.copy(), np.ones((1, 1)))
        first = evecs[0, :]
        tail = beta[k - 1] if k - 1 < len(beta) else 0.0
        s = remaining
        spread = float(np.max(np.abs(evals))) if k else 0.0
        for _halving in range(60):
            coeffs = evecs @ (np.exp(-1j * sign * s * evals) * first)
            err = tail * abs(coeffs[-1])
            # a step whose phases are below round-off is exact; its budget may underflow
            if err <= tol * s / total or err == 0.0 or s * spread < 1e-15:
                break
            s *= 0.5
        else:
            raise ConvergenceError("Krylov step size collapsed")
        w_norm = np.linalg.norm(w)
        w = w_norm * (basis[:, :k] @ coeffs)
        done += s
    raise ConvergenceError(f"expm_action did not finish in {max_substeps} substeps")


def _lanczos(h, v0: np.ndarray, m: int):
    n = v0.shape[0]
    basis = np.zeros((n, m), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    nrm = np.linalg.norm(v0)
    basis[:, 0] = v0 / nrm
    for j in range(m):
        w = h @ basis[:, j]
        alpha[j] = np.real(np.vdot(basis[:, j], w))
        # full reorthogonalization, twice
        for _ in range(2):
            w -= basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        if b < 1e-13 * max(1.0, abs(alpha[j])):
            beta[j] = 0.0
            return basis, alpha[: j + 1], beta[: j + 1]
        if j + 1 < m:
            basis[:, j + 1] = w / b
    return basis, alpha, beta


def dense_expm_action(h, dt: float, psi: np.ndarray) -> np.ndarray:
    """Reference path: exp(-i dt h) psi by full eigendecomposition."""
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    evals, vecs = np.linalg.eigh(dense)
    return vecs @ (np.exp(-1j * dt * evals) * (vecs.conj().T @ psi))
