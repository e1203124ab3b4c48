import itertools

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_state, seeds, small_layouts
from darwinism import linalg
from darwinism.linalg import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, X01, Z2
from darwinism.model import SubsystemLayout


def index_kron(a, b):
    """Tensor product by explicit index arithmetic."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i, j, k, l in itertools.product(range(ra), range(ca), range(rb), range(cb)):
        out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def test_kron_examples():
    assert np.array_equal(linalg.kron(PAULI_I, PAULI_I), np.eye(4))
    assert np.array_equal(linalg.kron(PAULI_Z, PAULI_Z), np.diag([1, -1, -1, 1]))
    ket10 = np.array([0, 0, 1, 0])
    out = linalg.kron(PAULI_X, PAULI_Z) @ ket10
    assert np.array_equal(out, index_kron(PAULI_X, PAULI_Z) @ ket10)
    assert np.array_equal(out, [1, 0, 0, 0])


@given(seeds)
def test_kron_associative(seed):
    # small integer entries keep every product exact, so equality is index-level
    rng = np.random.default_rng(seed)
    a, b, c = (rng.integers(-9, 10, size=(d, d)) + 1j * rng.integers(-9, 10, size=(d, d)) for d in (2, 3, 2))
    assert np.array_equal(linalg.kron(linalg.kron(a, b), c), linalg.kron(a, linalg.kron(b, c)))


def test_commutator_examples():
    assert np.allclose(linalg.commutator(PAULI_Z, PAULI_Z), 0)
    assert np.allclose(linalg.commutator(PAULI_Z, PAULI_X), 2j * PAULI_Y)
    oracle = Z2 @ X01 - X01 @ Z2
    assert np.allclose(oracle, 0)
    assert np.allclose(linalg.commutator(Z2, X01), 0)
    with pytest.raises(ValueError):
        linalg.commutator(PAULI_Z, Z2)


def test_gellmann_are_orthogonal_and_traceless():
    mats = [linalg.gellmann(k) for k in range(1, 9)]
    gram = np.array([[np.trace(a @ b).real for b in mats] for a in mats])
    assert np.allclose(gram, 2 * np.eye(8))
    assert all(abs(np.trace(m)) < 1e-14 for m in mats)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hermitian_basis_orthonormal(d):
    basis = linalg.hermitian_basis(d)
    assert len(basis) == d * d
    gram = np.array([[np.trace(a.conj().T @ b) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(d * d))
    assert np.allclose(basis[0], np.eye(d) / np.sqrt(d))


def test_embed_examples():
    assert np.array_equal(linalg.embed(PAULI_I, 1, SubsystemLayout((2, 2, 2))).toarray(), np.eye(8))
    assert np.array_equal(linalg.embed(PAULI_Z, 1, SubsystemLayout((2, 2))).toarray(), np.kron(PAULI_I, PAULI_Z))
    assert np.array_equal(linalg.embed(PAULI_Z, 0, SubsystemLayout((2, 2))).toarray(), np.kron(PAULI_Z, PAULI_I))
    with pytest.raises(IndexError):
        linalg.embed(PAULI_Z, 2, SubsystemLayout((2, 2)))
    with pytest.raises(ValueError):
        linalg.embed(PAULI_Z, 0, SubsystemLayout((3, 2)))


@given(small_layouts, seeds)
def test_embed_matches_dense_kron(dims, seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout(tuple(dims))
    site = int(rng.integers(len(dims)))
    local = random_hermitian(rng, dims[site])
    dense = np.ones((1, 1))
    for j, d in enumerate(dims):
        dense = np.kron(dense, local if j == site else np.eye(d))
    assert np.allclose(linalg.embed(local, site, layout).toarray(), dense, atol=0)


@given(st.lists(st.integers(min_value=2, max_value=3), min_size=2, max_size=4), seeds)
def test_embeds_on_distinct_sites_commute(dims, seed):
    rng = np.random.default_rng(seed)
    layout = SubsystemLayout(tuple(dims))
    i, j = rng.choice(len(dims), size=2, replace=False)
    a = linalg.embed(random_hermitian(rng, dims[i]), int(i), layout)
    b = linalg.embed(random_hermitian(rng, dims[j]), int(j), layout)
    assert np.allclose((a @ b - b @ a).toarray(), 0, atol=1e-12)


def test_triplet_round_trip():
    m = linalg.embed_product({0: PAULI_X, 2: Z2}, SubsystemLayout((2, 2, 3)))
    back = linalg.from_triplets(12, linalg.to_triplets(m))
    assert np.array_equal(back.toarray(), m.toarray())
    with pytest.raises(ValueError):
        linalg.from_triplets(2, [(0, 0, 1), (0, 0, 2)])
    with pytest.raises(IndexError):
        linalg.from_triplets(2, [(0, 2, 1)])


def test_hermitian_eig_examples():
    evals, vecs = linalg.hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(evals, [1, 2, 3])
    evals, vecs = linalg.hermitian_eig(PAULI_X)
    assert np.allclose(evals, [-1, 1])
    assert np.isclose(abs(np.vdot(vecs[:, 0], [1, -1])) / np.sqrt(2), 1)
    assert np.isclose(abs(np.vdot(vecs[:, 1], [1, 1])) / np.sqrt(2), 1)
    with pytest.raises(linalg.NotHermitianError):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_hermitian_eig_model_a_pointer_states():
    _, vecs = linalg.hermitian_eig(Z2 + X01)
    expected = [np.array([1, 1, 0]) / np.sqrt(2), np.array([1, -1, 0]) / np.sqrt(2), np.array([0, 0, 1])]
    for p in expected:
        assert np.isclose(np.max(np.abs(vecs.conj().T @ p)), 1.0)


@given(st.integers(min_value=2, max_value=12), seeds)
def test_hermitian_eig_unitary(d, seed):
    m = random_hermitian(np.random.default_rng(seed), d)
    evals, vecs = linalg.hermitian_eig(m)
    assert np.allclose(m @ vecs, vecs * evals, atol=1e-10)
    assert np.allclose(vecs.conj().T @ vecs, np.eye(d), atol=1e-10)


def test_expm_action_examples():
    psi = np.array([1, 0], dtype=complex)
    assert np.array_equal(linalg.expm_action(PAULI_X, 0.0, psi), psi)
    out = linalg.expm_action(PAULI_Z, np.pi / 2, psi)
    assert np.allclose(out, [np.exp(-1j * np.pi / 2), 0], atol=1e-10)
    out = linalg.expm_action(PAULI_X, np.pi / 2, psi)
    oracle = linalg.dense_expm_action(PAULI_X, np.pi / 2, psi)
    assert np.allclose(out, oracle, atol=1e-10)
    assert np.allclose(out, [0, -1j], atol=1e-10)


def test_expm_action_errors():
    with pytest.raises(linalg.NotHermitianError):
        linalg.expm_action(np.array([[0, 1], [0, 0]], dtype=complex), 1.0, np.array([1, 0], dtype=complex))
    with pytest.raises(ValueError):
        linalg.expm_action(PAULI_X, 1.0, np.array([1, 1], dtype=complex))
    with pytest.raises(linalg.ConvergenceError):
        rng = np.random.default_rng(1)
        h = random_hermitian(rng, 40)
        linalg.expm_action(h, 50.0, random_state(rng, 40), krylov_dim=4, max_substeps=3)


@given(st.integers(min_value=2, max_value=64), seeds, st.sampled_from([0.1, 1.0, 10.0]))
def test_expm_action_unitary(d, seed, t):
    rng = np.random.default_rng(seed)
    out = linalg.expm_action(random_hermitian(rng, d), t, random_state(rng, d))
    assert abs(np.linalg.norm(out) - 1) <= 1e-9


@pytest.mark.parametrize("t", [5e-324, 1e-300, -1e-17])
def test_expm_action_tiny_times(t):
    # the per-step error budget underflows for subnormal steps
    rng = np.random.default_rng(0)
    psi = random_state(rng, 64)
    out = linalg.expm_action(random_hermitian(rng, 64), t, psi)
    assert np.allclose(out, psi, atol=1e-12)


@given(st.sampled_from([4, 16, 64, 256]), seeds, st.floats(min_value=-5, max_value=5))
def test_expm_action_matches_scipy_expm(d, seed, t):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, d)
    psi = random_state(rng, d)
    assert np.allclose(linalg.expm_action(h, t, psi), sla.expm(-1j * t * h) @ psi, atol=1e-8)


def test_operator_support_and_schmidt():
    layout = SubsystemLayout((2, 2, 3))
    op = linalg.embed_product({0: PAULI_Z, 2: Z2}, layout).toarray()
    assert linalg.operator_support(op, layout.dims) == {0, 2}
    assert linalg.operator_support(np.eye(12), layout.dims) == set()
    rng = np.random.default_rng(3)
    a, b = random_hermitian(rng, 3), random_hermitian(rng, 2)
    joint = np.kron(a, b) + np.kron(np.eye(3), PAULI_X) + 2 * np.eye(6)
    a_free, b_free, pairs, const = linalg.operator_schmidt(joint, 3, 2)
    rebuilt = const * np.eye(6) + np.kron(a_free, np.eye(2)) + np.kron(np.eye(3), b_free)
    rebuilt = rebuilt + sum(np.kron(s, e) for s, e in pairs)
    assert np.allclose(rebuilt, joint, atol=1e-12)
