import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state, seeds, small_layouts
from darwinism.information import (
    FragmentSampler,
    MIProfile,
    entropy,
    fragment_mi,
    linearity_r2,
    mi_by_size,
    mutual_information,
    partial_trace,
    partial_trace_dm,
    plateau_fraction,
    plateau_score,
    subsystem_entropies,
)


def index_partial_trace(psi, dims, keep):
    """Oracle: reduced density matrix by explicit sums over multi-indices."""
    keep = sorted(keep)
    rest = [j for j in range(len(dims)) if j not in keep]
    t = psi.reshape(dims)
    dk = int(np.prod([dims[k] for k in keep]))
    out = np.zeros((dk, dk), dtype=complex)
    for a_i, a in enumerate(itertools.product(*[range(dims[k]) for k in keep])):
        for b_i, b in enumerate(itertools.product(*[range(dims[k]) for k in keep])):
            total = 0j
            for r in itertools.product(*[range(dims[j]) for j in rest]):
                ia, ib = [0] * len(dims), [0] * len(dims)
                for k, x, y in zip(keep, a, b):
                    ia[k], ib[k] = x, y
                for j, z in zip(rest, r):
                    ia[j] = ib[j] = z
                total += t[tuple(ia)] * np.conj(t[tuple(ib)])
            out[a_i, b_i] = total
    return out


def ghz(n):
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def test_partial_trace_examples():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace(bell, [0], (2, 2)), np.eye(2) / 2)
    prod = np.kron([1, 0], [0, 1])
    assert np.allclose(partial_trace(prod, [1], (2, 2)), [[0, 0], [0, 1]])
    with pytest.raises(IndexError):
        partial_trace(bell, [2], (2, 2))
    with pytest.raises(ValueError):
        partial_trace(bell, [0])


@given(small_layouts.filter(lambda d: len(d) >= 2), seeds)
def test_partial_trace_matches_index_oracle(dims, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, int(np.prod(dims)))
    keep = sorted(rng.choice(len(dims), size=int(rng.integers(1, len(dims))), replace=False).tolist())
    rho = partial_trace(psi, keep, dims)
    assert np.allclose(rho, index_partial_trace(psi, dims, keep), atol=1e-12)
    assert np.allclose(rho, partial_trace_dm(np.outer(psi, psi.conj()), dims, keep), atol=1e-12)


@given(seeds)
def test_sequential_trace_equals_joint(seed):
    dims = (2, 3, 2, 2)
    psi = random_state(np.random.default_rng(seed), 24)
    full = np.outer(psi, psi.conj())
    step = partial_trace_dm(full, dims, [0, 1, 3])
    step = partial_trace_dm(step, (2, 3, 2), [0, 2])
    assert np.allclose(step, partial_trace(psi, [0, 3], dims), atol=1e-12)


def test_entropy_examples():
    assert entropy(np.diag([1.0, 0.0])) == 0.0
    assert np.isclose(entropy(np.eye(2) / 2), 1.0)
    assert np.isclose(entropy(np.eye(3) / 3), np.log2(3))
    assert np.isclose(entropy(np.diag([0.5, 0.5, 0.0, -1e-15])), 1.0)
    with pytest.raises(ValueError):
        entropy(np.eye(2))


def test_ghz_mutual_information():
    psi = ghz(4)
    dims = (2,) * 4
    for size in (1, 2):
        for frag in itertools.combinations(range(1, 4), size):
            assert np.isclose(mutual_information(psi, frag, dims), 1.0)
    assert np.isclose(mutual_information(psi, (1, 2, 3), dims), 2.0)
    assert mutual_information(psi, (), dims) == 0.0


@given(small_layouts.filter(lambda d: len(d) >= 2), seeds)
def test_pure_state_complement_symmetry(dims, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, int(np.prod(dims)))
    n = len(dims)
    subsets = [c for r in range(1, n) for c in itertools.combinations(range(n), r)]
    ent = subsystem_entropies(psi, subsets, dims)
    direct = [entropy(partial_trace(psi, s, dims)) for s in subsets]
    assert np.allclose(ent, direct, atol=1e-9)
    comp = subsystem_entropies(psi, [tuple(j for j in range(n) if j not in s) for s in subsets], dims)
    assert np.allclose(ent, comp, atol=1e-9)


@given(small_layouts.filter(lambda d: len(d) >= 2), seeds)
def test_mutual_information_bounds(dims, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, int(np.prod(dims)))
    env = list(range(1, len(dims)))
    frags = [c for r in range(1, len(env) + 1) for c in itertools.combinations(env, r)]
    s_s = entropy(partial_trace(psi, [0], dims))
    fast = fragment_mi(psi, frags, dims)
    for f, mi in zip(frags, fast):
        s_f = entropy(partial_trace(psi, f, dims))
        assert -1e-9 <= mi <= 2 * min(s_s, s_f) + 1e-9
        assert np.isclose(mi, mutual_information(psi, f, dims), atol=1e-9)
    # pure joint state: the whole environment carries twice the system entropy
    assert np.isclose(fast[-1], 2 * s_s, atol=1e-9)


def test_fragment_sampler_parse_and_limits():
    assert FragmentSampler.parse("exhaustive").kind == "exhaustive"
    assert FragmentSampler.parse("random:5") == FragmentSampler("random", 5)
    assert str(FragmentSampler.parse("random:5")) == "random:5"
    with pytest.raises(ValueError):
        FragmentSampler.parse("some")
    with pytest.raises(ValueError):
        FragmentSampler("random", 11).fragments(range(1, 6), 2)
    assert len(FragmentSampler("auto").fragments(range(1, 11), 5)) == 252
    assert len(FragmentSampler("auto").fragments(range(1, 13), 6)) == 256


@given(seeds)
def test_random_fragments_distinct_and_reproducible(seed):
    s = FragmentSampler("random", 20)
    a = s.fragments(range(1, 11), 4, seed)
    assert a == s.fragments(range(1, 11), 4, seed)
    assert len(set(a)) == 20 and all(len(f) == 4 for f in a)


def test_exhaustive_and_sampled_agree_within_error():
    rng = np.random.default_rng(11)
    psi = random_state(rng, 2**10)
    dims = (2,) * 10
    exact, _ = mi_by_size(psi, 4, "exhaustive", layout=dims)
    for seed in range(5):
        mean, err = mi_by_size(psi, 4, "random:40", seed=seed, layout=dims)
        assert abs(mean - exact) <= 3 * err + 1e-12


def test_haar_state_has_no_plateau():
    rng = np.random.default_rng(5)
    dims = (2,) * 9  # system qubit plus eight environment qubits
    scores = []
    for _ in range(20):
        psi = random_state(rng, 2**9)
        s_s = entropy(partial_trace(psi, [0], dims))
        curve = [0.0] + [mi_by_size(psi, k, layout=dims)[0] / s_s for k in range(1, 9)]
        scores.append(plateau_fraction(np.array(curve)))
    assert np.mean(scores) <= 0.3


def test_plateau_fraction_examples():
    assert plateau_fraction(np.array([0, 1, 1, 1, 2.0])) == 1.0
    assert plateau_fraction(np.array([0, 0.5, 1.0, 1.5, 2.0])) == pytest.approx(1 / 3)
    assert plateau_fraction(np.array([0, 2.0])) == 0.0
    assert plateau_fraction(np.array([0, 0.86, 1.14, 2.0])) == 1.0


def test_plateau_score_reads_profile():
    mean = np.array([[0, 0.2, 0.4, 2.0], [0, 1.0, 1.1, 2.0]])
    prof = MIProfile(np.array([0.0, 1.0]), np.arange(4), mean, np.zeros_like(mean), mean, 1, np.array([3, 3]))
    assert plateau_score(prof, 1.0) == 1.0
    assert plateau_score(prof, 0.0) == 0.0
    with pytest.raises(KeyError):
        plateau_score(prof, 0.5)


def test_linearity_r2_examples():
    assert linearity_r2(np.arange(6.0)) == pytest.approx(1.0)
    assert linearity_r2(np.array([0, 1, 1, 1, 1, 2.0])) < 0.9
    assert linearity_r2(np.zeros(5)) == 1.0


# near-flat lines leave only rounding noise to fit, so keep the slope away from zero
slopes = st.floats(min_value=0.01, max_value=3) | st.floats(min_value=-3, max_value=-0.01)


@given(st.integers(min_value=3, max_value=12), slopes, st.floats(-3, 3))
def test_linearity_r2_exact_line(n, slope, icpt):
    y = slope * np.arange(n) + icpt
    assert linearity_r2(y) == pytest.approx(1.0, abs=1e-9)
