import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cirfusion.eig import _round_robin, hermitian_eig


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def test_diagonal():
    values, vectors = hermitian_eig(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(values, [2.0, 1.0])
    np.testing.assert_allclose(np.abs(vectors), np.eye(2), atol=1e-15)


def test_pauli_y():
    values, vectors = hermitian_eig(np.array([[0, 1j], [-1j, 0]]))
    np.testing.assert_allclose(values, [1.0, -1.0], atol=1e-15)
    m = np.array([[0, 1j], [-1j, 0]])
    for i in range(2):
        np.testing.assert_allclose(m @ vectors[:, i], values[i] * vectors[:, i], atol=1e-14)


@pytest.mark.parametrize("seed", range(100))
def test_reconstruction_8x8(seed):
    m = random_hermitian(np.random.default_rng(seed), 8)
    values, v = hermitian_eig(m)
    assert np.linalg.norm(v @ np.diag(values) @ v.conj().T - m) <= 1e-9 * np.linalg.norm(m)
    assert np.linalg.norm(v.conj().T @ v - np.eye(8)) <= 1e-10
    assert np.all(np.diff(values) <= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_eigenvalues_match_lapack(n, seed):
    m = random_hermitian(np.random.default_rng(seed), n)
    values, _ = hermitian_eig(m)
    np.testing.assert_allclose(values, np.linalg.eigvalsh(m)[::-1], atol=1e-10 * max(np.linalg.norm(m), 1))


def test_repeated_eigenvalues(rng):
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    m = q @ np.diag([3.0, 3.0, 3.0, 1.0, 1.0, -2.0]) @ q.conj().T
    values, v = hermitian_eig(m)
    np.testing.assert_allclose(values, [3, 3, 3, 1, 1, -2], atol=1e-12)
    np.testing.assert_allclose(v @ np.diag(values) @ v.conj().T, m, atol=1e-12)


def test_empty_and_scalar():
    values, vectors = hermitian_eig(np.zeros((0, 0)))
    assert values.size == 0 and vectors.shape == (0, 0)
    values, vectors = hermitian_eig(np.array([[4.0]]))
    assert values[0] == 4.0 and vectors[0, 0] == 1.0


def test_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        hermitian_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="square"):
        hermitian_eig(np.ones((2, 3)))


@pytest.mark.parametrize("n", [2, 5, 8, 9])
def test_round_robin_schedule(n):
    rounds = _round_robin(n)
    seen = []
    for p, q in rounds:
        idx = np.concatenate([p, q])
        assert len(set(idx.tolist())) == idx.size  # disjoint within a round
        seen += list(zip(p.tolist(), q.tolist()))
    assert sorted(seen) == list(itertools.combinations(range(n), 2))
