import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtnlab.errors import ASingular, Indeterminate
from dtnlab.linalg import (
    Inertia,
    classify,
    eig_inertia,
    eigs,
    ldlt_inertia,
    ldlt_pivots,
    schur_complement,
    solve,
    spectral_norm,
)


def random_sym(rng, n, rank=None):
    if rank is None:
        a = rng.standard_normal((n, n))
        return a + a.T
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.zeros(n)
    w[:rank] = rng.choice([-1.0, 1.0], rank) * rng.uniform(0.5, 3.0, rank)
    return (q * w) @ q.T


def test_diagonal_inertia():
    assert ldlt_inertia(np.diag([-1.0, 0.0, 2.0])).as_tuple() == (1, 1, 1)


def test_off_diagonal_needs_2x2_pivot():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    blocks = ldlt_pivots(m)
    assert [b.shape for b in blocks] == [(2, 2)]
    assert ldlt_inertia(m).as_tuple() == (1, 0, 1)


def test_empty_matrix():
    assert ldlt_inertia(np.zeros((0, 0))).as_tuple() == (0, 0, 0)


def test_ldlt_matches_eigs_on_random_matrices():
    rng = np.random.default_rng(1)
    for _ in range(200):
        m = random_sym(rng, 12)
        assert ldlt_inertia(m).as_tuple() == eig_inertia(m).as_tuple()


def test_ldlt_counts_kernels_of_rank_deficient_matrices():
    rng = np.random.default_rng(2)
    for n in (5, 17, 60, 130):
        for rank in (0, n // 3, n - 1):
            m = random_sym(rng, n, rank)
            inert = ldlt_inertia(m)
            assert inert.n_zero == n - rank
            assert inert.as_tuple() == eig_inertia(m).as_tuple()


def test_ldlt_beyond_one_panel():
    rng = np.random.default_rng(3)
    m = random_sym(rng, 211)
    assert ldlt_inertia(m).as_tuple() == eig_inertia(m).as_tuple()


def test_gray_band_is_indeterminate():
    with pytest.raises(Indeterminate):
        ldlt_inertia(np.diag([1.0, 5e-9]))
    assert ldlt_inertia(np.diag([1.0, 5e-10])).n_zero == 1


def test_inertia_properties():
    a = Inertia(1, 2, 3)
    assert (a.order, a.mor, a.mor0) == (6, 1, 3)
    assert (a + Inertia(1, 0, 0)).as_tuple() == (2, 2, 3)


def test_classify_tolerance_is_relative():
    assert classify([1e-12, -3.0, 4.0], 1e-9, 4.0).as_tuple() == (1, 1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_congruence_invariance(n, seed):
    rng = np.random.default_rng(seed)
    m = random_sym(rng, n, rank=int(rng.integers(0, n + 1)))
    s = rng.standard_normal((n, n)) + 3 * np.eye(n)
    # well-conditioned change of basis
    if np.linalg.cond(s) > 1e3:
        return
    assert ldlt_inertia(s.T @ m @ s, 1e-8).as_tuple() == ldlt_inertia(m, 1e-8).as_tuple()


def test_eigs_examples():
    np.testing.assert_array_equal(eigs(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])
    assert eigs(np.array([[4.5]]))[0] == 4.5


def test_eigs_second_difference_closed_form():
    n = 50
    h = 1.0 / n
    m = (np.diag(np.full(n - 1, 2.0)) - np.diag(np.ones(n - 2), 1) - np.diag(np.ones(n - 2), -1)) / h**2
    j = np.arange(1, n)
    exact = 4 / h**2 * np.sin(j * math.pi * h / 2) ** 2
    np.testing.assert_allclose(eigs(m), exact, rtol=1e-8)
    w, v = eigs(m, vectors=True)
    assert np.abs(m @ v - v * w).max() <= 1e-8 * np.linalg.norm(m, 2)
    np.testing.assert_allclose(v.T @ v, np.eye(n - 1), atol=1e-12)


def test_schur_examples():
    s = schur_complement(np.array([[2.0]]), np.array([[1.0]]), np.array([[2.0]]))
    assert s[0, 0] == pytest.approx(1.5)
    with pytest.raises(ASingular):
        schur_complement(np.array([[0.0]]), np.array([[1.0]]), np.array([[2.0]]))


def test_haynsworth_additivity():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n, m = rng.integers(1, 10, size=2)
        full = random_sym(rng, n + m)
        a, b, d = full[:n, :n], full[:n, n:], full[n:, n:]
        s = schur_complement(a, b, d)
        assert ldlt_inertia(full).as_tuple() == (ldlt_inertia(a) + ldlt_inertia(s)).as_tuple()


def test_solve_examples():
    rhs = np.array([3.0, -1.0])
    np.testing.assert_array_equal(solve(np.eye(2), rhs), rhs)
    np.testing.assert_allclose(solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0])
    with pytest.raises(ASingular):
        solve(np.zeros((2, 2)), rhs)


def test_solve_against_eigen_inverse():
    rng = np.random.default_rng(5)
    g = rng.standard_normal((20, 20))
    a = g @ g.T + 20 * np.eye(20)
    rhs = rng.standard_normal(20)
    w, v = eigs(a, vectors=True)
    x = solve(a, rhs)
    np.testing.assert_allclose(x, v @ ((v.T @ rhs) / w), rtol=1e-10)
    assert np.linalg.norm(a @ x - rhs) <= 1e-10 * np.linalg.norm(a, 2) * np.linalg.norm(x)


def test_spectral_norm_examples():
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-8)
    u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    assert spectral_norm(np.outer(u, v)) == pytest.approx(15.0, rel=1e-8)
    rng = np.random.default_rng(6)
    m = rng.standard_normal((10, 10))
    assert spectral_norm(m) == pytest.approx(math.sqrt(eigs(m.T @ m)[-1]), rel=1e-7)
