import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cavityarray.eigensolver import (
    EigenConvergenceError,
    EigenSpectrum,
    eigenvalues_batch,
    eigenvalues_symmetric,
    round_robin_schedule,
    separations,
)
from cavityarray.lattice import CouplingSet, build_grid_geometry, build_hamiltonian

from conftest import charpoly_roots

# clean 2x2 array at t=1.2, j1=0.8: chain j1-t-j1, roots +-(t/2 +- sqrt(t^2/4 + j1^2))
FOUR_CAVITY_ROOTS = np.array([-1.6, -0.4, 0.4, 1.6])


def sym(a):
    return 0.5 * (a + a.T)


@pytest.mark.parametrize("m,expected", [
    ([[0.0, 1.0], [1.0, 0.0]], [-1.0, 1.0]),
    ([[1.5, 2.0], [2.0, -1.5]], [-2.5, 2.5]),
    ([[3.25]], [3.25]),
])
def test_closed_form_cases(m, expected):
    spec = eigenvalues_symmetric(m)
    np.testing.assert_allclose(spec.values, expected, atol=1e-14)
    assert len(spec) == len(expected)


def test_single_entry_needs_no_sweeps():
    spec = eigenvalues_symmetric([[-0.7]])
    assert spec.values.tolist() == [-0.7]
    assert spec.iterations == 0


def test_four_cavity_against_charpoly():
    h = build_hamiltonian(build_grid_geometry(2, 2), CouplingSet(1.2, 0.8, 0.0), np.zeros(4))
    roots = charpoly_roots(h)
    np.testing.assert_allclose(roots, FOUR_CAVITY_ROOTS, atol=1e-12)
    spec = eigenvalues_symmetric(h)
    np.testing.assert_allclose(spec.values, roots, atol=1e-8)
    gaps = separations(spec)
    np.testing.assert_allclose(gaps, np.diff(roots), atol=1e-8)
    assert gaps.shape == (3,)


def test_separations_examples():
    assert separations(EigenSpectrum(np.array([-1.0, 1.0]), 0, 0.0)).tolist() == [2.0]
    assert separations([0.0, 0.0, 0.0]).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        separations([1.0])


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenvalues_symmetric(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        eigenvalues_symmetric(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues_symmetric(np.eye(2), tol=0.0)


def test_nonconvergence_reports_residual(rng):
    a = sym(rng.normal(size=(8, 8)))
    with pytest.raises(EigenConvergenceError) as info:
        eigenvalues_symmetric(a, max_sweeps=1)
    assert info.value.residual > 1e-12
    assert info.value.index == 0


def test_batch_error_names_global_index(rng):
    a = np.array([np.diag(rng.normal(size=5)) for _ in range(600)])
    a[517] = sym(rng.normal(size=(5, 5)))
    with pytest.raises(EigenConvergenceError, match="matrix 517") as info:
        eigenvalues_batch(a, max_sweeps=1)
    assert info.value.index == 517


def test_non_finite_rejected():
    a = np.zeros((3, 2, 2))
    a[2, 0, 1] = np.nan
    with pytest.raises(ValueError, match="matrix 2"):
        eigenvalues_batch(a)


@pytest.mark.parametrize("n", range(1, 17))
def test_round_robin_covers_every_pair_once(n):
    seen = []
    for p, q in round_robin_schedule(n):
        idx = np.concatenate([p, q])
        assert len(set(idx.tolist())) == idx.size
        seen += list(zip(p.tolist(), q.tolist()))
    assert sorted(seen) == [(i, j) for i in range(n) for j in range(i + 1, n)]


def test_diagonal_input_exact():
    d = np.array([0.3, -2.0, 1e-3, 7.5, -2.0])
    np.testing.assert_array_equal(eigenvalues_symmetric(np.diag(d)).values, np.sort(d))


def test_batch_matches_single(rng):
    mats = np.array([sym(rng.uniform(-3, 3, (6, 6))) for _ in range(40)])
    values, sweeps, residuals = eigenvalues_batch(mats)
    for k in range(40):
        single = eigenvalues_symmetric(mats[k])
        assert np.array_equal(single.values, values[k])
        assert single.iterations == sweeps[k]
    assert np.all(residuals <= 1e-12)


def test_result_independent_of_batch_company(rng):
    mats = np.array([sym(rng.normal(size=(9, 9))) for _ in range(300)])
    full, _, _ = eigenvalues_batch(mats)
    part, _, _ = eigenvalues_batch(mats[123:130])
    assert np.array_equal(full[123:130], part)


symmetric_matrices = st.integers(1, 16).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_subnormal=False))
).map(sym)


@settings(max_examples=150, deadline=None)
@given(symmetric_matrices)
def test_trace_and_frobenius_identities(a):
    spec = eigenvalues_symmetric(a)
    assert np.all(np.diff(spec.values) >= 0)
    assert spec.offdiag_residual <= 1e-12
    assert abs(spec.values.sum() - np.trace(a)) <= 1e-10 * max(1.0, abs(np.trace(a)))
    assert abs(np.sum(spec.values ** 2) - np.sum(a * a)) <= 1e-9 * max(1.0, np.sum(a * a))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10)))
    .map(sym))
def test_small_cases_match_charpoly(a):
    roots = charpoly_roots(a)
    if len(roots) != a.shape[0]:
        return  # repeated root: no sign change to bracket
    np.testing.assert_allclose(eigenvalues_symmetric(a).values, roots, atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_permutation_similarity(seed):
    rng = np.random.default_rng(seed)
    g = build_grid_geometry(4, 4)
    h = build_hamiltonian(g, CouplingSet(1.2, 0.8, 0.1), rng.normal(0, 0.3, 16))
    perm = rng.permutation(16)
    relabeled = h[np.ix_(perm, perm)]
    np.testing.assert_allclose(eigenvalues_symmetric(relabeled).values,
                               eigenvalues_symmetric(h).values, atol=1e-10)
