import itertools

import numpy as np
import pytest

from cavityarray.lattice import (
    CavitySite,
    CouplingClass,
    CouplingSet,
    build_grid_geometry,
    build_hamiltonian,
    chain_geometry,
    classify_pair,
)

NOMINAL = CouplingSet(t=1.2, j1=0.8, j2=0.0)


def brute_force_edges(rows, cols, both_diagonals):
    """Classify every pair of sites by raw offset, no shortcuts."""
    counts = {"h": 0, "v": 0, "d": 0}
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    for (r1, c1), (r2, c2) in itertools.combinations(cells, 2):
        dr, dc = r2 - r1, c2 - c1
        if dr == 0 and abs(dc) == 1:
            counts["h"] += 1
        elif dc == 0 and abs(dr) == 1:
            counts["v"] += 1
        elif abs(dr) == 1 and abs(dc) == 1 and (dr == dc or both_diagonals):
            counts["d"] += 1
    return counts


def test_single_cavity():
    g = build_grid_geometry(1, 1)
    assert g.n_sites == 1
    assert g.edges == ()


def test_two_by_two_counts():
    g = build_grid_geometry(2, 2)
    assert g.n_sites == 4
    assert g.count(CouplingClass.HORIZONTAL) == 2
    assert g.count(CouplingClass.VERTICAL) == 2
    assert g.count(CouplingClass.DIAGONAL60) == 1


def test_four_by_four_matches_brute_force():
    g = build_grid_geometry(4, 4)
    expected = brute_force_edges(4, 4, False)
    assert expected == {"h": 12, "v": 12, "d": 9}
    assert len(g.edges) == 33
    assert g.count(CouplingClass.HORIZONTAL) == expected["h"]
    assert g.count(CouplingClass.VERTICAL) == expected["v"]
    assert g.count(CouplingClass.DIAGONAL60) == expected["d"]


@pytest.mark.parametrize("rows,cols", list(itertools.product(range(1, 7), range(1, 7))))
def test_edge_count_formula(rows, cols):
    g = build_grid_geometry(rows, cols)
    assert g.count(CouplingClass.HORIZONTAL) == rows * (cols - 1)
    assert g.count(CouplingClass.VERTICAL) == (rows - 1) * cols
    assert g.count(CouplingClass.DIAGONAL60) == (rows - 1) * (cols - 1)
    both = build_grid_geometry(rows, cols, both_diagonals=True)
    assert both.count(CouplingClass.DIAGONAL60) == 2 * (rows - 1) * (cols - 1)
    assert brute_force_edges(rows, cols, True)["d"] == both.count(CouplingClass.DIAGONAL60)


@pytest.mark.parametrize("rows,cols", [(3, 4), (5, 2)])
def test_graph_invariants(rows, cols):
    g = build_grid_geometry(rows, cols, both_diagonals=True)
    pairs = [frozenset((a, b)) for a, b, _ in g.edges]
    assert all(a != b for a, b, _ in g.edges)
    assert len(pairs) == len(set(pairs))
    assert all(cls is not CouplingClass.NONE for _, _, cls in g.edges)


@pytest.mark.parametrize("rows,cols", [(0, 3), (3, 0), (-1, 2)])
def test_rejects_empty_grid(rows, cols):
    with pytest.raises(ValueError, match="rows|cols"):
        build_grid_geometry(rows, cols)


def test_flat_index():
    assert CavitySite(2, 3, cols=4).flat_index == 11
    sites = list(build_grid_geometry(3, 4).sites())
    assert [s.flat_index for s in sites] == list(range(12))


@pytest.mark.parametrize("a,b,expected", [
    ((0, 0), (0, 1), CouplingClass.HORIZONTAL),
    ((0, 0), (1, 1), CouplingClass.DIAGONAL60),
    ((0, 0), (2, 2), CouplingClass.NONE),
    ((0, 0), (1, 0), CouplingClass.VERTICAL),
    ((0, 1), (1, 0), CouplingClass.NONE),
    ((0, 0), (0, 2), CouplingClass.NONE),
])
def test_classify_pair(a, b, expected):
    assert classify_pair(CavitySite(*a, cols=4), CavitySite(*b, cols=4)) is expected


def test_anti_diagonal_needs_flag():
    a, b = CavitySite(0, 1, cols=2), CavitySite(1, 0, cols=2)
    assert classify_pair(a, b) is CouplingClass.NONE
    assert classify_pair(a, b, both_diagonals=True) is CouplingClass.DIAGONAL60


def test_classify_rejects_same_site():
    with pytest.raises(ValueError):
        classify_pair(CavitySite(1, 1, cols=3), CavitySite(1, 1, cols=3))


@pytest.mark.parametrize("both", [False, True])
def test_classify_symmetric_on_4x4(both):
    sites = list(build_grid_geometry(4, 4).sites())
    for a, b in itertools.permutations(sites, 2):
        assert classify_pair(a, b, both) is classify_pair(b, a, both)


def test_hamiltonian_two_site_chain():
    h = build_hamiltonian(chain_geometry(2), CouplingSet(0.0, 0.0, 1.0), [0.0, 0.0])
    np.testing.assert_array_equal(h, [[0.0, 1.0], [1.0, 0.0]])


def test_hamiltonian_two_by_two_nominal_couplings():
    h = build_hamiltonian(build_grid_geometry(2, 2), NOMINAL, np.zeros(4))
    # sites: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1)
    expected = np.zeros((4, 4))
    for i, j, g in [(0, 3, 1.2), (0, 2, 0.8), (1, 3, 0.8), (0, 1, 0.0), (2, 3, 0.0)]:
        expected[i, j] = expected[j, i] = g
    np.testing.assert_array_equal(h, expected)


def test_zero_couplings_give_diagonal():
    d = np.array([0.3, -1.0, 2.5, 0.0, 0.7, -0.2])
    h = build_hamiltonian(build_grid_geometry(2, 3, True), CouplingSet(0, 0, 0), d)
    np.testing.assert_array_equal(h, np.diag(d))


def test_hamiltonian_dimension_mismatch():
    with pytest.raises(ValueError, match="expected 4 detunings"):
        build_hamiltonian(build_grid_geometry(2, 2), NOMINAL, [0.0, 0.0, 0.0])


@pytest.mark.parametrize("seed", range(5))
def test_hamiltonian_symmetry_and_trace(seed):
    rng = np.random.default_rng(seed)
    g = build_grid_geometry(4, 4, both_diagonals=bool(seed % 2))
    d = rng.normal(0.0, 0.5, g.n_sites)
    h = build_hamiltonian(g, CouplingSet(*rng.uniform(0, 2, 3)), d)
    assert np.array_equal(h, h.T)
    assert np.trace(h) == np.trace(np.diag(d))
    np.testing.assert_array_equal(np.diag(h), d)


def test_negative_coupling_rejected():
    with pytest.raises(ValueError, match="j1"):
        CouplingSet(1.0, -0.1, 0.0)
