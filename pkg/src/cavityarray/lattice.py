"""Cavity-grid geometries and their single-excitation tight-binding Hamiltonians.

Sites sit on an ``rows x cols`` grid indexed row-major. Nearest neighbours
couple through one of three classes:

* ``HORIZONTAL``  (r, c)-(r, c+1), strength ``j2``
* ``VERTICAL``    (r, c)-(r+1, c), strength ``j1``
* ``DIAGONAL60``  (r, c)-(r+1, c+1) and, with ``both_diagonals``,
  (r, c)-(r+1, c-1), strength ``t``

Every frequency is an ordinary frequency (g / 2pi) in THz.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


class CouplingClass(enum.Enum):
    DIAGONAL60 = "diagonal60"
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    NONE = "none"


@dataclass(frozen=True)
class CavitySite:
    row: int
    col: int
    cols: int = 1

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError(f"site indices must be >= 0, got ({self.row}, {self.col})")
        if self.cols < 1 or self.col >= self.cols:
            raise ValueError(f"col {self.col} out of range for a grid with {self.cols} columns")

    @property
    def flat_index(self) -> int:
        return self.row * self.cols + self.col


@dataclass(frozen=True)
class CouplingSet:
    """Coupling strengths t, j1, j2 in THz."""

    t: float
    j1: float
    j2: float = 0.0

    def __post_init__(self):
        for name in ("t", "j1", "j2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"coupling {name} must be finite and >= 0, got {value!r}")

    def strength(self, cls: CouplingClass) -> float:
        if cls is CouplingClass.DIAGONAL60:
            return self.t
        if cls is CouplingClass.VERTICAL:
            return self.j1
        if cls is CouplingClass.HORIZONTAL:
            return self.j2
        return 0.0


@dataclass(frozen=True)
class CouplingGraph:
    rows: int
    cols: int
    edges: tuple[tuple[int, int, CouplingClass], ...]
    both_diagonals: bool = False

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def sites(self) -> Iterator[CavitySite]:
        for r in range(self.rows):
            for c in range(self.cols):
                yield CavitySite(r, c, self.cols)

    def count(self, cls: CouplingClass) -> int:
        return sum(1 for _, _, k in self.edges if k is cls)


def classify_pair(a: CavitySite, b: CavitySite, both_diagonals: bool = False) -> CouplingClass:
    """Coupling class of two distinct sites; ``NONE`` beyond nearest neighbours."""
    if (a.row, a.col) == (b.row, b.col):
        raise ValueError(f"cannot classify a site with itself: ({a.row}, {a.col})")
    drow = b.row - a.row
    dcol = b.col - a.col
    if drow == 0 and abs(dcol) == 1:
        return CouplingClass.HORIZONTAL
    if dcol == 0 and abs(drow) == 1:
        return CouplingClass.VERTICAL
    if abs(drow) == 1 and abs(dcol) == 1:
        # (r,c)-(r+1,c+1) seen from either end has drow == dcol
        if drow == dcol or both_diagonals:
            return CouplingClass.DIAGONAL60
    return CouplingClass.NONE


def build_grid_geometry(rows: int, cols: int, both_diagonals: bool = False) -> CouplingGraph:
    if int(rows) != rows or rows < 1:
        raise ValueError(f"rows must be an integer >= 1, got {rows!r}")
    if int(cols) != cols or cols < 1:
        raise ValueError(f"cols must be an integer >= 1, got {cols!r}")
    rows, cols = int(rows), int(cols)
    sites = [CavitySite(r, c, cols) for r in range(rows) for c in range(cols)]
    edges = []
    for a, b in itertools.combinations(sites, 2):
        # only nearest-neighbour offsets can couple
        if abs(a.row - b.row) > 1 or abs(a.col - b.col) > 1:
            continue
        cls = classify_pair(a, b, both_diagonals)
        if cls is not CouplingClass.NONE:
            edges.append((a.flat_index, b.flat_index, cls))
    return CouplingGraph(rows, cols, tuple(edges), bool(both_diagonals))


def chain_geometry(n: int) -> CouplingGraph:
    """A 1 x n row of cavities (horizontal couplings only)."""
    return build_grid_geometry(1, n)


def molecule_geometry() -> CouplingGraph:
    """Two cavities joined by a single vertical link, strength ``j1``."""
    return build_grid_geometry(2, 1)


def coupling_matrix(graph: CouplingGraph, couplings: CouplingSet) -> np.ndarray:
    """Off-diagonal part of the Hamiltonian (zero diagonal)."""
    n = graph.n_sites
    h = np.zeros((n, n))
    for i, j, cls in graph.edges:
        g = couplings.strength(cls)
        h[i, j] = g
        h[j, i] = g
    return h


def build_hamiltonian(graph: CouplingGraph, couplings: CouplingSet,
                      detunings: Sequence[float]) -> np.ndarray:
    """Dense real symmetric Hamiltonian: detunings on the diagonal, couplings off it."""
    d = np.asarray(detunings, dtype=float)
    if d.shape != (graph.n_sites,):
        raise ValueError(
            f"expected {graph.n_sites} detunings for a {graph.rows}x{graph.cols} grid, "
            f"got shape {d.shape}")
    h = coupling_matrix(graph, couplings)
    h[np.diag_indices_from(h)] = d
    return h
