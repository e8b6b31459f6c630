"""Gaussian fabrication disorder and Monte Carlo ensembles of array spectra.

Random streams
--------------
Trials are grouped into fixed blocks of ``BLOCK_TRIALS``. Block ``b`` draws
from ``PCG64(SeedSequence(seed, spawn_key=(b,)))`` and always consumes a full
``BLOCK_TRIALS x n`` slab of standard normals (ziggurat transform, numpy's
``Generator.standard_normal``), so the variates of trial ``k`` depend only on
``(seed, k)``: not on the trial count, the block schedule or the thread
count. Detunings are ``sigma_f * z``; reusing ``z`` across calls gives common
random numbers, and scaling couplings and ``sigma_f`` together by a power of
two scales every eigenvalue exactly.

Block results are reduced in block order with a pairwise mean/M2 merge, so
aggregates are bitwise reproducible for any ``threads``.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cavityarray.eigensolver import EigenConvergenceError, eigenvalues_batch
from cavityarray.lattice import CouplingGraph, CouplingSet, coupling_matrix

log = logging.getLogger(__name__)

BLOCK_TRIALS = 1024
DEFAULT_TRIALS = 10000


@dataclass(frozen=True)
class DisorderModel:
    """Zero-mean Gaussian detuning of each cavity with standard deviation sigma_f (THz)."""

    sigma_f: float

    def __post_init__(self):
        if not np.isfinite(self.sigma_f) or self.sigma_f < 0:
            raise ValueError(f"sigma_f must be finite and >= 0, got {self.sigma_f!r}")


@dataclass
class EnsembleStats:
    sigma_f: float
    trials: int
    mean_eigs: np.ndarray
    std_eigs: np.ndarray
    mean_seps: np.ndarray
    std_seps: np.ndarray
    seed: int

    @property
    def n_modes(self) -> int:
        return len(self.mean_eigs)

    @property
    def stderr_seps(self) -> np.ndarray:
        return self.std_seps / np.sqrt(self.trials)

    @property
    def stderr_eigs(self) -> np.ndarray:
        return self.std_eigs / np.sqrt(self.trials)


@dataclass
class SweepTable:
    rows: list[EnsembleStats] = field(default_factory=list)

    def __post_init__(self):
        sig = [r.sigma_f for r in self.rows]
        if any(b <= a for a, b in zip(sig, sig[1:])):
            raise ValueError("sweep rows must have strictly increasing sigma_f")

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def sigma(self) -> np.ndarray:
        return np.array([r.sigma_f for r in self.rows])

    @property
    def mean_seps(self) -> np.ndarray:
        """(grid points, gaps) array of mean separations."""
        return np.array([r.mean_seps for r in self.rows])

    @property
    def mean_eigs(self) -> np.ndarray:
        return np.array([r.mean_eigs for r in self.rows])

    def header(self) -> list[str]:
        n = self.rows[0].n_modes
        cols = ["sigma_f", "trials"]
        cols += [f"mean_eig_{i}" for i in range(1, n + 1)]
        cols += [f"std_eig_{i}" for i in range(1, n + 1)]
        cols += [f"mean_sep_{i}" for i in range(1, n)]
        cols += [f"std_sep_{i}" for i in range(1, n)]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for r in self.rows:
            values = [r.sigma_f, *r.mean_eigs, *r.std_eigs, *r.mean_seps, *r.std_seps]
            w.writerow([fmt(r.sigma_f), str(r.trials)] + [fmt(v) for v in values[1:]])
        return buf.getvalue()


def fmt(value: float) -> str:
    """Nine significant digits; negative zero printed as 0."""
    value = float(value)
    if value == 0.0:
        value = 0.0
    return format(value, ".9g")


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit child seed for grid point ``index`` of a sweep."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_detunings(rng: np.random.Generator, n: int, model: DisorderModel) -> np.ndarray:
    """``n`` Gaussian detunings (THz) with zero mean and std ``model.sigma_f``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = rng.standard_normal(n)
    if model.sigma_f == 0.0:
        return np.zeros(n)
    return model.sigma_f * z


def block_normals(seed: int, block: int, n: int) -> np.ndarray:
    return _stream(seed, block).standard_normal((BLOCK_TRIALS, n))


def trial_normals(seed: int, trials: int, n: int) -> np.ndarray:
    """Standard normals for trials ``0..trials-1``, shape (trials, n)."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    nblocks = -(-trials // BLOCK_TRIALS)
    z = np.concatenate([block_normals(seed, b, n) for b in range(nblocks)])
    return z[:trials]


def _spectra(base: np.ndarray, sigma_f: float, z: np.ndarray, first_trial: int) -> np.ndarray:
    n = base.shape[0]
    mats = np.broadcast_to(base, (z.shape[0], n, n)).copy()
    if sigma_f != 0.0:
        mats[:, np.arange(n), np.arange(n)] = sigma_f * z
    try:
        values, _, _ = eigenvalues_batch(mats)
    except EigenConvergenceError as err:
        trial = first_trial + err.index
        raise EigenConvergenceError(
            f"eigensolver failed on trial {trial}: {err}", residual=err.residual,
            index=trial) from None
    return values


def _moments(x: np.ndarray):
    # shifting by the first sample makes identical samples give exactly zero spread
    shift = x[0]
    d = x - shift
    dm = d.mean(axis=0)
    m2 = ((d - dm) ** 2).sum(axis=0)
    return x.shape[0], shift + dm, m2


def _merge(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = sa + sb + delta * delta * (na * nb / n)
    return n, mean, m2


def _reduce(chunks, base, sigma_f, threads):
    """Eigen/separation moments over chunks of (first_trial, z) in chunk order."""

    def work(item):
        first, z = item
        vals = _spectra(base, sigma_f, z, first)
        seps = np.diff(vals, axis=1)
        return _moments(vals), _moments(seps)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    eig, sep = parts[0]
    for e, s in parts[1:]:
        eig = _merge(eig, e)
        sep = _merge(sep, s)
    return eig, sep


def _stats(sigma_f, seed, eig, sep) -> EnsembleStats:
    trials = eig[0]
    return EnsembleStats(
        sigma_f=float(sigma_f),
        trials=int(trials),
        mean_eigs=eig[1],
        std_eigs=np.sqrt(eig[2] / trials),
        mean_seps=sep[1],
        std_seps=np.sqrt(sep[2] / trials),
        seed=int(seed),
    )


def run_ensemble(graph: CouplingGraph, couplings: CouplingSet, model: DisorderModel,
                 trials: int = DEFAULT_TRIALS, master_seed: int = 0,
                 threads: int = 1) -> EnsembleStats:
    """Per-mode and per-gap mean/std of sorted spectra over ``trials`` disorder draws."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    base = coupling_matrix(graph, couplings)
    n = graph.n_sites
    nblocks = -(-trials // BLOCK_TRIALS)

    def chunks():
        for b in range(nblocks):
            count = min(BLOCK_TRIALS, trials - b * BLOCK_TRIALS)
            yield b * BLOCK_TRIALS, block_normals(master_seed, b, n)[:count]

    eig, sep = _reduce(list(chunks()), base, model.sigma_f, threads)
    if n == 1:
        sep = (trials, np.zeros(0), np.zeros(0))
    return _stats(model.sigma_f, master_seed, eig, sep)


def ensemble_from_normals(graph: CouplingGraph, couplings: CouplingSet, sigma_f: float,
                          z: np.ndarray, seed: int = 0, threads: int = 1) -> EnsembleStats:
    """Like :func:`run_ensemble` but with caller-supplied standard normals (trials, n)."""
    if not sigma_f >= 0:
        raise ValueError(f"sigma_f must be >= 0, got {sigma_f!r}")
    base = coupling_matrix(graph, couplings)
    chunks = [(lo, z[lo:lo + BLOCK_TRIALS]) for lo in range(0, z.shape[0], BLOCK_TRIALS)]
    eig, sep = _reduce(chunks, base, sigma_f, threads)
    return _stats(sigma_f, seed, eig, sep)


def simulate_spectra(graph: CouplingGraph, couplings: CouplingSet, model: DisorderModel,
                     trials: int, master_seed: int = 0) -> np.ndarray:
    """Raw sorted spectra (trials, n) from the same streams :func:`run_ensemble` uses."""
    base = coupling_matrix(graph, couplings)
    z = trial_normals(master_seed, trials, graph.n_sites)
    return _spectra(base, model.sigma_f, z, 0)


def _check_grid(sigma_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(sigma_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sigma grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise ValueError("sigma grid values must be finite and >= 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("sigma grid must be strictly increasing")
    return grid


def sweep_sigma(graph: CouplingGraph, couplings: CouplingSet, sigma_grid: Sequence[float],
                trials: int = DEFAULT_TRIALS, master_seed: int = 0,
                threads: int = 1) -> SweepTable:
    grid = _check_grid(sigma_grid)
    rows = []
    for i, sigma in enumerate(grid):
        seed = derive_seed(master_seed, i)
        log.debug("sweep point %d: sigma_f=%g seed=%d", i, sigma, seed)
        rows.append(run_ensemble(graph, couplings, DisorderModel(float(sigma)), trials,
                                 seed, threads))
    return SweepTable(rows)


def sigma_grid_from_range(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive ``start:stop:step`` grid, robust to float step accumulation."""
    if step <= 0:
        raise ValueError(f"grid step must be > 0, got {step}")
    if stop < start:
        raise ValueError(f"grid stop {stop} is below start {start}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)
