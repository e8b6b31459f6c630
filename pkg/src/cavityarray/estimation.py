"""Separation statistics of measured spectra and coupling/disorder estimation.

Gap indices are 0-based in the Python API and 1-based in CSV files.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from cavityarray.disorder import (
    DEFAULT_TRIALS,
    SweepTable,
    ensemble_from_normals,
    trial_normals,
)
from cavityarray.lattice import CouplingGraph, CouplingSet
from cavityarray.molecule import uncoupled_ratio

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.3
# half-width of the disorder-dominated band around sqrt(pi/2 - 1), relative
DISORDER_BAND = 0.2
SEARCH_TRIALS = 2000
MAX_ITER = 500
SIMPLEX_XTOL = 1e-3


@dataclass(frozen=True)
class SpectrumRecord:
    array_id: str
    array_size: int
    mode_frequencies: tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.mode_frequencies)
        if any(b < a for a, b in zip(freqs, freqs[1:])):
            raise ValueError(f"record {self.array_id!r}: mode frequencies must be sorted ascending")
        object.__setattr__(self, "mode_frequencies", freqs)

    @property
    def valid(self) -> bool:
        """One observed mode per cavity."""
        return len(self.mode_frequencies) == self.array_size

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.mode_frequencies)


@dataclass(frozen=True)
class SeparationStats:
    index: int
    mu: float
    sigma: float
    count: int

    @property
    def ratio(self) -> float:
        if self.mu > 0:
            return self.sigma / self.mu
        return 0.0 if self.sigma == 0 else math.inf


class Regime(enum.Enum):
    COUPLING_DOMINATED = "CouplingDominated"
    DISORDER_DOMINATED = "DisorderDominated"
    AMBIGUOUS = "Ambiguous"


@dataclass
class FitResult:
    t: float
    j1: float
    j2: float
    sigma_f: float
    objective: float
    iterations: int
    converged: bool
    residuals: list[tuple[int, float, float]] = field(default_factory=list)
    clamped: tuple[str, ...] = ()
    trials: int = DEFAULT_TRIALS

    @property
    def couplings(self) -> CouplingSet:
        return CouplingSet(self.t, self.j1, self.j2)


def split_valid(records: Iterable[SpectrumRecord]):
    """Partition into (valid, flagged) by the one-mode-per-cavity rule."""
    valid, flagged = [], []
    for r in records:
        (valid if r.valid else flagged).append(r)
    return valid, flagged


def separation_stats(records: Sequence[SpectrumRecord]) -> list[SeparationStats]:
    """Population mean and std (divisor N) of every adjacent gap across records.

    Records whose mode count differs from their array size are excluded with
    a warning naming them.
    """
    records = list(records)
    if not records:
        raise ValueError("no spectrum records given")
    sizes = {r.array_size for r in records}
    if len(sizes) > 1:
        raise ValueError(f"records mix array sizes {sorted(sizes)}; analyze one size at a time")
    valid, flagged = split_valid(records)
    if flagged:
        ids = ", ".join(r.array_id for r in flagged)
        warnings.warn(f"excluded {len(flagged)} record(s) whose mode count != array size: {ids}",
                      stacklevel=2)
    if len(valid) < 2:
        raise ValueError(
            f"need at least 2 valid records for a standard deviation, got {len(valid)}")
    if valid[0].array_size < 2:
        raise ValueError("single-cavity records have no separations")
    gaps = np.array([r.gaps for r in valid])
    # sort rows so the reductions do not depend on record order
    gaps = gaps[np.lexsort(gaps.T[::-1])]
    mu = gaps.mean(axis=0)
    sigma = np.sqrt(((gaps - mu) ** 2).mean(axis=0))
    return [SeparationStats(k, float(mu[k]), float(sigma[k]), len(valid))
            for k in range(gaps.shape[1])]


def classify_ratio(ratio: float, threshold: float = DEFAULT_THRESHOLD) -> Regime:
    ref = uncoupled_ratio()
    if ratio < threshold:
        return Regime.COUPLING_DOMINATED
    if abs(ratio - ref) <= DISORDER_BAND * ref:
        return Regime.DISORDER_DOMINATED
    return Regime.AMBIGUOUS


def regime_classify(stats, threshold: float = DEFAULT_THRESHOLD) -> list[Regime]:
    """Classify each gap from its sigma/mu ratio (stats objects or bare ratios)."""
    if not 0.0 < threshold < uncoupled_ratio():
        raise ValueError(f"threshold must lie in (0, {uncoupled_ratio():.6f}), got {threshold}")
    return [classify_ratio(s.ratio if isinstance(s, SeparationStats) else float(s), threshold)
            for s in stats]


def dominant_separations(sweep: SweepTable, factor: float = 2.0) -> list[int]:
    """Gaps of the least-disordered row that are at least ``factor`` x the median gap.

    A lone gap is dominant by definition. Returned largest first.
    """
    row = min(sweep.rows, key=lambda r: r.sigma_f)
    gaps = np.asarray(row.mean_seps, dtype=float)
    if gaps.size == 0:
        return []
    if gaps.size == 1:
        return [0] if gaps[0] > 0 else []
    med = float(np.median(gaps))
    picked = [k for k in range(gaps.size) if gaps[k] > 0 and gaps[k] >= factor * med]
    return sorted(picked, key=lambda k: (-gaps[k], k))


def nelder_mead(func: Callable[[np.ndarray], float], x0, step=None,
                xtol: float = SIMPLEX_XTOL, max_iter: int = MAX_ITER):
    """Minimize ``func`` with the Nelder-Mead simplex.

    Stops when the simplex diameter (largest vertex-to-vertex distance) drops
    below ``xtol`` or after ``max_iter`` iterations. Returns
    ``(x, fx, iterations, converged)``.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if step is None:
        step = np.where(x0 != 0, 0.1 * np.abs(x0), 0.05)
    step = np.broadcast_to(np.asarray(step, dtype=float), (dim,))
    simplex = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += step[i]
        simplex.append(x)
    values = [func(x) for x in simplex]

    def diameter():
        pts = np.array(simplex)
        return float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)))

    iterations = 0
    converged = False
    while True:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if diameter() < xtol:
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = func(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = func(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (worst - centroid)
        fc = func(xc)
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue
        best = simplex[0]
        simplex = [best] + [best + 0.5 * (x - best) for x in simplex[1:]]
        values = [values[0]] + [func(x) for x in simplex[1:]]
    return simplex[0], values[0], iterations, converged


_PARAMS = ("t", "j1", "j2", "sigma_f")


def fit_parameters(stats: Sequence[SeparationStats], graph: CouplingGraph,
                   init: CouplingSet, sigma_f: float, trials: int = SEARCH_TRIALS,
                   master_seed: int = 0, fit_j2: bool = True,
                   final_trials: int = DEFAULT_TRIALS, max_iter: int = MAX_ITER,
                   xtol: float = SIMPLEX_XTOL, threads: int = 1) -> FitResult:
    """Least-squares match of simulated to observed gap means and stds.

    The objective is ``sum_k (mu_sim - mu_obs)^2 + (sigma_sim - sigma_obs)^2``
    over the gaps present in ``stats``. Every evaluation reuses the same
    standard normals (common random numbers), so it is deterministic. Negative
    trial values are clamped to 0 and reported in ``FitResult.clamped``.
    """
    stats = list(stats)
    if not stats:
        raise ValueError("no separation statistics to fit")
    if trials < 1000:
        raise ValueError(f"fit needs trials >= 1000, got {trials}")
    n = graph.n_sites
    for s in stats:
        if not 0 <= s.index < n - 1:
            raise ValueError(f"gap index {s.index} out of range for a {n}-cavity array")
    idx = np.array([s.index for s in stats])
    mu_obs = np.array([s.mu for s in stats])
    sd_obs = np.array([s.sigma for s in stats])
    if not (np.all(np.isfinite(mu_obs)) and np.all(np.isfinite(sd_obs))):
        raise ValueError("observed statistics must be finite")

    free = [p for p in _PARAMS if fit_j2 or p != "j2"]
    start = {"t": init.t, "j1": init.j1, "j2": init.j2, "sigma_f": sigma_f}
    z_search = trial_normals(master_seed, trials, n)
    clamped: set[str] = set()

    def unpack(x):
        p = dict(start)
        p.update(zip(free, (float(v) for v in x)))
        return p

    def physical(p):
        out = {}
        for k, v in p.items():
            if v < 0:
                clamped.add(k)
            out[k] = max(v, 0.0)
        return out

    def simulate(p, z):
        ens = ensemble_from_normals(graph, CouplingSet(p["t"], p["j1"], p["j2"]),
                                    p["sigma_f"], z, master_seed, threads)
        return ens.mean_seps[idx], ens.std_seps[idx]

    def objective(x):
        mu, sd = simulate(physical(unpack(x)), z_search)
        value = float(np.sum((mu - mu_obs) ** 2 + (sd - sd_obs) ** 2))
        if not math.isfinite(value):
            raise FloatingPointError(f"non-finite objective at {dict(zip(free, x))}")
        return value

    x0 = np.array([start[p] for p in free])
    xbest, _, iterations, converged = nelder_mead(objective, x0, xtol=xtol, max_iter=max_iter)
    clamped.clear()
    best = physical(unpack(xbest))
    z_final = z_search if final_trials == trials else trial_normals(master_seed, final_trials, n)
    mu, sd = simulate(best, z_final)
    objective_final = float(np.sum((mu - mu_obs) ** 2 + (sd - sd_obs) ** 2))
    if clamped:
        log.info("fit clamped negative parameter(s) to 0: %s", ", ".join(sorted(clamped)))
    return FitResult(
        t=best["t"], j1=best["j1"], j2=best["j2"], sigma_f=best["sigma_f"],
        objective=objective_final, iterations=iterations, converged=converged,
        residuals=[(int(k), float(m - mo), float(s - so))
                   for k, m, mo, s, so in zip(idx, mu, mu_obs, sd, sd_obs)],
        clamped=tuple(sorted(clamped)), trials=final_trials,
    )


def records_from_spectra(spectra: np.ndarray, prefix: str = "sim") -> list[SpectrumRecord]:
    """Wrap rows of sorted simulated spectra as records."""
    spectra = np.asarray(spectra, dtype=float)
    return [SpectrumRecord(f"{prefix}{i:04d}", spectra.shape[1], tuple(row))
            for i, row in enumerate(spectra)]
