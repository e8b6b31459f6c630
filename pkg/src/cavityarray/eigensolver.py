"""Cyclic Jacobi eigenvalues for small dense real symmetric matrices.

The sweep uses round-robin (tournament) ordering: each step annihilates
``n // 2`` disjoint off-diagonal pairs at once, and every pair (p, q) is
visited exactly once per sweep. Rotations are applied to a whole stack of
matrices with array arithmetic, so a Monte Carlo ensemble is diagonalized in
one call. Matrices leave the active set as soon as they converge, which makes
each result independent of what else was in the stack.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 100
# matrices per Jacobi batch; small enough to stay cache resident
BATCH = 256


class EigenConvergenceError(RuntimeError):
    """Jacobi sweeps hit the cap before the off-diagonal residual fell below tol."""

    def __init__(self, message, residual, index=None):
        super().__init__(message)
        self.residual = residual
        self.index = index


@dataclass(frozen=True)
class EigenSpectrum:
    values: np.ndarray
    iterations: int
    offdiag_residual: float

    def __len__(self):
        return len(self.values)


@lru_cache(maxsize=None)
def round_robin_schedule(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Steps of disjoint (p, q) pairs, p < q, covering every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    steps = []
    for _ in range(m - 1):
        pairs = []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        if pairs:
            p, q = np.array(pairs, dtype=np.intp).T
            steps.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(steps)


def _offdiag_residual(a: np.ndarray) -> np.ndarray:
    """Relative off-diagonal Frobenius norm of each matrix in an (n, n, B) stack."""
    n = a.shape[0]
    sq = a * a
    total = sq.sum(axis=(0, 1))
    off_mask = ~np.eye(n, dtype=bool)
    off = sq[off_mask].sum(axis=0)
    rel = np.sqrt(off)
    nz = total > 0
    rel[nz] /= np.sqrt(total[nz])
    return rel


def _jacobi_step(a: np.ndarray, p: np.ndarray, q: np.ndarray) -> None:
    """Annihilate a[p, q, :] in place for disjoint index vectors p, q.

    ``a`` is laid out (n, n, B) so each gather moves contiguous batch rows.
    """
    app = a[p, p]
    aqq = a[q, q]
    apq = a[p, q]
    live = apq != 0.0
    # a negligible apq sends theta to inf and t to 0, which is the right limit
    with np.errstate(over="ignore", divide="ignore"):
        theta = (aqq - app) / (2.0 * np.where(live, apq, 1.0))
        t = np.where(theta < 0.0, -1.0, 1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    t = np.where(live, t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    rp = a[p]
    rq = a[q]
    a[p] = c[:, None] * rp - s[:, None] * rq
    a[q] = s[:, None] * rp + c[:, None] * rq
    cp = a[:, p]
    cq = a[:, q]
    new_p = c * cp - s * cq
    new_q = s * cp + c * cq
    a[:, p] = new_p
    a[:, q] = new_q
    # mirror the finished columns so the result is exactly symmetric
    a[p] = np.swapaxes(new_p, 0, 1)
    a[q] = np.swapaxes(new_q, 0, 1)
    a[p, p] = app - t * apq
    a[q, q] = aqq + t * apq
    a[p, q] = 0.0
    a[q, p] = 0.0


def eigenvalues_batch(mats, tol: float = DEFAULT_TOL, max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """Eigenvalues of a stack of symmetric matrices, shape (B, n, n).

    Returns ``(values, sweeps, residuals)`` with values sorted ascending along
    the last axis, per-matrix sweep counts and final relative off-diagonal
    residuals. Raises :class:`EigenConvergenceError` naming the first matrix
    that did not converge.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {mats.shape}")
    if mats.shape[1] == 0:
        raise ValueError("matrix dimension must be >= 1")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol!r}")
    bad = ~np.isfinite(mats).all(axis=(1, 2))
    if bad.any():
        raise ValueError(f"matrix {int(np.flatnonzero(bad)[0])} has non-finite entries")
    b = mats.shape[0]
    values = np.empty(mats.shape[:2])
    sweeps = np.zeros(b, dtype=int)
    residuals = np.zeros(b)
    for lo in range(0, b, BATCH):
        hi = min(lo + BATCH, b)
        try:
            values[lo:hi], sweeps[lo:hi], residuals[lo:hi] = _eigenvalues_chunk(
                mats[lo:hi], tol, max_sweeps)
        except EigenConvergenceError as err:
            err.index += lo
            raise EigenConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps for matrix {err.index} "
                f"(residual {err.residual:.3e} > tol {tol:.1e})",
                residual=err.residual, index=err.index) from None
    return values, sweeps, residuals


def _eigenvalues_chunk(mats, tol, max_sweeps):
    b, n = mats.shape[0], mats.shape[1]
    a = np.ascontiguousarray(np.moveaxis(mats, 0, -1))
    diag_idx = (np.arange(n), np.arange(n))
    sweeps = np.zeros(b, dtype=int)
    residuals = _offdiag_residual(a)
    out = np.empty((n, b))
    fin = residuals <= tol
    out[:, fin] = a[diag_idx][:, fin]
    active = np.flatnonzero(~fin)
    work = np.ascontiguousarray(a[:, :, active])

    schedule = round_robin_schedule(n)
    for sweep in range(1, max_sweeps + 1):
        if active.size == 0:
            break
        for p, q in schedule:
            _jacobi_step(work, p, q)
        sweeps[active] = sweep
        res = _offdiag_residual(work)
        residuals[active] = res
        fin = res <= tol
        if fin.any():
            out[:, active[fin]] = work[diag_idx][:, fin]
            work = np.ascontiguousarray(work[:, :, ~fin])
            active = active[~fin]
    if active.size:
        worst = active[0]
        raise EigenConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps for matrix {worst} "
            f"(residual {residuals[worst]:.3e} > tol {tol:.1e})",
            residual=float(residuals[worst]), index=int(worst))
    out = out.T.copy()
    out.sort(axis=1)
    return out, sweeps, residuals


def eigenvalues_symmetric(m, tol: float = DEFAULT_TOL,
                          max_sweeps: int = DEFAULT_MAX_SWEEPS) -> EigenSpectrum:
    """All eigenvalues of one real symmetric matrix, ascending."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    values, sweeps, res = eigenvalues_batch(a[None], tol=tol, max_sweeps=max_sweeps)
    return EigenSpectrum(values[0], int(sweeps[0]), float(res[0]))


def separations(spec) -> np.ndarray:
    """Adjacent gaps of a sorted spectrum (an EigenSpectrum or a plain vector)."""
    values = np.asarray(spec.values if isinstance(spec, EigenSpectrum) else spec, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError(f"need at least 2 eigenvalues for separations, got {values.size}")
    return np.diff(values)
