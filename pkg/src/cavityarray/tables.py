"""CSV readers and writers shared by the command line tools.

Every written file starts with a block of ``# key: value`` lines holding the
resolved run configuration, followed by a plain CSV table.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping

from cavityarray.disorder import SweepTable, fmt
from cavityarray.estimation import Regime, SeparationStats, SpectrumRecord

# speed of light in nm * THz
C_NM_THZ = 299792.458

SPECTRA_HEADER = ["array_id", "array_size", "mode_index", "frequency_THz"]
STATS_HEADER = ["gap_index", "mu_THz", "sigma_THz", "ratio", "count"]


class TableError(ValueError):
    """Malformed input table."""


def metadata_block(meta: Mapping[str, object]) -> str:
    lines = [f"# {key}: {_meta_value(value)}" for key, value in meta.items()]
    return "\n".join(lines) + "\n"


def _meta_value(value) -> str:
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_meta_value(v) for v in value)
    return str(value)


def read_metadata(path) -> dict[str, str]:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
    return meta


def read_csv_rows(path) -> list[dict[str, str]]:
    """Rows of a CSV file, skipping ``#`` comment lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.DictReader(lines))


def read_spectra(path, units: str = "THz") -> list[SpectrumRecord]:
    """Spectra table -> records, one per array id, modes sorted by frequency.

    With ``units="nm"`` the ``frequency_THz`` column holds wavelengths in nm
    and is converted with f = c / wavelength.
    """
    if units not in ("THz", "nm"):
        raise TableError(f"units must be THz or nm, got {units!r}")
    rows = read_csv_rows(path)
    if not rows:
        raise TableError(f"{path}: no spectrum rows")
    missing = [c for c in SPECTRA_HEADER if c not in rows[0]]
    if missing:
        raise TableError(f"{path}: missing column(s) {', '.join(missing)}")
    modes = defaultdict(list)
    sizes: dict[str, int] = {}
    for lineno, row in enumerate(rows, start=2):
        aid = row["array_id"].strip()
        try:
            size = int(row["array_size"])
            index = int(row["mode_index"])
            value = float(row["frequency_THz"])
        except (TypeError, ValueError) as exc:
            raise TableError(f"{path}: bad value in data row {lineno - 1}: {exc}") from None
        if sizes.setdefault(aid, size) != size:
            raise TableError(f"{path}: array {aid!r} listed with sizes {sizes[aid]} and {size}")
        if units == "nm":
            if value <= 0:
                raise TableError(f"{path}: wavelength must be > 0, got {value}")
            value = C_NM_THZ / value
        modes[aid].append((index, value))
    return [SpectrumRecord(aid, sizes[aid], tuple(sorted(v for _, v in modes[aid])))
            for aid in sizes]


def spectra_csv(records: Iterable[SpectrumRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRA_HEADER)
    for r in records:
        for i, f in enumerate(r.mode_frequencies, start=1):
            w.writerow([r.array_id, r.array_size, i, fmt(f)])
    return buf.getvalue()


def stats_csv(stats: Iterable[SeparationStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_HEADER)
    for s in stats:
        w.writerow([s.index + 1, fmt(s.mu), fmt(s.sigma), fmt(s.ratio), s.count])
    return buf.getvalue()


def read_stats(path) -> list[SeparationStats]:
    rows = read_csv_rows(path)
    if not rows:
        raise TableError(f"{path}: no statistics rows")
    try:
        return [SeparationStats(int(r["gap_index"]) - 1, float(r["mu_THz"]),
                                float(r["sigma_THz"]), int(r["count"])) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise TableError(f"{path}: bad statistics table: {exc}") from None


def regimes_csv(stats: Iterable[SeparationStats], regimes: Iterable[Regime]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gap_index", "ratio", "regime"])
    for s, r in zip(stats, regimes):
        w.writerow([s.index + 1, fmt(s.ratio), r.value])
    return buf.getvalue()


def sweep_plot_csv(sweep: SweepTable) -> str:
    """Long-format ``sigma_f,series,value`` table for external plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sigma_f", "series", "value"])
    for row in sweep:
        s = fmt(row.sigma_f)
        for i, v in enumerate(row.mean_eigs, start=1):
            w.writerow([s, f"mean_eig_{i}", fmt(v)])
        for i, v in enumerate(row.mean_seps, start=1):
            w.writerow([s, f"mean_sep_{i}", fmt(v)])
        for i, v in enumerate(row.std_seps, start=1):
            w.writerow([s, f"std_sep_{i}", fmt(v)])
    return buf.getvalue()


def write_outputs(outputs: Mapping[Path, str]) -> None:
    """Write every file or none: each goes to a temp file first, then all are renamed."""
    staged = []
    try:
        for path, text in outputs.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            staged.append((tmp, path))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, path in staged:
        os.replace(tmp, path)
