"""``cavityarray`` command line: sweep, ensemble, molecule, analyze, fit.

Options may also come from a ``key = value`` config file (``--config``); flags
on the command line win. Config keys are the long flag names with dashes
replaced by underscores (``sigma_grid = 0:5:0.25``).
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from cavityarray import __version__
from cavityarray.disorder import (
    DisorderModel,
    SweepTable,
    fmt,
    run_ensemble,
    sigma_grid_from_range,
    sweep_sigma,
)
from cavityarray.eigensolver import EigenConvergenceError
from cavityarray.estimation import (
    DEFAULT_THRESHOLD,
    SEARCH_TRIALS,
    SeparationStats,
    fit_parameters,
    regime_classify,
    separation_stats,
    split_valid,
)
from cavityarray.lattice import CouplingSet, build_grid_geometry
from cavityarray.molecule import (
    MoleculeParams,
    mean_no_coupling,
    mean_weak_disorder,
    molecule_mean_separation,
    molecule_std_separation,
    std_no_coupling,
    std_weak_disorder,
)
from cavityarray import tables

log = logging.getLogger("cavityarray")

COMMANDS = ("sweep", "ensemble", "molecule", "analyze", "fit")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    command: str = "sweep"
    rows: int = 2
    cols: int = 2
    both_diagonals: bool = False
    t: float = 1.2
    j1: float = 0.8
    j2: float = 0.0
    sigma_f: float = 0.2
    sigma_grid: str = "0:5:0.25"
    j_grid: str = "0:1:0.5"
    trials: int = 10000
    search_trials: int = SEARCH_TRIALS
    seed: int = 0
    input: str = ""
    output: str = "."
    threads: int = 1
    units: str = "THz"
    threshold: float = DEFAULT_THRESHOLD
    freeze_j2: bool = False
    max_iter: int = 500
    figures: bool = False

    # fields that cannot change any output value
    _NOT_RECORDED = ("output", "threads", "figures")

    def metadata(self) -> dict:
        meta = {"cavityarray": __version__}
        for f in fields(self):
            if f.name not in self._NOT_RECORDED:
                meta[f.name] = getattr(self, f.name)
        return meta


_INT = ("rows", "cols", "trials", "search_trials", "seed", "threads", "max_iter")
_FLOAT = ("t", "j1", "j2", "sigma_f", "threshold")
_BOOL = ("both_diagonals", "freeze_j2", "figures")


def _coerce(name: str, value):
    if isinstance(value, str):
        value = value.strip()
    try:
        if name in _INT:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        if name in _FLOAT:
            return float(value)
        if name in _BOOL:
            if isinstance(value, bool):
                return value
            low = str(value).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(name, f"invalid value {value!r}") from None
    return str(value)


def read_config_file(path) -> dict:
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    known = {f.name for f in fields(RunConfig)} - {"command"}
    out = {}
    for key, value in parser["run"].items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(key, f"unknown key in config file {path}")
        out[key] = value
    return out


def parse_grid(name: str, spec: str) -> np.ndarray:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            parts = [float(p) for p in spec.split(":")]
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            grid = sigma_grid_from_range(*parts)
        else:
            grid = np.array([float(p) for p in spec.split(",") if p.strip()])
    except ValueError as exc:
        raise ConfigError(name, f"bad grid {spec!r}: {exc}") from None
    if grid.size == 0:
        raise ConfigError(name, "grid is empty")
    if np.any(~np.isfinite(grid)) or np.any(grid < 0):
        raise ConfigError(name, "grid values must be finite and >= 0")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(name, "grid must be strictly increasing")
    return grid


def validate(cfg: RunConfig) -> None:
    if cfg.rows < 1:
        raise ConfigError("rows", f"must be >= 1, got {cfg.rows}")
    if cfg.cols < 1:
        raise ConfigError("cols", f"must be >= 1, got {cfg.cols}")
    for name in ("t", "j1", "j2", "sigma_f"):
        v = getattr(cfg, name)
        if not math.isfinite(v) or v < 0:
            raise ConfigError(name, f"must be finite and >= 0, got {v}")
    if cfg.trials < 1:
        raise ConfigError("trials", f"must be >= 1, got {cfg.trials}")
    if cfg.threads < 1:
        raise ConfigError("threads", f"must be >= 1, got {cfg.threads}")
    if cfg.seed < 0:
        raise ConfigError("seed", f"must be >= 0, got {cfg.seed}")
    if cfg.units not in ("THz", "nm"):
        raise ConfigError("units", f"must be THz or nm, got {cfg.units!r}")
    if cfg.command in ("sweep", "molecule"):
        parse_grid("sigma_grid", cfg.sigma_grid)
    if cfg.command == "molecule":
        parse_grid("j_grid", cfg.j_grid)
    if cfg.command in ("analyze", "fit"):
        if not cfg.input:
            raise ConfigError("input", "an input file is required")
        if not Path(cfg.input).is_file():
            raise ConfigError("input", f"no such file: {cfg.input}")
    if cfg.command == "analyze" and not 0 < cfg.threshold < math.sqrt(math.pi / 2 - 1):
        raise ConfigError("threshold", f"must lie in (0, 0.7555), got {cfg.threshold}")
    if cfg.command == "fit":
        if cfg.search_trials < 1000:
            raise ConfigError("search_trials", f"must be >= 1000, got {cfg.search_trials}")
        if cfg.trials < 1000:
            raise ConfigError("trials", f"must be >= 1000 for a fit, got {cfg.trials}")
        if cfg.max_iter < 1:
            raise ConfigError("max_iter", f"must be >= 1, got {cfg.max_iter}")


def _with_meta(cfg: RunConfig, body: str) -> str:
    return tables.metadata_block(cfg.metadata()) + body


def _graph(cfg: RunConfig):
    return build_grid_geometry(cfg.rows, cfg.cols, cfg.both_diagonals)


def _couplings(cfg: RunConfig) -> CouplingSet:
    return CouplingSet(cfg.t, cfg.j1, cfg.j2)


def cmd_sweep(cfg: RunConfig) -> dict:
    grid = parse_grid("sigma_grid", cfg.sigma_grid)
    sweep = sweep_sigma(_graph(cfg), _couplings(cfg), grid, cfg.trials, cfg.seed, cfg.threads)
    out = Path(cfg.output)
    files = {
        out / "sweep.csv": _with_meta(cfg, sweep.to_csv()),
        out / "sweep_plot.csv": _with_meta(cfg, tables.sweep_plot_csv(sweep)),
    }
    tables.write_outputs(files)
    if cfg.figures:
        from cavityarray.plotting import plot_sweep

        plot_sweep(sweep, out / "sweep.png", f"{cfg.rows}x{cfg.cols} array")
    print(f"wrote {len(sweep)} sweep rows to {out / 'sweep.csv'}")
    return files


def cmd_ensemble(cfg: RunConfig) -> dict:
    stats = run_ensemble(_graph(cfg), _couplings(cfg), DisorderModel(cfg.sigma_f), cfg.trials,
                         cfg.seed, cfg.threads)
    out = Path(cfg.output)
    files = {out / "ensemble.csv": _with_meta(cfg, SweepTable([stats]).to_csv())}
    tables.write_outputs(files)
    seps = " ".join(f"{m:.4f}+-{s:.4f}" for m, s in zip(stats.mean_seps, stats.std_seps))
    print(f"sigma_f={cfg.sigma_f:g} THz, {stats.trials} trials, separations (THz): {seps}")
    return files


MOLECULE_HEADER = ["j", "sigma_f", "mu", "sigma", "ratio", "mu_weak_disorder",
                   "mu_no_coupling", "sigma_weak_disorder", "sigma_no_coupling"]


def molecule_rows(j_grid, sigma_grid) -> list[dict]:
    rows = []
    for j in j_grid:
        for s in sigma_grid:
            p = MoleculeParams(float(j), float(s))
            mu = molecule_mean_separation(p)
            sd = molecule_std_separation(p)
            rows.append({
                "j": p.j, "sigma_f": p.sigma_f, "mu": mu, "sigma": sd,
                "ratio": sd / mu if mu > 0 else math.nan,
                "mu_weak_disorder": mean_weak_disorder(p),
                "mu_no_coupling": mean_no_coupling(p),
                "sigma_weak_disorder": std_weak_disorder(p),
                "sigma_no_coupling": std_no_coupling(p),
            })
    return rows


def cmd_molecule(cfg: RunConfig) -> dict:
    rows = molecule_rows(parse_grid("j_grid", cfg.j_grid),
                         parse_grid("sigma_grid", cfg.sigma_grid))
    body = ",".join(MOLECULE_HEADER) + "\n"
    body += "".join(",".join(fmt(r[k]) for k in MOLECULE_HEADER) + "\n" for r in rows)
    out = Path(cfg.output)
    files = {out / "molecule.csv": _with_meta(cfg, body)}
    tables.write_outputs(files)
    if cfg.figures:
        from cavityarray.plotting import plot_molecule

        plot_molecule(rows, out / "molecule.png")
    print(f"wrote {len(rows)} molecule rows to {out / 'molecule.csv'}")
    return files


def _load_records(cfg: RunConfig):
    try:
        return tables.read_spectra(cfg.input, cfg.units)
    except tables.TableError as exc:
        raise ConfigError("input", str(exc)) from None


def cmd_analyze(cfg: RunConfig) -> dict:
    records = _load_records(cfg)
    by_size: dict[int, list] = {}
    for r in records:
        by_size.setdefault(r.array_size, []).append(r)
    out = Path(cfg.output)
    files = {}
    report = []
    results = {}
    for size in sorted(by_size):
        valid, flagged = split_valid(by_size[size])
        for r in flagged:
            report.append(f"  excluded {r.array_id}: {len(r.mode_frequencies)} modes "
                          f"for a {size}-cavity array")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                stats = separation_stats(by_size[size])
            except ValueError as exc:
                raise ConfigError("input", f"array size {size}: {exc}") from None
        regimes = regime_classify(stats, cfg.threshold)
        results[size] = stats
        files[out / f"stats_n{size}.csv"] = _with_meta(cfg, tables.stats_csv(stats))
        files[out / f"regimes_n{size}.csv"] = _with_meta(cfg, tables.regimes_csv(stats, regimes))
        report.append(f"array size {size}: {len(valid)} records")
        for s, reg in zip(stats, regimes):
            report.append(f"  gap {s.index + 1}: mu={s.mu:.4f} THz sigma={s.sigma:.4f} THz "
                          f"sigma/mu={s.ratio:.3f} -> {reg.value}")
    tables.write_outputs(files)
    if cfg.figures:
        from cavityarray.plotting import plot_ratios

        for size, stats in results.items():
            plot_ratios(stats, out / f"regimes_n{size}.png", cfg.threshold, f"{size} cavities")
    print("\n".join(report))
    return files


def _load_fit_input(cfg: RunConfig, n_sites: int) -> list[SeparationStats]:
    rows = tables.read_csv_rows(cfg.input)
    if rows and "gap_index" in rows[0]:
        try:
            return tables.read_stats(cfg.input)
        except tables.TableError as exc:
            raise ConfigError("input", str(exc)) from None
    records = _load_records(cfg)
    sizes = {r.array_size for r in records}
    if sizes != {n_sites}:
        raise ConfigError("input", f"array size(s) {sorted(sizes)} do not match the "
                                   f"{cfg.rows}x{cfg.cols} geometry")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return separation_stats(records)
        except ValueError as exc:
            raise ConfigError("input", str(exc)) from None


def cmd_fit(cfg: RunConfig) -> dict:
    graph = _graph(cfg)
    stats = _load_fit_input(cfg, graph.n_sites)
    for s in stats:
        if not 0 <= s.index < graph.n_sites - 1:
            raise ConfigError("input", f"gap index {s.index + 1} out of range for "
                                       f"{graph.n_sites} cavities")
    result = fit_parameters(stats, graph, _couplings(cfg), cfg.sigma_f, cfg.search_trials,
                            cfg.seed, fit_j2=not cfg.freeze_j2, final_trials=cfg.trials,
                            max_iter=cfg.max_iter, threads=cfg.threads)
    body = "parameter,value\n"
    for key in ("t", "j1", "j2", "sigma_f", "objective"):
        body += f"{key},{fmt(getattr(result, key))}\n"
    body += f"iterations,{result.iterations}\nconverged,{str(result.converged).lower()}\n"
    body += f"clamped,{' '.join(result.clamped)}\n"
    resid = "gap_index,mu_residual_THz,sigma_residual_THz\n"
    resid += "".join(f"{k + 1},{fmt(dm)},{fmt(ds)}\n" for k, dm, ds in result.residuals)
    out = Path(cfg.output)
    files = {out / "fit.csv": _with_meta(cfg, body),
             out / "fit_residuals.csv": _with_meta(cfg, resid)}
    tables.write_outputs(files)
    print(f"t={result.t:.4f} j1={result.j1:.4f} j2={result.j2:.4f} "
          f"sigma_f={result.sigma_f:.4f} THz")
    print(f"objective={result.objective:.3e} THz^2  iterations={result.iterations}  "
          f"converged={result.converged}")
    if result.clamped:
        print(f"clamped to 0: {', '.join(result.clamped)}")
    for k, dm, ds in result.residuals:
        print(f"  gap {k + 1}: mu residual {dm:+.4f} THz, sigma residual {ds:+.4f} THz")
    return files


HANDLERS = {"sweep": cmd_sweep, "ensemble": cmd_ensemble, "molecule": cmd_molecule,
            "analyze": cmd_analyze, "fit": cmd_fit}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("geometry and couplings")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--rows", help="grid rows (default 2)")
    g.add_argument("--cols", help="grid columns (default 2)")
    g.add_argument("--both-diagonals", action="store_const", const=True,
                   help="couple both grid diagonals, not only (r,c)-(r+1,c+1)")
    g.add_argument("--t", help="diagonal coupling t in THz (default 1.2)")
    g.add_argument("--j1", help="vertical coupling in THz (default 0.8)")
    g.add_argument("--j2", help="horizontal coupling in THz (default 0)")
    r = common.add_argument_group("disorder and sampling")
    r.add_argument("--sigma-f", help="disorder std in THz (default 0.2)")
    r.add_argument("--sigma-grid", help="start:stop:step or a,b,c in THz (default 0:5:0.25)")
    r.add_argument("--trials", help="Monte Carlo trials (default 10000)")
    r.add_argument("--seed", help="master seed (default 0)")
    r.add_argument("--threads", help="worker threads; outputs do not depend on it (default 1)")
    o = common.add_argument_group("files")
    o.add_argument("--input", help="input CSV (analyze, fit)")
    o.add_argument("--output", help="output directory (default .)")
    o.add_argument("--units", choices=("THz", "nm"), help="units of input frequencies")
    o.add_argument("--figures", action="store_const", const=True,
                   help="also render PNG figures next to the CSV files")
    o.add_argument("-v", "--verbose", action="store_const", const=True)

    parser = argparse.ArgumentParser(prog="cavityarray", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    def command(name, text):
        return sub.add_parser(name, parents=[common], help=text,
                              argument_default=argparse.SUPPRESS)

    command("sweep", "ensemble statistics over a sigma_f grid")
    command("ensemble", "ensemble statistics at one sigma_f")
    mol = command("molecule", "two-cavity splitting statistics")
    mol.add_argument("--j-grid", help="coupling grid in THz (default 0:1:0.5)")
    ana = command("analyze", "separation statistics of spectra")
    ana.add_argument("--threshold", help="sigma/mu below which a gap is coupling dominated")
    fit = command("fit", "fit couplings and disorder to data")
    fit.add_argument("--search-trials", help="trials per objective evaluation (default 2000)")
    fit.add_argument("--freeze-j2", action="store_const", const=True, help="hold j2 at --j2")
    fit.add_argument("--max-iter", help="simplex iteration cap (default 500)")
    return parser


def resolve_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    verbose = args.pop("verbose", False)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    merged: dict = {}
    config_path = args.pop("config", None)
    if config_path:
        merged.update(read_config_file(config_path))
    merged.update(args)
    values = {}
    for key, value in merged.items():
        values[key] = value if key == "command" else _coerce(key, value)
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def main(argv=None) -> int:
    try:
        cfg = resolve_config(argv)
        HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"cavityarray: error: --{exc.field.replace('_', '-')}: "
              f"{str(exc).split(': ', 1)[1]}", file=sys.stderr)
        return 2
    except (EigenConvergenceError, FloatingPointError) as exc:
        print(f"cavityarray: error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"cavityarray: error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
