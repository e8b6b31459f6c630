"""Spectra of disordered coupled optical cavity arrays.

Tight-binding Hamiltonians for 2-D cavity grids, a batched Jacobi
eigensolver, Monte Carlo disorder ensembles, two-cavity ("photonic
molecule") statistics, and estimation of couplings and disorder from
measured mode frequencies. All frequencies are ordinary frequencies in THz.
"""

from cavityarray.lattice import (
    CavitySite,
    CouplingClass,
    CouplingGraph,
    CouplingSet,
    build_grid_geometry,
    build_hamiltonian,
    classify_pair,
)
from cavityarray.eigensolver import (
    EigenConvergenceError,
    EigenSpectrum,
    eigenvalues_symmetric,
    separations,
)
from cavityarray.disorder import (
    DisorderModel,
    EnsembleStats,
    SweepTable,
    run_ensemble,
    sample_detunings,
    sweep_sigma,
)
from cavityarray.molecule import (
    MoleculeParams,
    molecule_mean_separation,
    molecule_separation,
    molecule_std_separation,
    uncoupled_ratio,
)
from cavityarray.estimation import (
    FitResult,
    Regime,
    SeparationStats,
    SpectrumRecord,
    dominant_separations,
    fit_parameters,
    regime_classify,
    separation_stats,
)

__version__ = "0.1.0"

__all__ = [
    "CavitySite", "CouplingClass", "CouplingGraph", "CouplingSet", "build_grid_geometry",
    "build_hamiltonian", "classify_pair",
    "EigenConvergenceError", "EigenSpectrum", "eigenvalues_symmetric", "separations",
    "DisorderModel", "EnsembleStats", "SweepTable", "run_ensemble", "sample_detunings",
    "sweep_sigma",
    "MoleculeParams", "molecule_mean_separation", "molecule_separation",
    "molecule_std_separation", "uncoupled_ratio",
    "FitResult", "Regime", "SeparationStats", "SpectrumRecord", "dominant_separations",
    "fit_parameters", "regime_classify", "separation_stats",
]
