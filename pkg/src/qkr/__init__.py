"""Quantum kicked rotor toolkit.

Planck-cell phase-space projection, Floquet quasi-energy spectra and their
degeneracy statistics, stroboscopic observable averages, and classical
standard-map ensembles for quantum-classical comparison.
"""

__version__ = "0.1.0"

from .classical import (
    ClassicalEnsemble,
    coarse_grain,
    evolve_ensemble,
    sample_from_cells,
    standard_map_step,
    total_variation,
)
from .ergostats import (
    DegeneracyReport,
    all_gaps,
    circular_gap,
    degeneracy_parameter,
    default_m_grid,
    distance_to_uniform,
    eta_of_spectrum,
    histogram_counts,
    spacing_ratio,
    zeta_of_spectrum,
)
from .floquet import (
    FloquetMatrix,
    FloquetSpectrum,
    WindowedSpectrum,
    bessel_j,
    build_periodic_matrix,
    build_windowed_matrix,
    evolve_one_kick,
    localization_window_dim,
    quasi_energy_spectrum,
    windowed_spectrum_around,
)
from .observables import (
    AveragingReport,
    Observable,
    cell_projector_observable,
    cos_theta_observable,
    diagonal_ensemble_average,
    fluctuation_report,
    identity_observable,
    momentum_sq_observable,
    observable_spread,
    stroboscopic_expectations,
)
from .phase_space import (
    CellDistribution,
    MomentumWavefunction,
    RotorConfig,
    basis_spread_moments,
    embed_on_torus,
    entropy,
    fold_momentum,
    make_basis_state,
    make_seed_state,
    project_to_cells,
    seed_angle_density,
    translate_l,
    translate_theta,
)

__all__ = [name for name in dir() if not name.startswith("_")]
