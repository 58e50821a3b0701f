"""Long-time averages and fluctuations of observables under kicked evolution.

For a non-degenerate quasi-energy spectrum the stroboscopic time average of
an observable relaxes to its diagonal-ensemble average; with non-degenerate
gaps the temporal variance is bounded by ||A A^dag|| * Tr rho_mc^2.  This
module evaluates both sides of those statements numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .floquet import FloquetSpectrum, evolve_one_kick
from .phase_space import MomentumWavefunction, RotorConfig, make_basis_state

__all__ = [
    "Observable",
    "AveragingReport",
    "identity_observable",
    "cos_theta_observable",
    "momentum_sq_observable",
    "cell_projector_observable",
    "observable_spread",
    "stroboscopic_expectations",
    "diagonal_ensemble_average",
    "fluctuation_report",
]


@dataclass(frozen=True)
class Observable:
    """Hermitian matrix in the momentum basis of the torus window n = 1..N."""

    matrix: np.ndarray
    label: str

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("observable must be a square matrix")
        if float(np.abs(mat - mat.conj().T).max()) > 1e-12:
            raise ValueError(f"observable {self.label!r} is not Hermitian within 1e-12")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class AveragingReport:
    """Time average vs diagonal-ensemble average, and the fluctuation bound.

    bound = ||A A^dag|| * Tr rho_mc^2 with rho_mc the diagonal ensemble;
    fluctuation_sq is the plain variance of the stroboscopic expectation
    series.
    """

    time_average: float
    diagonal_average: float
    fluctuation_sq: float
    bound: float
    trace_rho_mc_sq: float

    def __post_init__(self):
        if self.fluctuation_sq < -1e-10:
            raise ValueError(f"negative fluctuation variance {self.fluctuation_sq!r}")
        if not 0.0 < self.trace_rho_mc_sq <= 1.0 + 1e-9:
            raise ValueError(f"Tr rho_mc^2 = {self.trace_rho_mc_sq!r} outside (0, 1]")


def identity_observable(dim: int) -> Observable:
    return Observable(np.eye(dim, dtype=complex), "identity")


def cos_theta_observable(dim: int) -> Observable:
    """cos(theta) in the momentum basis: 1/2 on the two off-diagonals."""
    mat = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim - 1)
    mat[idx, idx + 1] = 0.5
    mat[idx + 1, idx] = 0.5
    return Observable(mat, "cos_theta")


def momentum_sq_observable(config: RotorConfig) -> Observable:
    """l^2 truncated to the torus window: diag((n*hbar_eff)^2), n = 1..N."""
    n = 1 + np.arange(config.N)
    return Observable(np.diag((n * config.hbar_eff) ** 2).astype(complex), "l_sq")


def cell_projector_observable(config: RotorConfig, X: int, P: int) -> Observable:
    """Rank-one projector onto the Planck-cell state (X, P), P in [0, ell)."""
    if not 0 <= P < config.ell:
        raise ValueError(f"P must lie in [0, {config.ell}) on the torus window, got {P}")
    cell = make_basis_state(X, P, config)
    amps = np.zeros(config.N, dtype=complex)
    amps[cell.n_min - 1 : cell.n_min - 1 + config.ell] = cell.amplitudes
    return Observable(np.outer(amps, amps.conj()), f"cell_projector_{X}_{P}")


def observable_spread(A: Observable) -> float:
    """Spectral spread lambda_max - lambda_min of the observable."""
    w = np.linalg.eigvalsh(A.matrix)
    return float(w[-1] - w[0])


def stroboscopic_expectations(
    psi0: MomentumWavefunction, A: Observable, config: RotorConfig, T: int
) -> np.ndarray:
    """<A> immediately after each of T kicks, starting from psi0."""
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if psi0.dim != A.dim:
        raise ValueError(f"state dim {psi0.dim} does not match observable dim {A.dim}")
    psi = psi0
    out = np.empty(T)
    for t in range(T):
        psi = evolve_one_kick(psi, config)
        out[t] = float(np.vdot(psi.amplitudes, A.matrix @ psi.amplitudes).real)
    return out


def _floquet_coefficients(psi0: MomentumWavefunction, spectrum: FloquetSpectrum) -> np.ndarray:
    if spectrum.eigenvectors is None:
        raise ValueError("spectrum must carry eigenvectors")
    if spectrum.eigenvectors.shape[0] != psi0.dim:
        raise ValueError("state dim does not match eigenvector dim")
    return spectrum.eigenvectors.conj().T @ psi0.amplitudes


def diagonal_ensemble_average(
    psi0: MomentumWavefunction, A: Observable, spectrum: FloquetSpectrum
) -> float:
    """sum_m |c_m|^2 A_mm over Floquet states, with c_m = <phi_m|psi0>."""
    c = _floquet_coefficients(psi0, spectrum)
    V = spectrum.eigenvectors
    diag_A = np.einsum("im,im->m", V.conj(), A.matrix @ V).real
    return float(np.dot(np.abs(c) ** 2, diag_A))


def fluctuation_report(
    psi0: MomentumWavefunction,
    A: Observable,
    config: RotorConfig,
    spectrum: FloquetSpectrum,
    T: int,
) -> AveragingReport:
    """Evolve T kicks and compare the time series with the ensemble predictions."""
    series = stroboscopic_expectations(psi0, A, config, T)
    c = _floquet_coefficients(psi0, spectrum)
    trace_rho_sq = float(np.sum(np.abs(c) ** 4))
    # A is Hermitian, so ||A A^dag|| is the squared largest |eigenvalue|
    a_norm_sq = float(np.max(np.abs(np.linalg.eigvalsh(A.matrix))) ** 2)
    return AveragingReport(
        time_average=float(series.mean()),
        diagonal_average=diagonal_ensemble_average(psi0, A, spectrum),
        fluctuation_sq=float(series.var()),
        bound=a_norm_sq * trace_rho_sq,
        trace_rho_mc_sq=trace_rho_sq,
    )
