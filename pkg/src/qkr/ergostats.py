"""Degeneracy statistics of quasi-energy spectra.

A spectrum is compared with the uniform distribution through the binned
squared-L2 distance d(M); over a proper range of bin counts M that distance
grows linearly and its slope, normalized so a fully non-degenerate spectrum
scores exactly 1, measures the amount of degeneracy.  Applied to the
quasi-energies themselves this yields eta (ergodicity diagnostic); applied
to all pairwise circular gaps it yields zeta (mixing diagnostic).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .floquet import FloquetSpectrum

__all__ = [
    "DegeneracyReport",
    "circular_gap",
    "all_gaps",
    "histogram_counts",
    "distance_to_uniform",
    "degeneracy_parameter",
    "default_m_grid",
    "eta_of_spectrum",
    "zeta_of_spectrum",
    "spacing_ratio",
]

TWO_PI = 2.0 * np.pi

# Pairwise gaps are materialized in memory; 4000 values ~ 8e6 gaps ~ 64 MB.
_MAX_GAP_VALUES = 4000


@dataclass(frozen=True)
class DegeneracyReport:
    """Result of the linear d(M) fit.

    parameter is the normalized slope (1 for a non-degenerate input, k for a
    uniform k-fold degenerate one).  at_fixed_m is the single-bin-count
    formula evaluated at M = 200*count as a cross-check.  A fit with
    r_squared < 0.99 signals that the bin-count window sits outside the
    linear regime (a warning is emitted when the report is produced).
    """

    parameter: float
    slope: float
    intercept: float
    r_squared: float
    m_range: tuple[int, int]
    at_fixed_m: float

    @property
    def nonlinear_regime(self) -> bool:
        return self.r_squared < 0.99


def circular_gap(Ei: float, Ej: float) -> float:
    """Circular distance of two quasi-energies on [0, 2*pi): min(d, 2*pi - d)."""
    d = abs(float(Ei) - float(Ej))
    return min(d, TWO_PI - d)


def all_gaps(quasi_energies) -> np.ndarray:
    """All N(N-1)/2 unordered-pair circular gaps of a spectrum."""
    values = np.asarray(quasi_energies, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("need a non-empty 1-D array of quasi-energies")
    if values.size == 1:
        return np.empty(0)
    if values.size > _MAX_GAP_VALUES:
        raise ValueError(
            f"{values.size} values would materialize more than "
            f"{_MAX_GAP_VALUES * (_MAX_GAP_VALUES - 1) // 2} gaps (desk-scale ceiling)"
        )
    d = pdist(values.reshape(-1, 1))
    return np.minimum(d, TWO_PI - d)


def _bin_indices(values: np.ndarray, M: int, domain_length: float) -> np.ndarray:
    idx = np.floor(values * (float(M) / domain_length)).astype(np.int64)
    # a value exactly at the domain end (measure zero) goes to the last bin
    np.minimum(idx, M - 1, out=idx)
    return idx


def _sum_sq_counts(sorted_values: np.ndarray, M: int, domain_length: float) -> float:
    """sum_i b_i**2 over M equal bins, without materializing the count array."""
    idx = _bin_indices(sorted_values, M, domain_length)
    change = np.flatnonzero(idx[1:] != idx[:-1])
    bounds = np.concatenate(([0], change + 1, [idx.size]))
    runs = np.diff(bounds).astype(float)
    return float(np.sum(runs * runs))


def _check_domain(values: np.ndarray, domain_length: float) -> None:
    if domain_length <= 0:
        raise ValueError(f"domain_length must be positive, got {domain_length!r}")
    if values.size and (values.min() < 0.0 or values.max() > domain_length):
        raise ValueError(
            f"values must lie in [0, {domain_length!r}], got range "
            f"[{values.min()!r}, {values.max()!r}]"
        )


def histogram_counts(values, M: int, domain_length: float) -> np.ndarray:
    """Counts over M half-open bins [i*L/M, (i+1)*L/M) covering [0, L)."""
    values = np.asarray(values, dtype=float).ravel()
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    _check_domain(values, domain_length)
    return np.bincount(_bin_indices(values, M, domain_length), minlength=M)


def distance_to_uniform(values, M: int, domain_length: float) -> float:
    """Binned squared-L2 distance to the uniform density: (M/L)*sum (b_i/n)^2 - 1/L."""
    values = np.asarray(values, dtype=float).ravel()
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    _check_domain(values, domain_length)
    ssq = _sum_sq_counts(np.sort(values), M, domain_length)
    n = values.size
    return (M / domain_length) * ssq / (n * n) - 1.0 / domain_length


def default_m_grid(count: int) -> np.ndarray:
    """16 bin counts spanning [50*count, 400*count], bracketing M ~ 200*count."""
    return np.unique(np.round(np.linspace(50 * count, 400 * count, 16)).astype(np.int64))


def degeneracy_parameter(values, count: int, domain_length: float, m_grid=None) -> DegeneracyReport:
    """Normalized slope of d(M) over a grid of bin counts.

    count must equal len(values); domain_length is 2*pi for quasi-energies
    and pi for circular gaps.  The least-squares line through
    (M, d(M)) has slope parameter/(L*count), so the returned parameter is 1
    for a spectrum with no coincidences at bin resolution and k for an
    exactly k-fold degenerate one.
    """
    values = np.asarray(values, dtype=float).ravel()
    if count != values.size:
        raise ValueError(f"count={count} does not match {values.size} values")
    if count < 2:
        raise ValueError("need at least two values")
    _check_domain(values, domain_length)
    m_grid = default_m_grid(count) if m_grid is None else np.asarray(m_grid, dtype=np.int64)
    if m_grid.size < 2 or np.any(m_grid < 1):
        raise ValueError("m_grid needs at least two positive bin counts")

    sorted_values = np.sort(values)
    d = np.empty(m_grid.size)
    for i, M in enumerate(m_grid):
        ssq = _sum_sq_counts(sorted_values, int(M), domain_length)
        d[i] = (M / domain_length) * ssq / (float(count) ** 2) - 1.0 / domain_length

    x = m_grid.astype(float)
    xc = x - x.mean()
    dc = d - d.mean()
    slope = float(np.dot(xc, dc) / np.dot(xc, xc))
    intercept = float(d.mean() - slope * x.mean())
    ss_res = float(np.sum((d - (slope * x + intercept)) ** 2))
    ss_tot = float(np.dot(dc, dc))
    if ss_tot > 0.0:
        r_squared = max(0.0, 1.0 - ss_res / ss_tot)
    else:
        r_squared = 1.0 if ss_res < 1e-30 else 0.0

    at_fixed_m = _sum_sq_counts(sorted_values, 200 * count, domain_length) / count
    report = DegeneracyReport(
        parameter=float(domain_length * count * slope),
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        m_range=(int(m_grid[0]), int(m_grid[-1])),
        at_fixed_m=float(at_fixed_m),
    )
    if report.nonlinear_regime:
        warnings.warn(
            f"d(M) fit r^2 = {r_squared:.4f} < 0.99: bin-count window "
            f"{report.m_range} lies outside the linear regime for this input",
            stacklevel=2,
        )
    return report


def eta_of_spectrum(spectrum: FloquetSpectrum, m_grid=None) -> DegeneracyReport:
    """Degeneracy parameter of the quasi-energies themselves (domain 2*pi)."""
    E = np.asarray(spectrum.quasi_energies, dtype=float)
    return degeneracy_parameter(E, E.size, TWO_PI, m_grid)


def zeta_of_spectrum(spectrum: FloquetSpectrum, m_grid=None) -> DegeneracyReport:
    """Degeneracy parameter of all pairwise circular gaps (domain pi)."""
    E = np.asarray(spectrum.quasi_energies, dtype=float)
    gaps = all_gaps(E)
    return degeneracy_parameter(gaps, E.size * (E.size - 1) // 2, np.pi, m_grid)


def spacing_ratio(spectrum: FloquetSpectrum) -> float:
    """Mean ratio min(s_k, s_{k+1})/max(s_k, s_{k+1}) of consecutive circular spacings.

    Equal spacing gives 1; independent uniform levels give 2 ln 2 - 1; level
    repulsion pushes the mean up, clustering pulls it down.
    """
    E = np.sort(np.asarray(spectrum.quasi_energies, dtype=float))
    if E.size < 10:
        raise ValueError(f"need at least 10 quasi-energies, got {E.size}")
    s = np.diff(E, append=E[0] + TWO_PI)
    s_next = np.roll(s, -1)
    hi = np.maximum(s, s_next)
    lo = np.minimum(s, s_next)
    r = np.divide(lo, hi, out=np.zeros_like(lo), where=hi > 0)
    return float(r.mean())
