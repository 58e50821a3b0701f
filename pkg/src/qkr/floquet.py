"""One-kick Floquet operator of the kicked rotor.

The operator factorizes into a free phase (diagonal in momentum) followed by
a kick phase (diagonal in angle), so a single FFT-based kernel serves both
state propagation and exact construction of the momentum-periodic N x N
unitary.  A truncated momentum-window form with Bessel-function matrix
elements supports arbitrary (including irrational-multiple-of-4*pi) values
of hbar_eff, where no momentum periodicity exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.special import jv as _scipy_jv

from .phase_space import MomentumWavefunction, RotorConfig

__all__ = [
    "FloquetMatrix",
    "FloquetSpectrum",
    "WindowedSpectrum",
    "bessel_j",
    "build_windowed_matrix",
    "build_periodic_matrix",
    "evolve_one_kick",
    "quasi_energy_spectrum",
    "windowed_spectrum_around",
    "localization_window_dim",
]

TWO_PI = 2.0 * np.pi

# 1/i**k as a function of k mod 4
_INV_I_POW = np.array([1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j])

_MAX_BESSEL_ORDER = 10**6
_MAX_BESSEL_ARG = 1e8


@dataclass(frozen=True)
class FloquetMatrix:
    """Dense one-kick transition matrix on a momentum window.

    `periodic` marks the exact momentum-folded N x N unitary; otherwise the
    matrix is a plain window truncation (approximately unitary away from the
    window edges, by Bessel decay).  n_min is the first momentum quantum
    number of the window.
    """

    entries: np.ndarray
    periodic: bool
    n_min: int

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "n_min", int(self.n_min))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class FloquetSpectrum:
    """Quasi-energies in [0, 2*pi), sorted ascending, with optional eigenvectors.

    Columns of `eigenvectors` satisfy U v = exp(-i E) v.
    """

    quasi_energies: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.quasi_energies.size


@dataclass(frozen=True)
class WindowedSpectrum:
    """Quasi-energies of a momentum-window matrix, ranked by locality.

    States are ordered by their mean momentum distance <|n - k0|>, so the
    first L entries are the L Floquet states closest to the centre momentum.
    The mean distance, not the centre of mass, is the rank key: the one-kick
    operator commutes with momentum parity n -> -n, so for a window centred
    on k0 = 0 the eigenstates are parity doublets whose centres of mass all
    collapse to ~0 while <|n|> still measures how far out they live.
    """

    quasi_energies: np.ndarray
    momentum_centers: np.ndarray
    center_distances: np.ndarray
    k0: int
    n_min: int

    @property
    def dim(self) -> int:
        return self.quasi_energies.size


def bessel_j(order: int, x: float) -> float:
    """First-kind Bessel function of integer order.

    Negative orders follow J_{-n}(x) = (-1)^n J_n(x).  Raises
    ArithmeticError if the evaluation does not come back finite.
    """
    order = int(order)
    x = float(x)
    if abs(order) > _MAX_BESSEL_ORDER:
        raise ValueError(f"|order| must not exceed {_MAX_BESSEL_ORDER}, got {order}")
    if not 0.0 <= x <= _MAX_BESSEL_ARG:
        raise ValueError(f"x must lie in [0, {_MAX_BESSEL_ARG:g}], got {x!r}")
    val = float(_scipy_jv(order, x))
    if not math.isfinite(val):
        raise ArithmeticError(f"Bessel evaluation not finite at order={order}, x={x!r}")
    return val


def _free_phases(n: np.ndarray, hbar_eff: float) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return np.exp(-0.5j * hbar_eff * n * n)


def _kick_phases(dim: int, K: float, hbar_eff: float) -> np.ndarray:
    theta = TWO_PI * np.arange(dim) / dim
    return np.exp(-1j * (K / hbar_eff) * np.cos(theta))


def _one_kick_kernel(amps: np.ndarray, n_min: int, K: float, hbar_eff: float) -> np.ndarray:
    """Free phase in momentum, then kick phase on the dim-point angle grid.

    Works on a vector or on the columns of a matrix.  The window twist
    exp(i n_min theta_j) cancels around the diagonal kick factor, so the
    plain FFT pair is exact for any n_min.
    """
    dim = amps.shape[0]
    shape = (dim,) + (1,) * (amps.ndim - 1)
    n = n_min + np.arange(dim)
    out = amps * _free_phases(n, hbar_eff).reshape(shape)
    out = np.fft.ifft(out, axis=0)
    out *= _kick_phases(dim, K, hbar_eff).reshape(shape)
    return np.fft.fft(out, axis=0)


def _windowed_matrix(hbar_eff: float, K: float, n_min: int, dim: int) -> FloquetMatrix:
    """U_{m,n} = J_{m-n}(K/hbar_eff)/i^{m-n} * exp(-i n^2 hbar_eff/2) on a window."""
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    x = K / hbar_eff
    if not 0.0 <= x <= _MAX_BESSEL_ARG:
        raise ValueError(f"K/hbar_eff = {x!r} outside the supported Bessel range")
    orders = np.arange(-(dim - 1), dim)
    jvals = _scipy_jv(orders, x)
    if not np.all(np.isfinite(jvals)):
        raise ArithmeticError(f"Bessel evaluation not finite for K/hbar_eff = {x!r}")
    kick = jvals * _INV_I_POW[orders % 4]
    col = kick[dim - 1 :]        # m - n = 0 .. dim-1
    row = kick[dim - 1 :: -1]    # m - n = 0 .. -(dim-1)
    entries = sla.toeplitz(col, row)
    entries *= _free_phases(n_min + np.arange(dim), hbar_eff)[None, :]
    return FloquetMatrix(entries, periodic=False, n_min=n_min)


def build_windowed_matrix(config: RotorConfig, n_min: int, dim: int) -> FloquetMatrix:
    """Truncated one-kick matrix on momenta n_min .. n_min+dim-1 (no folding)."""
    return _windowed_matrix(config.hbar_eff, config.K, int(n_min), int(dim))


def build_periodic_matrix(config: RotorConfig) -> FloquetMatrix:
    """Exact N x N one-kick unitary on the momentum torus.

    Built by pushing the identity through the FFT split-step kernel on the
    N-point angle grid; this equals the momentum-folded Bessel sum and is
    well defined only for even N (the free phase has period N in n only
    then).
    """
    N = config.N
    if N % 2 != 0:
        raise ValueError(f"momentum periodicity needs even N; got N={N} (ell={config.ell})")
    entries = _one_kick_kernel(np.eye(N, dtype=complex), 1, config.K, config.hbar_eff)
    return FloquetMatrix(entries, periodic=True, n_min=1)


def evolve_one_kick(psi: MomentumWavefunction, config: RotorConfig) -> MomentumWavefunction:
    """Advance a state by one kick period with the FFT split-step kernel.

    A window of exactly N momenta evolves exactly (momentum-periodic mode)
    and matches multiplication by build_periodic_matrix.  Any other window
    size aliases the kick with the window period -- the usual padded-window
    approximation, accurate while edge amplitudes stay negligible.  The norm
    is preserved to machine precision either way.
    """
    amps = _one_kick_kernel(psi.amplitudes, psi.n_min, config.K, config.hbar_eff)
    return MomentumWavefunction(psi.n_min, amps)


def quasi_energy_spectrum(U: FloquetMatrix, want_vectors: bool = False) -> FloquetSpectrum:
    """Dense eigendecomposition: E = (-arg lambda) mod 2*pi, sorted ascending.

    Expects the periodic (unitary) form.  When eigenvectors are requested
    their residuals max_k ||U v_k - exp(-i E_k) v_k|| are checked against
    1e-8.
    """
    if not U.periodic:
        raise ValueError("quasi-energy extraction expects the periodic (unitary) form")
    try:
        if want_vectors:
            lam, vecs = sla.eig(U.entries)
        else:
            lam = sla.eig(U.entries, right=False)
            vecs = None
    except np.linalg.LinAlgError as exc:
        scale = float(np.abs(U.entries).max())
        raise RuntimeError(
            f"eigendecomposition failed for dim={U.dim} (max|entry|={scale:.3e}): {exc}"
        ) from exc
    energies = (-np.angle(lam)) % TWO_PI
    order = np.argsort(energies, kind="stable")
    energies = energies[order]
    if vecs is not None:
        vecs = np.ascontiguousarray(vecs[:, order])
        resid = U.entries @ vecs - vecs * np.exp(-1j * energies)[None, :]
        worst = float(np.linalg.norm(resid, axis=0).max())
        if worst > 1e-8:
            raise RuntimeError(
                f"eigenvector residual {worst:.3e} exceeds 1e-8 (dim={U.dim}); "
                "matrix may be far from unitary"
            )
    return FloquetSpectrum(energies, vecs)


def windowed_spectrum_around(k0: int, window_dim: int, hbar_eff: float, K: float) -> WindowedSpectrum:
    """Diagonalize a momentum window centred on k0 and rank states by locality.

    Returns all window_dim states ordered by <|n - k0|>; take the first L for
    an L-state sample.  Supports arbitrary hbar_eff (no momentum periodicity
    assumed).
    """
    if window_dim < 2:
        raise ValueError(f"window_dim must be at least 2, got {window_dim}")
    k0 = int(k0)
    n_min = k0 - window_dim // 2
    U = _windowed_matrix(hbar_eff, K, n_min, window_dim)
    try:
        lam, vecs = sla.eig(U.entries)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"windowed eigendecomposition failed for dim={window_dim}: {exc}") from exc
    energies = (-np.angle(lam)) % TWO_PI
    weights = np.abs(vecs) ** 2
    weights /= weights.sum(axis=0)
    n = (n_min + np.arange(window_dim)).astype(float)
    centers = n @ weights
    distances = np.abs(n - k0) @ weights
    order = np.argsort(distances, kind="stable")
    return WindowedSpectrum(energies[order], centers[order], distances[order], k0, n_min)


def localization_window_dim(L: int, K: float, hbar_eff: float, buffer_cap: int = 1500) -> int:
    """Window size for selecting L localized states: L plus an edge buffer.

    The buffer scales with (K/hbar_eff)^2, the momentum scale a localized
    state explores, clamped to [256, buffer_cap] to keep dense
    eigendecompositions desk-sized.
    """
    if L < 1:
        raise ValueError(f"L must be positive, got {L}")
    buf = int(round((K / hbar_eff) ** 2))
    buf = min(max(buf, 256), int(buffer_cap))
    return int(L) + buf
