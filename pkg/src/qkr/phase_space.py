"""Planck-cell quantum phase space for a particle on a ring.

The torus [0, 2*pi) x [0, 2*pi) is tiled with ell x ell cells, each of size
(2*pi/ell) x (ell*hbar_eff) and carrying one orthonormal basis state built
from ell consecutive momentum eigenstates.  Projecting a wave function onto
these cell states is unitary, so the cell weights form a true probability
distribution -- the quantum analogue of a Poincare section -- and support a
phase-space entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RotorConfig",
    "MomentumWavefunction",
    "CellDistribution",
    "make_seed_state",
    "translate_theta",
    "translate_l",
    "make_basis_state",
    "project_to_cells",
    "fold_momentum",
    "entropy",
    "basis_spread_moments",
    "seed_angle_density",
    "embed_on_torus",
]


@dataclass(frozen=True)
class RotorConfig:
    """Grid geometry and kick strength for one rotor.

    ell is the number of cells per phase-space axis.  The momentum dimension
    of one torus period is N = ell**2 and hbar_eff = 2*pi/N, which makes each
    cell an area-2*pi*hbar_eff rectangle of extent (2*pi/ell) x (ell*hbar_eff).

    The momentum-periodic Floquet matrix additionally needs N (hence ell)
    even; that is enforced where the periodicity is actually used, so odd
    ell remains available for pure basis diagnostics.
    """

    ell: int
    K: float = 0.0

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell!r}")
        if not self.K >= 0.0:
            raise ValueError(f"K must be non-negative, got {self.K!r}")
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "K", float(self.K))

    @property
    def N(self) -> int:
        return self.ell * self.ell

    @property
    def hbar_eff(self) -> float:
        return 2.0 * math.pi / self.N

    @property
    def delta_theta(self) -> float:
        return 2.0 * math.pi / self.ell

    @property
    def delta_l(self) -> float:
        return self.ell * self.hbar_eff


@dataclass(frozen=True)
class MomentumWavefunction:
    """Complex amplitudes on a contiguous window of integer momenta.

    The window covers momentum quantum numbers
    n_min .. n_min + len(amplitudes) - 1.  States are normalized;
    construction rejects anything off by more than 1e-12 in total
    probability.  Instances are immutable.
    """

    n_min: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty 1-D array")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: sum |amp|^2 = {norm_sq!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "n_min", int(self.n_min))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_values(self) -> np.ndarray:
        """Momentum quantum numbers carried by the window."""
        return self.n_min + np.arange(self.dim)


@dataclass(frozen=True)
class CellDistribution:
    """Probabilities over Planck cells.

    probabilities[r, x] is the weight of cell (X = x, P = p_min + r).
    `folded` marks distributions whose rows have been reduced modulo ell
    onto the 2*pi momentum torus (one period is exactly ell cell rows).
    """

    ell: int
    p_min: int
    probabilities: np.ndarray
    folded: bool

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != self.ell or probs.shape[0] < 1:
            raise ValueError(f"probabilities must have shape (rows, ell={self.ell})")
        if float(probs.min(initial=0.0)) < -1e-12:
            raise ValueError("negative cell probability")
        np.clip(probs, 0.0, None, out=probs)
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"cell probabilities sum to {total!r}, not 1")
        if self.folded and (probs.shape[0] != self.ell or self.p_min != 0):
            raise ValueError("folded distribution must cover rows 0..ell-1")
        probs.flags.writeable = False
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "p_min", int(self.p_min))

    @property
    def n_rows(self) -> int:
        return self.probabilities.shape[0]

    @property
    def p_values(self) -> np.ndarray:
        """Cell-row indices covered by the distribution."""
        return self.p_min + np.arange(self.n_rows)


def make_seed_state(config: RotorConfig) -> MomentumWavefunction:
    """Equal-weight superposition of momenta 1..ell: the origin cell state."""
    ell = config.ell
    amps = np.full(ell, 1.0 / math.sqrt(ell), dtype=complex)
    return MomentumWavefunction(1, amps)


def translate_theta(psi: MomentumWavefunction, X: int, config: RotorConfig) -> MomentumWavefunction:
    """Rigid angle translation by X*(2*pi/ell): phase exp(-i n X dtheta) per momentum n."""
    phases = np.exp(-1j * (X * config.delta_theta) * psi.n_values)
    return MomentumWavefunction(psi.n_min, psi.amplitudes * phases)


def translate_l(psi: MomentumWavefunction, P: int, config: RotorConfig) -> MomentumWavefunction:
    """Rigid momentum translation by P cells, i.e. P*ell momentum quantum numbers."""
    return MomentumWavefunction(psi.n_min + P * config.ell, psi.amplitudes)


def make_basis_state(X: int, P: int, config: RotorConfig) -> MomentumWavefunction:
    """Cell state |X, P>: the seed cell translated to column X, row P.

    X must lie in [0, ell); P may be any integer row.
    """
    if not 0 <= X < config.ell:
        raise ValueError(f"X must lie in [0, {config.ell}), got {X}")
    return translate_theta(translate_l(make_seed_state(config), P, config), X, config)


def project_to_cells(psi: MomentumWavefunction, config: RotorConfig) -> CellDistribution:
    """Unitary projection of a wave function onto the cell basis.

    The overlap with the ell cells of one momentum block is a single
    ell-point DFT of that block (the row-dependent global phase cancels in
    the probability), so the whole projection costs O(dim log ell) and
    conserves total probability exactly.

    The window must start on a cell boundary (n_min = 1 mod ell); a partial
    final block is zero-padded.
    """
    ell = config.ell
    if (psi.n_min - 1) % ell != 0:
        raise ValueError(
            f"window must start on a cell boundary (n_min = 1 mod ell), got n_min={psi.n_min}"
        )
    p_min = (psi.n_min - 1) // ell
    n_rows = -(-psi.dim // ell)
    padded = np.zeros(n_rows * ell, dtype=complex)
    padded[: psi.dim] = psi.amplitudes
    blocks = padded.reshape(n_rows, ell)
    # <X,P|psi> = ell**-0.5 * sum_j exp(+i j X dtheta) psi_{P*ell+j}, j = 1..ell,
    # which is sqrt(ell) * ifft(block) up to an X-dependent unit phase.
    amps = math.sqrt(ell) * np.fft.ifft(blocks, axis=1)
    return CellDistribution(ell, p_min, np.abs(amps) ** 2, folded=False)


def fold_momentum(dist: CellDistribution, config: RotorConfig) -> CellDistribution:
    """Sum cell rows congruent modulo ell onto the 2*pi momentum torus."""
    if dist.folded:
        raise ValueError("distribution is already folded")
    if dist.ell != config.ell:
        raise ValueError(f"grid mismatch: distribution ell={dist.ell}, config ell={config.ell}")
    out = np.zeros((config.ell, config.ell))
    rows = dist.p_values % config.ell
    np.add.at(out, rows, dist.probabilities)
    return CellDistribution(config.ell, 0, out, folded=True)


def entropy(dist: CellDistribution) -> float:
    """Shannon entropy -sum p ln p over cells, with 0 ln 0 = 0."""
    p = dist.probabilities.ravel()
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def basis_spread_moments(config: RotorConfig) -> tuple[float, float]:
    """Closed-form momentum and angle variances of the origin cell state.

    Var(l) = (ell**2 - 1)/12 in momentum quantum numbers; Var(theta) is the
    angle variance of the state's density centred on theta = 0.
    """
    ell = config.ell
    var_l = (ell * ell - 1) / 12.0
    var_theta = np.pi**2 / 3.0
    if ell > 1:
        k = np.arange(1, ell, dtype=float)
        var_theta += (4.0 / ell) * float(np.sum((-1.0) ** k * (ell - k) / k**2))
    return var_l, float(var_theta)


def seed_angle_density(theta, ell: int) -> np.ndarray:
    """Angle density |<theta|origin cell>|^2: a squared Dirichlet kernel peaked at 0."""
    th = np.asarray(theta, dtype=float)
    den = np.sin(0.5 * th)
    num = np.sin(0.5 * ell * th)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    ratio = np.where(np.abs(den) < 1e-14, float(ell), ratio)
    return ratio**2 / (2.0 * np.pi * ell)


def embed_on_torus(psi: MomentumWavefunction, config: RotorConfig) -> MomentumWavefunction:
    """Embed an aligned window state into the full torus window n = 1..N.

    All of the state's cell rows must lie inside [0, ell).
    """
    ell = config.ell
    if (psi.n_min - 1) % ell != 0:
        raise ValueError("window must start on a cell boundary")
    offset = psi.n_min - 1
    if offset < 0 or offset + psi.dim > config.N:
        raise ValueError("state does not fit inside the torus window n = 1..N")
    amps = np.zeros(config.N, dtype=complex)
    amps[offset : offset + psi.dim] = psi.amplitudes
    return MomentumWavefunction(1, amps)
