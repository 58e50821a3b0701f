"""Classical kicked rotor: standard-map ensembles on the 2*pi x 2*pi torus.

Momentum is folded with period 2*pi (extra full turns do not change the next
kick), so classical sections live on the same torus as the quantum cell grid
and can be coarse-grained to it for direct comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import CellDistribution, RotorConfig

__all__ = [
    "ClassicalEnsemble",
    "standard_map_step",
    "evolve_ensemble",
    "sample_from_cells",
    "coarse_grain",
    "total_variation",
]

TWO_PI = 2.0 * np.pi

GENERATOR_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class ClassicalEnsemble:
    """Point ensemble on the torus; `seed` records the sampling provenance."""

    theta: np.ndarray
    l: np.ndarray
    seed: int

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        l = np.mod(np.asarray(self.l, dtype=float), TWO_PI)
        if theta.ndim != 1 or theta.shape != l.shape or theta.size == 0:
            raise ValueError("theta and l must be matching non-empty 1-D arrays")
        theta.flags.writeable = False
        l.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_points(self) -> int:
        return self.theta.size


def standard_map_step(theta, l, K: float):
    """One kick of the standard map; the momentum update uses the NEW angle."""
    theta_new = np.mod(theta + l, TWO_PI)
    l_new = np.mod(l + K * np.sin(theta_new), TWO_PI)
    return theta_new, l_new


def evolve_ensemble(ens: ClassicalEnsemble, K: float, kicks: int) -> ClassicalEnsemble:
    """Advance every point independently by `kicks` map iterations."""
    if kicks < 0:
        raise ValueError(f"kicks must be non-negative, got {kicks}")
    theta, l = ens.theta, ens.l
    for _ in range(kicks):
        theta, l = standard_map_step(theta, l, K)
    return ClassicalEnsemble(theta, l, ens.seed)


def sample_from_cells(
    dist: CellDistribution, n_points: int, seed: int, config: RotorConfig
) -> ClassicalEnsemble:
    """Draw points matching a folded cell distribution.

    Cells are chosen by weight, then positions uniformly within the cell
    rectangle: theta on [X*dtheta - dtheta/2, X*dtheta + dtheta/2) and l on
    [(P*ell + 1/2)*hbar_eff, (P*ell + ell + 1/2)*hbar_eff), both wrapped.
    Deterministic for a fixed seed (PCG64).
    """
    if not dist.folded:
        raise ValueError("sampling expects a torus-folded distribution")
    if dist.ell != config.ell:
        raise ValueError(f"grid mismatch: distribution ell={dist.ell}, config ell={config.ell}")
    if n_points < 1:
        raise ValueError(f"n_points must be positive, got {n_points}")
    rng = np.random.default_rng(seed)
    p = dist.probabilities.ravel()
    flat = rng.choice(p.size, size=n_points, p=p / p.sum())
    p_idx, x_idx = np.divmod(flat, config.ell)
    theta = (x_idx + rng.random(n_points) - 0.5) * config.delta_theta
    l = (p_idx * config.ell + 0.5 + rng.random(n_points) * config.ell) * config.hbar_eff
    return ClassicalEnsemble(theta, l, seed)


def coarse_grain(ens: ClassicalEnsemble, config: RotorConfig) -> CellDistribution:
    """Histogram an ensemble onto the cell grid (same rectangles as sampling)."""
    if ens.n_points == 0:
        raise ValueError("cannot coarse-grain an empty ensemble")
    ell = config.ell
    x_idx = np.floor(ens.theta / config.delta_theta + 0.5).astype(np.int64) % ell
    p_idx = np.floor((ens.l / config.hbar_eff - 0.5) / ell).astype(np.int64) % ell
    counts = np.bincount(p_idx * ell + x_idx, minlength=ell * ell).astype(float)
    probs = (counts / ens.n_points).reshape(ell, ell)
    return CellDistribution(ell, 0, probs, folded=True)


def total_variation(a: CellDistribution, b: CellDistribution) -> float:
    """Total variation distance (1/2) sum |a - b| between two folded grids."""
    if a.ell != b.ell or not (a.folded and b.folded):
        raise ValueError("total variation needs two folded distributions on the same grid")
    return 0.5 * float(np.abs(a.probabilities - b.probabilities).sum())
