"""Experiment runner: seeded, deterministic sweeps with CSV and PGM output.

Every output file starts with '#'-prefixed metadata (config echo, seed, RNG
name, artifact version) so a run can be reproduced byte-for-byte from the
file itself.  Reals are printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .classical import (
    GENERATOR_NAME,
    coarse_grain,
    evolve_ensemble,
    sample_from_cells,
    total_variation,
)
from .ergostats import all_gaps, degeneracy_parameter, eta_of_spectrum, spacing_ratio, zeta_of_spectrum
from .floquet import (
    build_periodic_matrix,
    evolve_one_kick,
    localization_window_dim,
    quasi_energy_spectrum,
    windowed_spectrum_around,
)
from .observables import (
    cell_projector_observable,
    cos_theta_observable,
    fluctuation_report,
    identity_observable,
    momentum_sq_observable,
    observable_spread,
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
    project_to_cells,
    seed_angle_density,
)

EXPERIMENTS = (
    "poincare",
    "degeneracy-scan",
    "entropy-evolution",
    "localization-scan",
    "observable-check",
    "basis-check",
)

# classical chaos threshold of the standard map (Greene's criterion)
K_CRITICAL = 0.971635

# default center-free effective Planck constant for localization scans
IRRATIONAL_HBAR = 4.0 * math.pi / (53.0 * math.sqrt(5.0))

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    ell: int = 40
    K: tuple = (5.0,)
    kicks: int = 20
    seed: int = 20260810
    ensemble_size: int = 32
    output_dir: str = "qkr-out"
    L_list: tuple = (1000, 2000, 4000)
    hbar_override: float | None = None
    n_cells: int = 20
    classical_points: int = 1_000_000
    k0: int = 0
    window_buffer_cap: int = 1500


# experiments whose dynamics live on the momentum torus need even ell
_TORUS_EXPERIMENTS = {"poincare", "degeneracy-scan", "entropy-evolution", "observable-check"}

_PER_EXPERIMENT_KICKS = {"observable-check": 5000, "poincare": 5}


def _parse_int(text, key):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {text!r}") from None


def _parse_float(text, key):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {text!r}") from None


def _parse_float_list(text, key):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key} must hold at least one value")
    return tuple(_parse_float(p, key) for p in parts)


def _parse_int_list(text, key):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key} must hold at least one value")
    return tuple(_parse_int(p, key) for p in parts)


_COERCERS = {
    "ell": _parse_int,
    "K": _parse_float_list,
    "kicks": _parse_int,
    "seed": _parse_int,
    "ensemble_size": _parse_int,
    "output_dir": lambda text, key: str(text),
    "L_list": _parse_int_list,
    "hbar_override": _parse_float,
    "n_cells": _parse_int,
    "classical_points": _parse_int,
    "k0": _parse_int,
    "window_buffer_cap": _parse_int,
}


def parse_config_file(path):
    """Read a line-based 'key = value' config file; '#' starts a comment line."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _COERCERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip()
    return out


def build_config(experiment, raw):
    """Coerce raw string values into a validated ExperimentConfig."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    kwargs = {}
    for key, text in raw.items():
        if text is None:
            continue
        if key not in _COERCERS:
            raise ConfigError(f"unknown key {key!r}")
        kwargs[key] = _COERCERS[key](text, key)
    if "kicks" not in kwargs and experiment in _PER_EXPERIMENT_KICKS:
        kwargs["kicks"] = _PER_EXPERIMENT_KICKS[experiment]
    cfg = ExperimentConfig(experiment=experiment, **kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.experiment in _TORUS_EXPERIMENTS:
        if cfg.ell < 2 or cfg.ell % 2 != 0:
            raise ConfigError(f"{cfg.experiment} needs even ell >= 2, got {cfg.ell}")
    if cfg.kicks < 0:
        raise ConfigError(f"kicks must be non-negative, got {cfg.kicks}")
    if cfg.ensemble_size < 1:
        raise ConfigError(f"ensemble_size must be at least 1, got {cfg.ensemble_size}")
    if any(k < 0 for k in cfg.K):
        raise ConfigError(f"kick strengths must be non-negative, got {cfg.K}")
    if cfg.experiment == "observable-check" and cfg.kicks < 1:
        raise ConfigError("observable-check needs kicks >= 1")
    if cfg.experiment == "entropy-evolution" and cfg.ensemble_size > cfg.ell**2:
        raise ConfigError(
            f"ensemble_size {cfg.ensemble_size} exceeds the {cfg.ell**2} available cells"
        )
    if cfg.experiment == "poincare":
        if not 1 <= cfg.n_cells <= cfg.ell**2:
            raise ConfigError(f"n_cells must lie in [1, ell^2], got {cfg.n_cells}")
        if cfg.classical_points < 1:
            raise ConfigError("classical_points must be positive")
    if cfg.experiment == "localization-scan":
        if any(k <= K_CRITICAL for k in cfg.K):
            raise ConfigError(
                f"localization scans need K above the chaos threshold {K_CRITICAL}, got {cfg.K}"
            )
        if list(cfg.L_list) != sorted(cfg.L_list) or cfg.L_list[0] < 1000:
            raise ConfigError("L_list must be ascending with minimum at least 1000")
        if cfg.hbar_override is not None and cfg.hbar_override <= 0:
            raise ConfigError("hbar_override must be positive")


# ---------------------------------------------------------------------------
# output helpers

def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def _metadata(cfg, **extra):
    md = {
        "artifact": f"qkr {__version__}",
        "experiment": cfg.experiment,
        "rng": GENERATOR_NAME,
    }
    for f in fields(cfg):
        if f.name == "experiment":
            continue
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            md[f.name] = ",".join(_fmt(v) for v in value)
        else:
            md[f.name] = _fmt(value)
    md.update({k: _fmt(v) for k, v in extra.items()})
    return md


def write_csv(path, metadata, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key} = {value}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_pgm(path, dist: CellDistribution, metadata):
    """Binary PGM heatmap; row 0 is the highest momentum cell row."""
    probs = dist.probabilities[::-1, :]
    p_max = float(probs.max())
    if p_max > 0:
        pixels = np.rint(255.0 * probs / p_max).astype(np.uint8)
    else:
        pixels = np.zeros_like(probs, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        for key, value in metadata.items():
            fh.write(f"# {key} = {value}\n".encode())
        fh.write(f"# p_max = {'%.17g' % p_max}\n".encode())
        fh.write(f"{dist.ell} {dist.ell}\n255\n".encode())
        fh.write(pixels.tobytes())
    return path


def _child_seeds(seed, n):
    """Deterministic independent child seeds derived from the experiment seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, np.uint64)]


def _sweep_workers():
    raw = os.environ.get("QKR_THREADS", "").strip()
    n = int(raw) if raw else 0
    if n < 0:
        raise ConfigError(f"QKR_THREADS must be non-negative, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _ordered_map(fn, items):
    """Evaluate fn over items, possibly in worker threads, preserving order."""
    items = list(items)
    workers = _sweep_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _out(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


# ---------------------------------------------------------------------------
# experiments

def _random_cells(rng, ell, count):
    """Distinct flat cell indices; flat = P*ell + X."""
    return [int(c) for c in rng.choice(ell * ell, size=count, replace=False)]


def _cell_superposition(config, flat_cells):
    """Equal-amplitude, common-phase superposition of distinct cells on the torus."""
    amps = np.zeros(config.N, dtype=complex)
    for flat in flat_cells:
        P, X = divmod(flat, config.ell)
        cell = make_basis_state(X, P, config)
        amps[cell.n_min - 1 : cell.n_min - 1 + config.ell] += cell.amplitudes
    amps /= math.sqrt(len(flat_cells))
    return MomentumWavefunction(1, amps)


def _folded_section(psi, config):
    return fold_momentum(project_to_cells(psi, config), config)


def run_poincare(cfg):
    """Matched quantum and classical sections from the same random cell set."""
    cell_seed, sample_seed = _child_seeds(cfg.seed, 2)
    outputs = []
    rows = []
    for K in cfg.K:
        config = RotorConfig(cfg.ell, K)
        rng = np.random.default_rng(cell_seed)
        flat_cells = _random_cells(rng, cfg.ell, cfg.n_cells)
        psi = _cell_superposition(config, flat_cells)
        q0 = _folded_section(psi, config)
        ens = sample_from_cells(q0, cfg.classical_points, sample_seed, config)
        for _ in range(cfg.kicks):
            psi = evolve_one_kick(psi, config)
        ens = evolve_ensemble(ens, K, cfg.kicks)
        qdist = _folded_section(psi, config)
        cdist = coarse_grain(ens, config)
        tv = total_variation(qdist, cdist)
        rows.append(
            (cfg.ell, K, cfg.kicks, cfg.n_cells, cfg.classical_points, tv, entropy(qdist), entropy(cdist))
        )
        md = _metadata(cfg, this_K=K)
        tag = f"K{_fmt(K)}_t{cfg.kicks}"
        outputs.append(write_pgm(_out(cfg, f"poincare_quantum_{tag}.pgm"), qdist, md))
        outputs.append(write_pgm(_out(cfg, f"poincare_classical_{tag}.pgm"), cdist, md))
    header = ("ell", "K", "kicks", "n_cells", "classical_points",
              "total_variation", "quantum_entropy", "classical_entropy")
    outputs.append(write_csv(_out(cfg, "poincare.csv"), _metadata(cfg), header, rows))
    return outputs


def run_degeneracy_scan(cfg):
    """eta, zeta and the spacing ratio for each kick strength on the K list."""

    def point(K):
        try:
            config = RotorConfig(cfg.ell, K)
            spectrum = quasi_energy_spectrum(build_periodic_matrix(config))
            eta = eta_of_spectrum(spectrum)
            zeta = zeta_of_spectrum(spectrum)
            ratio = spacing_ratio(spectrum)
            return (cfg.ell, config.N, K, eta.parameter, eta.r_squared,
                    zeta.parameter, zeta.r_squared, ratio)
        except Exception as exc:  # record the failure, keep scanning
            print(f"qkr: degeneracy-scan point K={K:g} failed: {exc}", file=sys.stderr)
            nan = float("nan")
            return (cfg.ell, cfg.ell**2, K, nan, nan, nan, nan, nan)

    rows = _ordered_map(point, cfg.K)
    header = ("ell", "N", "K", "eta", "eta_r2", "zeta", "zeta_r2", "spacing_ratio")
    return [write_csv(_out(cfg, "degeneracy_scan.csv"), _metadata(cfg), header, rows)]


def run_entropy_evolution(cfg):
    """Per-kick entropy mean and spread over random single-cell starts."""
    cell_seed = _child_seeds(cfg.seed, 1)[0]
    flat_cells = _random_cells(np.random.default_rng(cell_seed), cfg.ell, cfg.ensemble_size)

    def trace_for(K):
        config = RotorConfig(cfg.ell, K)
        S = np.empty((len(flat_cells), cfg.kicks + 1))
        for i, flat in enumerate(flat_cells):
            P, X = divmod(flat, cfg.ell)
            psi = embed_on_torus(make_basis_state(X, P, config), config)
            S[i, 0] = entropy(_folded_section(psi, config))
            for t in range(1, cfg.kicks + 1):
                psi = evolve_one_kick(psi, config)
                S[i, t] = entropy(_folded_section(psi, config))
        return S

    rows = []
    for K, S in zip(cfg.K, _ordered_map(trace_for, cfg.K)):
        ddof = 1 if len(flat_cells) > 1 else 0
        for t in range(cfg.kicks + 1):
            rows.append((K, t, float(S[:, t].mean()), float(S[:, t].std(ddof=ddof))))
    header = ("K", "kick", "mean_entropy", "std_entropy")
    return [write_csv(_out(cfg, "entropy_evolution.csv"), _metadata(cfg), header, rows)]


def run_localization_scan(cfg):
    """eta and zeta of the L window-centred Floquet states, per (K, L)."""
    hbar = cfg.hbar_override if cfg.hbar_override is not None else IRRATIONAL_HBAR

    def point(KL):
        K, L = KL
        dim = localization_window_dim(L, K, hbar, cfg.window_buffer_cap)
        ws = windowed_spectrum_around(cfg.k0, dim, hbar, K)
        if ws.dim < L:
            raise ConfigError(f"window dim {ws.dim} smaller than requested L={L}")
        E = np.sort(ws.quasi_energies[:L])
        eta = degeneracy_parameter(E, L, TWO_PI)
        zeta = degeneracy_parameter(all_gaps(E), L * (L - 1) // 2, math.pi)
        return (K, L, eta.parameter, zeta.parameter)

    points = [(K, L) for K in cfg.K for L in cfg.L_list]
    rows = _ordered_map(point, points)
    header = ("K", "L", "eta", "zeta")
    md = _metadata(cfg, hbar_eff="%.17g" % hbar)
    return [write_csv(_out(cfg, "localization_scan.csv"), md, header, rows)]


def _random_state(dim, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return MomentumWavefunction(1, amps / np.linalg.norm(amps))


def run_observable_check(cfg):
    """Time average vs diagonal average and the fluctuation bound, per (state, A)."""
    config = RotorConfig(cfg.ell, cfg.K[0])
    spectrum = quasi_energy_spectrum(build_periodic_matrix(config), want_vectors=True)
    observables = [
        cos_theta_observable(config.N),
        momentum_sq_observable(config),
        cell_projector_observable(config, 0, 0),
    ]
    spreads = {A.label: observable_spread(A) for A in observables}
    T = cfg.kicks
    state_seeds = _child_seeds(cfg.seed, cfg.ensemble_size)

    def row(state_label, psi, A):
        rep = fluctuation_report(psi, A, config, spectrum, T)
        f_a_sq = rep.fluctuation_sq / (rep.bound / rep.trace_rho_mc_sq) if rep.bound > 0 else 0.0
        return (state_label, A.label, rep.time_average, rep.diagonal_average,
                abs(rep.time_average - rep.diagonal_average), rep.fluctuation_sq,
                rep.bound, rep.trace_rho_mc_sq, f_a_sq, spreads.get(A.label, 0.0))

    rows = []
    first_random = _random_state(config.N, state_seeds[0])
    rows.append(row("random_0", first_random, identity_observable(config.N)))
    floquet_state = MomentumWavefunction(1, spectrum.eigenvectors[:, 0])
    for A in observables:
        rows.append(row("floquet_0", floquet_state, A))

    def state_rows(item):
        i, seed = item
        psi = _random_state(config.N, seed)
        return [row(f"random_{i}", psi, A) for A in observables]

    for batch in _ordered_map(state_rows, list(enumerate(state_seeds))):
        rows.extend(batch)
    header = ("state", "observable", "time_average", "diagonal_average", "abs_gap",
              "fluctuation_sq", "bound", "trace_rho_mc_sq", "f_a_sq", "spread")
    return [write_csv(_out(cfg, "observable_check.csv"), _metadata(cfg, T=T), header, rows)]


_SPREAD_ELLS = (1, 7, 16, 32, 64, 128)
_SLOPE_ELLS = (16, 32, 64, 128)


def _orthonormality_residual(ell, p_range=(-2, 3)):
    """max |<X',P'|X,P> - delta| over all cell pairs with rows in p_range."""
    config = RotorConfig(ell, 0)
    states = []
    rows = range(*p_range)
    n_lo = min(rows) * ell + 1
    dim = (max(rows) - min(rows) + 1) * ell
    for P in rows:
        for X in range(ell):
            cell = make_basis_state(X, P, config)
            vec = np.zeros(dim, dtype=complex)
            offset = cell.n_min - n_lo
            vec[offset : offset + ell] = cell.amplitudes
            states.append(vec)
    V = np.array(states)
    gram = V @ V.conj().T
    return float(np.abs(gram - np.eye(len(states))).max())


def var_theta_quadrature(ell, points=2**20 + 1):
    """Angle variance of the origin cell state by direct quadrature on [-pi, pi]."""
    from scipy.integrate import simpson

    theta = np.linspace(-np.pi, np.pi, points)
    return float(simpson(theta**2 * seed_angle_density(theta, ell), x=theta))


def _spread_slopes(ells):
    """Log-log slopes of the relative spreads sqrt(Var)/N against ell."""
    rel_l, rel_theta = [], []
    for ell in ells:
        var_l, var_theta = basis_spread_moments(RotorConfig(ell, 0))
        N = ell * ell
        rel_l.append(math.sqrt(var_l) / N)
        rel_theta.append(math.sqrt(var_theta) / N)
    logs = np.log(np.asarray(ells, dtype=float))
    slope_l = float(np.polyfit(logs, np.log(rel_l), 1)[0])
    slope_theta = float(np.polyfit(logs, np.log(rel_theta), 1)[0])
    return slope_l, slope_theta


def run_basis_check(cfg):
    """Cell-basis diagnostics: orthonormality, spreads, profiles, scaling slopes."""
    outputs = []
    md = _metadata(cfg)

    rows = [(ell, _orthonormality_residual(ell)) for ell in range(2, 13)]
    outputs.append(write_csv(_out(cfg, "basis_orthonormality.csv"), md,
                             ("ell", "max_residual"), rows))

    rows = []
    for ell in _SPREAD_ELLS:
        config = RotorConfig(ell, 0)
        var_l, var_theta = basis_spread_moments(config)
        # numeric momentum variance straight from the seed amplitudes
        n = np.arange(1, ell + 1, dtype=float)
        p = np.full(ell, 1.0 / ell)
        var_l_numeric = float(np.sum(p * (n - np.sum(p * n)) ** 2))
        rows.append((ell, var_l, var_l_numeric, var_theta, var_theta_quadrature(ell),
                     math.sqrt(var_l) / ell**2 if var_l > 0 else 0.0,
                     math.sqrt(var_theta) / ell**2))
    outputs.append(write_csv(_out(cfg, "basis_spreads.csv"), md,
                             ("ell", "var_l", "var_l_numeric", "var_theta",
                              "var_theta_quadrature", "rel_spread_l", "rel_spread_theta"),
                             rows))

    slope_l, slope_theta = _spread_slopes(_SLOPE_ELLS)
    outputs.append(write_csv(_out(cfg, "basis_slopes.csv"), md,
                             ("slope_rel_l", "slope_rel_theta"), [(slope_l, slope_theta)]))

    profile_ell = 7
    theta = np.linspace(-np.pi, np.pi, 1025)
    dens = seed_angle_density(theta, profile_ell)
    outputs.append(write_csv(_out(cfg, "basis_profile_angle.csv"), md,
                             ("theta", "density"), list(zip(theta, dens))))
    outputs.append(write_csv(_out(cfg, "basis_profile_momentum.csv"), md,
                             ("n", "probability"),
                             [(n, 1.0 / profile_ell) for n in range(1, profile_ell + 1)]))
    return outputs


RUNNERS = {
    "poincare": run_poincare,
    "degeneracy-scan": run_degeneracy_scan,
    "entropy-evolution": run_entropy_evolution,
    "localization-scan": run_localization_scan,
    "observable-check": run_observable_check,
    "basis-check": run_basis_check,
}


# ---------------------------------------------------------------------------
# command line

def _add_common_arguments(parser):
    parser.add_argument("--config", help="line-based 'key = value' config file")
    parser.add_argument("--ell", help="cells per phase-space axis")
    parser.add_argument("--K", help="kick strength, or comma-separated list")
    parser.add_argument("--kicks", help="number of kick periods (T for observable-check)")
    parser.add_argument("--seed", help="64-bit experiment seed")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--ensemble-size", dest="ensemble_size",
                        help="starting cells / random states per sweep point")
    parser.add_argument("--n-cells", dest="n_cells",
                        help="cells in the initial superposition (poincare)")
    parser.add_argument("--classical-points", dest="classical_points",
                        help="classical ensemble size (poincare)")
    parser.add_argument("--L-list", dest="L_list",
                        help="comma-separated Floquet state counts (localization-scan)")
    parser.add_argument("--hbar-override", dest="hbar_override",
                        help="effective Planck constant (localization-scan)")
    parser.add_argument("--k0", help="center momentum of the window (localization-scan)")
    parser.add_argument("--window-buffer-cap", dest="window_buffer_cap",
                        help="cap on the localization window edge buffer")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qkr",
        description="Kicked-rotor experiments: quasi-energy degeneracy statistics and "
                    "Planck-cell phase-space sections, with classical comparison.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        _add_common_arguments(sub.add_parser(name))
    args = parser.parse_args(argv)

    try:
        raw = parse_config_file(args.config) if args.config else {}
        for key in _COERCERS:
            value = getattr(args, key, None)
            if value is not None:
                raw[key] = value
        cfg = build_config(args.experiment, raw)
        for path in RUNNERS[cfg.experiment](cfg):
            print(path)
        return 0
    except ConfigError as exc:
        print(f"qkr: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"qkr: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
