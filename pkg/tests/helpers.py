"""Shared independent oracles for the test suite.

Everything here recomputes expected values by a different route than the
library code: explicit inner products, direct quadrature, truncated folded
Bessel sums.
"""

import numpy as np
from scipy.special import jv

TWO_PI = 2.0 * np.pi


def circ_sorted(values, tol=1e-9):
    """Sort angles on [0, 2*pi) after snapping near-2*pi values back to 0."""
    v = np.asarray(values, dtype=float).copy()
    v[v > TWO_PI - tol] -= TWO_PI
    return np.sort(v)


def bessel_integral(n, x, points=2**14):
    """(1/2pi) int_0^{2pi} exp(i(n m - x cos m)) dm = J_n(x)/i^n, by trapezoid.

    The integrand is periodic and analytic, so the uniform trapezoid rule
    converges spectrally.  Returns the complex integral times i^n, whose
    real part is J_n(x).
    """
    m = np.linspace(0.0, TWO_PI, points, endpoint=False)
    integral = np.mean(np.exp(1j * (n * m - x * np.cos(m))))
    return integral * (1j**n)


def folded_bessel_matrix(config, margin=60):
    """Momentum-folded one-kick matrix by direct Bessel summation.

    U_{m,n} = sum_r J_{m-n+rN}(K/hbar)/i^{m-n+rN} * exp(-i n^2 hbar/2),
    truncated at |order| <= K/hbar + margin; labels n, m = 1..N.
    """
    N = config.N
    hbar = config.hbar_eff
    x = config.K / hbar
    trunc = int(np.ceil(x)) + margin
    inv_i = np.array([1.0 + 0j, -1j, -1.0 + 0j, 1j])
    n = np.arange(1, N + 1, dtype=float)
    free = np.exp(-0.5j * hbar * n**2)
    U = np.zeros((N, N), dtype=complex)
    r_lo = -(trunc // N + 2)
    r_hi = trunc // N + 3
    for mm in range(1, N + 1):
        for nn in range(1, N + 1):
            total = 0.0j
            for r in range(r_lo, r_hi):
                k = mm - nn + r * N
                if abs(k) <= trunc:
                    total += jv(k, x) * inv_i[k % 4]
            U[mm - 1, nn - 1] = total * free[nn - 1]
    return U


def brute_force_cell_overlaps(psi, config, p_rows):
    """<X,P|psi> by explicit inner products with explicitly built cell states."""
    from qkr.phase_space import make_basis_state

    ell = config.ell
    out = np.zeros((len(p_rows), ell), dtype=complex)
    for i, P in enumerate(p_rows):
        for X in range(ell):
            cell = make_basis_state(X, P, config)
            lo = max(cell.n_min, psi.n_min)
            hi = min(cell.n_min + cell.dim, psi.n_min + psi.dim)
            if hi <= lo:
                continue
            a = cell.amplitudes[lo - cell.n_min : hi - cell.n_min]
            b = psi.amplitudes[lo - psi.n_min : hi - psi.n_min]
            out[i, X] = np.vdot(a, b)
    return out


def seed_state_angle_amplitude(ell, theta):
    """<theta|origin cell> evaluated directly from the momentum amplitudes."""
    n = np.arange(1, ell + 1)
    return np.exp(1j * np.outer(theta, n)).sum(axis=1) / np.sqrt(TWO_PI * ell)


def participation_ratio(vec):
    w = np.abs(np.asarray(vec)) ** 2
    w = w / w.sum()
    return 1.0 / float(np.sum(w**2))


def random_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def read_csv(path):
    """Parse a '#'-metadata CSV into {column: array-or-list} plus the metadata."""
    meta = {}
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            if not line:
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    cols = {}
    for i, name in enumerate(header):
        raw_col = [r[i] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw_col])
        except ValueError:
            cols[name] = raw_col
    return cols, meta
