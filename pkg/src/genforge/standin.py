"""Physics-model stand-in for the NASA airfoil self-noise table.

When the measured data file is not available, this module synthesises a table
with the same columns and size from the Brooks-Pope-Marcolini semi-empirical
trailing-edge noise model (turbulent-boundary-layer and separation sources,
tripped boundary layer) evaluated on a NACA 0012 wind-tunnel style test
matrix: six chords, several angles of attack, four tunnel speeds and the 1/3
octave bands from 200 Hz to 20 kHz.

The fifth column is the suction-side displacement thickness from the model's
boundary-layer correlations. The target is the 1/3-octave level normalised by
``10 log10(delta*_s M^5 L / r^2)``, the same scaling the measured table uses,
plus Gaussian measurement scatter. Of all (case, band) combinations, the
``n_records`` loudest in absolute terms are kept, mimicking a background-noise
floor in the tunnel.

The values are *synthetic*. They are useful for exercising the pipeline at the
right scale and with realistic structure, not for quoting measured numbers.
"""
from __future__ import annotations

import numpy as np

from .data import CANONICAL_RECORD_COUNT, Dataset

SPEED_OF_SOUND = 340.46  # m/s
KINEMATIC_VISCOSITY = 1.4529e-5  # m^2/s
SPAN = 0.4572  # m
OBSERVER_DISTANCE = 1.22  # m, observer at 90 deg to the chord and span

THIRD_OCTAVE_BANDS = np.array([
    200, 250, 315, 400, 500, 630, 800, 1000, 1250, 1600, 2000,
    2500, 3150, 4000, 5000, 6300, 8000, 10000, 12500, 16000, 20000,
], dtype=float)
TUNNEL_SPEEDS = (71.3, 55.5, 39.6, 31.7)
TEST_MATRIX = {
    0.3048: (0.0, 1.5, 3.0, 4.0),
    0.2286: (0.0, 2.7, 4.0, 4.8, 5.4, 7.3),
    0.1524: (0.0, 2.7, 4.2, 5.4, 7.2, 9.9),
    0.1016: (0.0, 3.3, 6.7, 8.9, 12.3, 15.6),
    0.0508: (0.0, 4.2, 8.4, 11.2, 15.4, 19.7),
    0.0254: (0.0, 4.8, 9.9, 12.6, 17.4, 22.2),
}


def displacement_thickness(chord, alpha, speed):
    """Tripped-boundary-layer displacement thickness ``(pressure side, suction side)`` in metres."""
    chord, alpha, speed = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (chord, alpha, speed)))
    re = speed * chord / KINEMATIC_VISCOSITY
    lr = np.log10(re)
    d0 = np.where(re <= 3e5, 0.0601 * re**-0.114, 10.0 ** (3.411 - 1.5397 * lr + 0.1059 * lr**2))
    a = np.abs(alpha)
    pressure = d0 * 10.0 ** (-0.0432 * a + 0.00113 * a**2)
    suction = d0 * np.select(
        [a <= 5.0, a <= 12.5],
        [10.0 ** (0.0679 * a), 0.381 * 10.0 ** (0.1516 * a)],
        14.296 * 10.0 ** (0.0258 * a),
    )
    return pressure * chord, suction * chord


def _a_min(a):
    return np.select([a < 0.204, a <= 0.244],
                     [np.sqrt(np.maximum(67.552 - 886.788 * a**2, 0.0)) - 8.219, -32.665 * a + 3.981],
                     -142.795 * a**3 + 103.656 * a**2 - 57.757 * a + 6.006)


def _a_max(a):
    return np.select([a < 0.13, a <= 0.321],
                     [np.sqrt(np.maximum(67.552 - 886.788 * a**2, 0.0)) - 8.219, -15.901 * a + 1.098],
                     -4.669 * a**3 + 3.491 * a**2 - 16.99 * a + 1.149)


def _b_min(b):
    return np.select([b < 0.13, b <= 0.145],
                     [np.sqrt(np.maximum(16.888 - 886.788 * b**2, 0.0)) - 4.109, -83.607 * b + 8.138],
                     -817.81 * b**3 + 355.21 * b**2 - 135.024 * b + 10.619)


def _b_max(b):
    return np.select([b < 0.10, b <= 0.187],
                     [np.sqrt(np.maximum(16.888 - 886.788 * b**2, 0.0)) - 4.109, -31.330 * b + 1.854],
                     -80.541 * b**3 + 44.174 * b**2 - 39.381 * b + 2.344)


def _spectrum_a(st_ratio, re):
    a = np.abs(np.log10(st_ratio))
    a0 = np.select([re < 9.52e4, re <= 8.57e5], [0.57, -9.57e-13 * (re - 8.57e5) ** 2 + 1.13], 1.13)
    lo0, hi0 = _a_min(a0), _a_max(a0)
    ar = (-20.0 - lo0) / (hi0 - lo0)
    lo = _a_min(a)
    return lo + ar * (_a_max(a) - lo)


def _spectrum_b(st_ratio, re):
    b = np.abs(np.log10(st_ratio))
    b0 = np.select([re < 9.52e4, re <= 8.57e5], [0.30, -4.48e-13 * (re - 8.57e5) ** 2 + 0.56], 0.56)
    lo0, hi0 = _b_min(b0), _b_max(b0)
    br = (-20.0 - lo0) / (hi0 - lo0)
    lo = _b_min(b)
    return lo + br * (_b_max(b) - lo)


def trailing_edge_noise(frequency, chord, alpha, speed):
    """Absolute 1/3-octave SPL (dB) of turbulent-boundary-layer and separation noise.

    Returns ``(spl, suction_displacement_thickness)``.
    """
    f, c, a, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (frequency, chord, alpha, speed)))
    mach = u / SPEED_OF_SOUND
    re = u * c / KINEMATIC_VISCOSITY
    d_p, d_s = displacement_thickness(c, a, u)
    geom = OBSERVER_DISTANCE**2

    st1 = 0.02 * mach**-0.6
    st2 = st1 * np.select([a < 1.33, a <= 12.5], [1.0, 10.0 ** (0.0054 * (a - 1.33) ** 2)], 4.72)
    st_p = f * d_p / u
    st_s = f * d_s / u

    lr = np.log10(re)
    k1 = np.select([re < 2.47e5, re <= 8.0e5], [-4.31 * lr + 156.3, -9.0 * lr + 181.6], 128.5)
    re_dp = re * d_p / c
    dk1 = np.where(re_dp <= 5000.0, 0.0, a * (1.43 * np.log10(np.maximum(re_dp, 1.0)) - 5.29))

    gamma = 27.094 * mach + 3.31
    gamma0 = 23.43 * mach + 4.651
    beta = 72.65 * mach + 10.74
    beta0 = -34.19 * mach - 13.82
    k2 = k1 + np.select(
        [a < gamma0 - gamma, a <= gamma0 + gamma],
        [-1000.0, np.sqrt(np.maximum(beta**2 - (beta / gamma) ** 2 * (a - gamma0) ** 2, 0.0)) + beta0],
        -12.0,
    )

    stalled = a > np.minimum(gamma0, 12.5)
    scale_p = 10 * np.log10(d_p * mach**5 * SPAN / geom)
    scale_s = 10 * np.log10(d_s * mach**5 * SPAN / geom)
    spl_p = scale_p + _spectrum_a(st_p / st1, re) + (k1 - 3.0) + dk1
    spl_s = scale_s + _spectrum_a(st_s / st1, re) + (k1 - 3.0)
    spl_alpha = scale_s + np.where(stalled, _spectrum_a(st_s / st2, 3.0 * re), _spectrum_b(st_s / st2, re)) + k2

    energy = 10.0 ** (spl_alpha / 10.0) + np.where(stalled, 0.0, 10.0 ** (spl_p / 10.0) + 10.0 ** (spl_s / 10.0))
    return 10.0 * np.log10(energy), d_s


def make_standin_dataset(n_records: int = CANONICAL_RECORD_COUNT, noise_db: float = 1.0,
                         seed: int = 1989) -> Dataset:
    """Synthesise a 6-column self-noise table from the trailing-edge noise model."""
    rows = []
    for chord, alphas in TEST_MATRIX.items():
        for alpha in alphas:
            for speed in TUNNEL_SPEEDS:
                for f in THIRD_OCTAVE_BANDS:
                    rows.append((f, alpha, chord, speed))
    grid = np.array(rows)
    spl, d_s = trailing_edge_noise(grid[:, 0], grid[:, 2], grid[:, 1], grid[:, 3])
    if n_records > len(grid):
        raise ValueError(f"test matrix only has {len(grid)} combinations")
    keep = np.sort(np.argsort(-spl, kind="stable")[:n_records])
    mach = grid[keep, 3] / SPEED_OF_SOUND
    scaled = spl[keep] - 10 * np.log10(d_s[keep] * mach**5 * SPAN / OBSERVER_DISTANCE**2)
    rng = np.random.default_rng(seed)
    scaled = scaled + noise_db * rng.standard_normal(scaled.shape)
    X = np.column_stack([grid[keep], d_s[keep]])
    return Dataset(X, np.round(scaled, 3), source=f"bpm-standin(seed={seed}, noise_db={noise_db})")
