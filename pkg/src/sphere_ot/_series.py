"""Cancellation-safe evaluation of the trigonometric ratios used throughout.

Each ratio below is smooth at r = 0 but suffers catastrophic cancellation
when evaluated directly for small r.  Below SERIES_CUT the direct formulas
lose digits faster than the truncated Taylor series does, so we switch.
"""

from __future__ import annotations

import numpy as np

# Below this radius the 5-term series is accurate to ~1e-16 relative while
# the direct formulas have already lost ~4 digits to cancellation.
SERIES_CUT = 0.05

# The quartic-order combination needs a wider switch because its leading
# term is r^4 and the direct evaluation cancels three O(1) terms.
LENS_SERIES_CUT = 0.2


def _split_eval(r, direct, series):
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    small = np.abs(r) < SERIES_CUT
    if np.any(small):
        out[small] = series(r[small])
    if np.any(~small):
        out[~small] = direct(r[~small])
    return out[0] if scalar else out


def sin_over_r(r):
    """sin(r) / r, equal to 1 at r = 0."""
    return _split_eval(
        r,
        lambda x: np.sin(x) / x,
        lambda x: 1.0
        - x**2 / 6.0
        + x**4 / 120.0
        - x**6 / 5040.0
        + x**8 / 362880.0,
    )


def r_over_sin(r):
    """r / sin(r), the reciprocal of sin_over_r."""
    return 1.0 / sin_over_r(r)


def r_cot_r(r):
    """r * cos(r) / sin(r), equal to 1 at r = 0."""
    return _split_eval(
        r,
        lambda x: x * np.cos(x) / np.sin(x),
        lambda x: 1.0
        - x**2 / 3.0
        - x**4 / 45.0
        - 2.0 * x**6 / 945.0
        - x**8 / 4725.0,
    )


def radial_gap(r):
    """1 - r*cot(r); vanishes quadratically at r = 0 and blows up at pi."""
    return _split_eval(
        r,
        lambda x: 1.0 - x * np.cos(x) / np.sin(x),
        lambda x: x**2 / 3.0
        + x**4 / 45.0
        + 2.0 * x**6 / 945.0
        + x**8 / 4725.0,
    )


def bowl_ratio(r):
    """(sin r - r cos r) / r^3, with limit 1/3 at r = 0."""
    return _split_eval(
        r,
        lambda x: (np.sin(x) - x * np.cos(x)) / x**3,
        lambda x: 1.0 / 3.0
        - x**2 / 30.0
        + x**4 / 840.0
        - x**6 / 45360.0
        + x**8 / 3991680.0,
    )


def shell_ratio(r):
    """(r - sin r cos r) / r^3, with limit 2/3 at r = 0."""
    return _split_eval(
        r,
        lambda x: (x - np.sin(x) * np.cos(x)) / x**3,
        lambda x: 2.0 / 3.0
        - 2.0 * x**2 / 15.0
        + 4.0 * x**4 / 315.0
        - 2.0 * x**6 / 2835.0
        + 4.0 * x**8 / 155925.0,
    )


def lens_combo(r):
    """(1/2) * (r sin 2r + 3 cos 2r + 4 r^2 - 3); nonnegative, ~r^4/3 near 0."""
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    small = np.abs(r) < LENS_SERIES_CUT
    if np.any(small):
        x = r[small]
        out[small] = (
            x**4 / 3.0 - x**8 / 315.0 + 4.0 * x**10 / 14175.0
        )
    if np.any(~small):
        x = r[~small]
        out[~small] = 0.5 * (
            x * np.sin(2.0 * x) + 3.0 * np.cos(2.0 * x) + 4.0 * x**2 - 3.0
        )
    return out[0] if scalar else out
