"""Hot batch kernels with compiled and pure-numpy implementations.

Each public function dispatches on the backend selected in _accel: a
numba-compiled per-query loop when available, otherwise a vectorized numpy
fallback. Both paths compute identical quantities and are parity-tested.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAS_NUMBA, njit

# 5-point central second-derivative stencil, divided by 12 h^2.
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
_NODES = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])

_PROFILE_CODES = {"quadratic": 0, "antenna": 1}

# Scale fixing the orthonormal near-diagonal tensor value 3/2; must match
# the constant in mtw.py (asserted by the parity tests).
_MTW_SCALE = 2.25


@njit(cache=True)
def _mtw_point_njit(code, x, xi, p0, nu, s, t):
    # Value of -f(d(exp_x(s xi), cexp_x(p0 + t nu))) for unit xi, nu.
    n = x.shape[0]
    rp = 0.0
    for i in range(n):
        w = p0[i] + t * nu[i]
        rp += w * w
    rp = math.sqrt(rp)
    if code == 0:
        d = rp
        if d >= math.pi - 1e-9:
            return math.nan
    else:
        d = 2.0 * math.atan(2.0 * rp)
    cd = math.cos(d)
    sd = math.sin(d) / rp if rp > 0.0 else 0.0
    cs = math.cos(s)
    ss = math.sin(s)
    dot = 0.0
    for i in range(n):
        w = p0[i] + t * nu[i]
        yy = cd * x[i] + sd * w
        xx = cs * x[i] + ss * xi[i]
        dot += yy * xx
    if dot > 1.0:
        dot = 1.0
    elif dot < -1.0:
        dot = -1.0
    if code == 0:
        dd = math.acos(dot)
        if dd >= math.pi - 1e-9:
            return math.nan
        return -0.5 * dd * dd
    if dot <= -1.0 + 1e-15:
        return math.nan
    return 0.5 * math.log1p(dot)


@njit(cache=True)
def _mtw_raw_njit(code, x, xi, p0, nu, h, w2, nodes):
    total = 0.0
    for i in range(5):
        for j in range(5):
            val = _mtw_point_njit(code, x, xi, p0, nu, nodes[i] * h, nodes[j] * h)
            if math.isnan(val):
                return math.nan
            total += w2[i] * w2[j] * val
    return total / (144.0 * h**4)


@njit(cache=True)
def _mtw_batch_njit(code, xs, ys, xis, nus, h, w2, nodes):
    m = xs.shape[0]
    n = xs.shape[1]
    out = np.empty(m)
    p0 = np.empty(n)
    for k in range(m):
        dot = 0.0
        for i in range(n):
            dot += xs[k, i] * ys[k, i]
        if dot > 1.0:
            dot = 1.0
        elif dot < -1.0:
            dot = -1.0
        d = math.acos(dot)
        if code == 0:
            f1 = d
        else:
            f1 = 0.5 * math.tan(0.5 * d)
        scale = 0.0
        for i in range(n):
            w = ys[k, i] - dot * xs[k, i]
            scale += w * w
        scale = math.sqrt(scale)
        for i in range(n):
            p0[i] = f1 * (ys[k, i] - dot * xs[k, i]) / scale if scale > 0.0 else 0.0
        coarse = _mtw_raw_njit(code, xs[k], xis[k], p0, nus[k], h, w2, nodes)
        fine = _mtw_raw_njit(code, xs[k], xis[k], p0, nus[k], 0.5 * h, w2, nodes)
        out[k] = _MTW_SCALE * (16.0 * fine - coarse) / 15.0
    return out


def _mtw_raw_numpy(code, xs, xis, p0, nus, h):
    # Vectorized over queries: stencil axes broadcast as (m, 5, 1) x (m, 1, 5).
    s = (_NODES * h)[None, :, None, None]
    t = (_NODES * h)[None, None, :, None]
    p = p0[:, None, None, :] + t * nus[:, None, None, :]
    rp = np.linalg.norm(p, axis=-1)
    if code == 0:
        d = rp
        bad = d >= math.pi - 1e-9
    else:
        d = 2.0 * np.arctan(2.0 * rp)
        bad = np.zeros_like(d, dtype=bool)
    with np.errstate(invalid="ignore", divide="ignore"):
        sd = np.where(rp > 0.0, np.sin(d) / rp, 0.0)
    y = np.cos(d)[..., None] * xs[:, None, None, :] + sd[..., None] * p
    xm = np.cos(s) * xs[:, None, None, :] + np.sin(s) * xis[:, None, None, :]
    dot = np.clip(np.sum(xm * y, axis=-1), -1.0, 1.0)
    if code == 0:
        dd = np.arccos(dot)
        bad = bad | (dd >= math.pi - 1e-9)
        vals = -0.5 * dd * dd
    else:
        bad = bad | (dot <= -1.0 + 1e-15)
        with np.errstate(divide="ignore"):
            vals = 0.5 * np.log1p(dot)
    vals = np.where(bad, np.nan, vals)
    acc = np.einsum("s,t,mst->m", _W2, _W2, vals)
    return acc / (144.0 * h**4)


def _mtw_batch_numpy(code, xs, ys, xis, nus, h):
    dot = np.clip(np.einsum("mn,mn->m", xs, ys), -1.0, 1.0)
    d = np.arccos(dot)
    f1 = d if code == 0 else 0.5 * np.tan(0.5 * d)
    perp = ys - dot[:, None] * xs
    scale = np.linalg.norm(perp, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p0 = np.where((scale > 0.0)[:, None], f1[:, None] * perp / scale[:, None], 0.0)
    coarse = _mtw_raw_numpy(code, xs, xis, p0, nus, h)
    fine = _mtw_raw_numpy(code, xs, xis, p0, nus, 0.5 * h)
    return _MTW_SCALE * (16.0 * fine - coarse) / 15.0


def mtw_batch(kind: str, xs, ys, xis, nus, h: float = 1e-2) -> np.ndarray:
    """Tensor values for a batch of queries with unit section vectors.

    Args:
        kind: "quadratic" or "antenna".
        xs, ys: (m, n) unit rows of base pairs.
        xis, nus: (m, n) unit tangent rows at xs.
        h: Base finite-difference step (Richardson over h and h/2).

    Returns:
        (m,) tensor values; NaN marks a query whose stencil left the
        admissible region.
    """
    code = _PROFILE_CODES[kind]
    xs = np.ascontiguousarray(xs, dtype=float)
    ys = np.ascontiguousarray(ys, dtype=float)
    xis = np.ascontiguousarray(xis, dtype=float)
    nus = np.ascontiguousarray(nus, dtype=float)
    if HAS_NUMBA:
        return _mtw_batch_njit(code, xs, ys, xis, nus, h, _W2, _NODES)
    return _mtw_batch_numpy(code, xs, ys, xis, nus, h)
