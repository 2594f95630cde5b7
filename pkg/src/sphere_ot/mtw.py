"""Cost-sectional curvature of sphere costs, by two independent routes.

The tensor value at a pair (x, y) and section (xi, nu) is the mixed fourth
derivative D^4 over (x along xi, twice) and (the gradient variable along
nu, twice) of -c(x, cexp(p)), with the cost exponential frozen at the base
point. A finite-difference route works for every profile; a closed-form
route covers the quadratic profile. Both carry the same frozen scale
constant, fixed once so the orthonormal near-diagonal value on the unit
sphere is 3/2.

The module also certifies uniform positivity of the tensor over seeded
scans away from the cut locus, and evaluates the three trigonometric
bounds that underpin the positivity argument.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._series import bowl_ratio, lens_combo, r_over_sin, shell_ratio
from .costs import CostProfile, c_exp, grad_x, quadratic, raw_cost
from .errors import ConfigError, CutLocusError, DomainError
from .geometry import (
    SpherePoint,
    TangentVector,
    distance,
    exp_map,
)

# Scale relating the raw fourth difference to the reported tensor, fixed
# once by the orthonormal near-diagonal value 3/2 on the unit sphere and
# frozen; the route-equivalence tests fail on any later drift.
MTW_NORMALIZATION = 2.25

# 5-point central second-derivative stencil, divided by 12 h^2.
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
_NODES = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


@dataclass(frozen=True)
class CurvatureQuery:
    """A tensor evaluation site: base pair (x, y) and section (xi, nu)."""

    x: SpherePoint
    y: SpherePoint
    xi: TangentVector
    nu: TangentVector

    def __post_init__(self):
        if self.xi.base != self.x or self.nu.base != self.x:
            raise ValueError("section vectors must be tangent at x")

    def orthogonal(self, tol: float = 1e-10) -> bool:
        """Whether the section satisfies the orthogonality requirement."""
        return abs(float(self.xi.vec @ self.nu.vec)) <= tol * max(
            1.0, self.xi.norm * self.nu.norm
        )


@dataclass(eq=False)
class MtwReport:
    """Result of a positivity scan.

    Attributes:
        samples: Number of evaluated queries.
        min_value: Smallest tensor value encountered.
        argmin: The query attaining the minimum (first index on ties).
        margin: Distance margin to the cut locus used by the scan.
        c0_estimate: The certified lower-bound estimate (= min_value).
        rows: (samples, 4) array of per-query rows (r, c_ratio, t, value).
    """

    samples: int
    min_value: float
    argmin: CurvatureQuery
    margin: float
    c0_estimate: float
    rows: np.ndarray

    @property
    def certified(self) -> bool:
        return self.samples > 0 and self.min_value > 0.0


def _raw_fourth_difference(
    profile: CostProfile,
    x: SpherePoint,
    y: SpherePoint,
    xi: np.ndarray,
    nu: np.ndarray,
    h: float,
) -> float:
    p0 = (-1.0 * grad_x(profile, x, y)).vec
    cut = profile.domain_cut - 1e-9
    inner = [
        c_exp(profile, TangentVector(x, p0 + t * nu)) for t in _NODES * h
    ]
    total = 0.0
    for wi, s in zip(_W2, _NODES * h):
        xs = exp_map(x, TangentVector(x, s * xi)) if s != 0.0 else x
        for wj, yt in zip(_W2, inner):
            d = distance(xs, yt)
            if d >= cut:
                raise CutLocusError(
                    f"stencil point at distance {d:.6g} reaches the cut"
                )
            total += wi * wj * (-float(profile.f(d)))
    return total / (144.0 * h**4)


def mtw_fd(profile: CostProfile, query: CurvatureQuery, h: float = 1e-2) -> float:
    """Tensor value by nested fourth-order central differences.

    Evaluates the raw mixed fourth derivative on steps h and h/2 and
    Richardson-extrapolates, then applies the frozen scale constant.

    Args:
        profile: Cost profile (any kind).
        query: Evaluation site; d(x, y) must stay clear of the cut by a
            few multiples of h.
        h: Base step, in [1e-3, 1e-1].

    Raises:
        DomainError: On an out-of-range step.
        CutLocusError: When a stencil point reaches the profile cut.
    """
    if not 1e-3 <= h <= 1e-1:
        raise DomainError(f"step {h} outside [1e-3, 1e-1]")
    coarse = _raw_fourth_difference(profile, query.x, query.y, query.xi.vec, query.nu.vec, h)
    fine = _raw_fourth_difference(profile, query.x, query.y, query.xi.vec, query.nu.vec, 0.5 * h)
    return MTW_NORMALIZATION * (16.0 * fine - coarse) / 15.0


def _closed_form_raw(r, alpha2, b2, t, c):
    """Stable closed-form tensor core for the quadratic profile.

    Arguments are the decomposition invariants: radius r = |p0|, alpha2 the
    squared length of the component of p0 orthogonal to the section vector
    nu, b2 = |nu|^2, t the nu-coordinate of p0, and c the inner product of
    the unit xi with the orthogonal component. Vectorized over numpy
    arrays. The unit-xi value is returned; scale by |xi|^2 outside.
    """
    r, alpha2, b2, t, c = np.broadcast_arrays(
        np.asarray(r, dtype=float), alpha2, b2, t, c
    )
    rr = r_over_sin(r)
    sh = shell_ratio(r)
    bo = bowl_ratio(r)
    rsq = r * r
    q = np.divide(c * c, rsq, out=np.zeros_like(r), where=rsq > 0)
    a_frac = np.divide(alpha2, rsq, out=np.zeros_like(r), where=rsq > 0)
    t_frac = np.divide(t * t * b2, rsq, out=np.zeros_like(r), where=rsq > 0)
    rr2 = rr * rr
    term_a = sh * (1.0 - q) * rr2 + 2.0 * q * bo * rr
    term_t = 2.0 * (1.0 - q) * bo * rr2 * rr + 4.0 * q * sh * rr2 - 6.0 * q * bo * rr
    return b2 * (a_frac * term_a + t_frac * term_t)


def mtw_closed_form(profile: CostProfile, query: CurvatureQuery) -> float:
    """Tensor value for the quadratic profile in closed form.

    Decomposes p0 = -grad_x c(x, y) against nu, shifts the section so the
    components are orthogonal, and evaluates the radial expression. Scaled
    by the same frozen constant as the finite-difference route.

    Raises:
        ConfigError: For non-quadratic profiles.
        DomainError: When d(x, y) is zero or reaches pi.
    """
    if profile.kind != "quadratic":
        raise ConfigError("closed-form route requires the quadratic profile")
    r = distance(query.x, query.y)
    # The chordal norm resolves coincidence below the arccos noise floor.
    if float(np.linalg.norm(query.x.coords - query.y.coords)) < 1e-9:
        raise DomainError("closed form requires distinct points")
    if r >= math.pi - 1e-12:
        raise DomainError("closed form requires d(x, y) < pi")
    p0 = (-1.0 * grad_x(profile, query.x, query.y)).vec
    beta = query.nu.vec
    b2 = float(beta @ beta)
    t0 = float(p0 @ beta) / b2
    alpha = p0 - t0 * beta
    xi_norm = query.xi.norm
    v = query.xi.vec / xi_norm
    c = float(v @ alpha)
    raw = float(_closed_form_raw(r, float(alpha @ alpha), b2, t0, c))
    return MTW_NORMALIZATION * raw * xi_norm**2


def mtw_closed_form_scan(r, tau, c_ratio) -> np.ndarray:
    """Closed-form tensor over decomposition coordinates, vectorized.

    Args:
        r: Radii |p0| in (0, pi), broadcastable.
        tau: Fraction t / r in [-1, 1] of p0 along the unit nu.
        c_ratio: Cosine in [-1, 1] between xi and the orthogonal component.

    Returns:
        Tensor values for unit orthonormal sections, same broadcast shape.
    """
    r = np.asarray(r, dtype=float)
    tau = np.asarray(tau, dtype=float)
    c_ratio = np.asarray(c_ratio, dtype=float)
    alpha2 = r * r * (1.0 - tau * tau)
    t = r * tau
    c = c_ratio * np.sqrt(alpha2)
    return MTW_NORMALIZATION * _closed_form_raw(r, alpha2, 1.0, t, c)


def inequality_constants(points: int = 1_000_000) -> tuple[float, float, float]:
    """Grid infima of the three trigonometric bounds on [1e-6, pi].

    Returns:
        (smallest (sin r - r cos r) / r^3,
         smallest (r - sin r cos r) / r^3,
         smallest (1/2)(r sin 2r + 3 cos 2r + 4 r^2 - 3)).
    """
    grid = np.linspace(1e-6, math.pi, points)
    return (
        float(bowl_ratio(grid).min()),
        float(shell_ratio(grid).min()),
        float(lens_combo(grid).min()),
    )


def _sample_pool(rng: np.random.Generator, samples: int, dim: int):
    """Seeded master pool of queries with radii across (0.05, pi - 0.01).

    The geodesic direction is an independent random tangent, so the pool
    covers general positions of the section relative to p0; (xi, nu) is a
    random orthonormal tangent pair.
    """
    xs = rng.normal(size=(samples, dim))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    radii = rng.uniform(0.05, math.pi - 0.01, size=samples)
    raw = rng.normal(size=(samples, 3, dim))
    geo = np.empty((samples, dim))
    xi_rows = np.empty((samples, dim))
    nu_rows = np.empty((samples, dim))
    for k in range(samples):
        geo[k] = _unit_tangent(raw[k, 0], xs[k])
        xi_rows[k] = _unit_tangent(raw[k, 1], xs[k])
        nu_rows[k] = _unit_tangent(
            raw[k, 2] - (raw[k, 2] @ xi_rows[k]) * xi_rows[k], xs[k], xi_rows[k]
        )
    return xs, radii, geo, xi_rows, nu_rows


def _unit_tangent(seed, base, *ortho) -> np.ndarray:
    v = seed - (seed @ base) * base
    for a in ortho:
        v = v - (v @ a) * a
    n = np.linalg.norm(v)
    if n < 1e-8:
        # Deterministic fallback: complete from the standard basis.
        from .geometry import SpherePoint, orthonormal_frame

        for axis in orthonormal_frame(SpherePoint(base)).axes:
            w = axis.copy()
            for a in ortho:
                w = w - (w @ a) * a
            if np.linalg.norm(w) > 1e-8:
                return w / np.linalg.norm(w)
        raise DomainError("could not complete a tangent direction")
    return v / n


def certify_as(
    profile: CostProfile,
    margin: float,
    samples: int,
    seed: int,
    dim: int = 3,
    h: float = 1e-2,
    use_kernel: bool = True,
) -> MtwReport:
    """Scan the tensor over a seeded pool and report its minimum.

    The pool is drawn once from the seed with radii across the whole
    admissible range and then filtered to d(x, y) <= cut - margin, so
    estimates for decreasing margins are minima over nested sample sets.

    Args:
        profile: Cost profile.
        margin: Required distance to the cut locus, at least 0.05.
        samples: Master pool size (the report counts the evaluated subset).
        seed: Seed for the deterministic pool.
        dim: Ambient dimension.
        h: Finite-difference step.
        use_kernel: Route built-in profiles through the batch kernel.

    Returns:
        MtwReport with the minimum, its query, and per-sample rows.
    """
    if margin < 0.05:
        raise DomainError("margin below 0.05 leaves no room for the stencil")
    if samples < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    xs, radii, geo, xi_rows, nu_rows = _sample_pool(rng, samples, dim)
    cut = min(math.pi, profile.domain_cut)
    keep = radii <= cut - margin
    if not np.any(keep):
        raise DomainError("margin leaves no admissible samples in the pool")
    xs, radii = xs[keep], radii[keep]
    geo, xi_rows, nu_rows = geo[keep], xi_rows[keep], nu_rows[keep]
    ys = np.cos(radii)[:, None] * xs + np.sin(radii)[:, None] * geo

    kept = xs.shape[0]
    if use_kernel and profile.kind in ("quadratic", "antenna"):
        from ._kernels import mtw_batch

        values = mtw_batch(profile.kind, xs, ys, xi_rows, nu_rows, h)
        bad = ~np.isfinite(values)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise CutLocusError(
                f"stencil left the admissible region at sample {k}: "
                f"r={radii[k]:.6g}"
            )
    else:
        values = np.empty(kept)
        for k in range(kept):
            q = _query_from_rows(xs[k], ys[k], xi_rows[k], nu_rows[k])
            try:
                values[k] = mtw_fd(profile, q, h)
            except (CutLocusError, DomainError) as err:
                raise type(err)(f"{err} [sample {k}, r={radii[k]:.6g}]") from err

    rows = np.empty((kept, 4))
    for k in range(kept):
        p0 = float(profile.f1(radii[k])) * geo[k]
        t0 = float(p0 @ nu_rows[k])
        alpha = p0 - t0 * nu_rows[k]
        na = float(np.linalg.norm(alpha))
        c_ratio = float(xi_rows[k] @ alpha) / na if na > 1e-300 else 0.0
        rows[k] = (radii[k], c_ratio, t0, values[k])

    best = int(np.argmin(values))
    argmin = _query_from_rows(xs[best], ys[best], xi_rows[best], nu_rows[best])
    low = float(values[best])
    return MtwReport(
        samples=kept,
        min_value=low,
        argmin=argmin,
        margin=margin,
        c0_estimate=low,
        rows=rows,
    )


def _query_from_rows(x_row, y_row, xi_row, nu_row) -> CurvatureQuery:
    x = SpherePoint(x_row)
    return CurvatureQuery(
        x=x,
        y=SpherePoint(y_row),
        xi=TangentVector(x, xi_row),
        nu=TangentVector(x, nu_row),
    )


def write_report_csv(report: MtwReport, path) -> None:
    """Write per-sample rows as CSV columns (r, c_ratio, t, value)."""
    np.savetxt(
        path,
        report.rows,
        delimiter=",",
        header="r,c_ratio,t,value",
        comments="",
        fmt="%.17g",
    )


def write_report_json(report: MtwReport, path) -> None:
    """Write the scan summary as deterministic JSON."""
    q = report.argmin
    payload = {
        "samples": report.samples,
        "margin": report.margin,
        "min_value": report.min_value,
        "c0_estimate": report.c0_estimate,
        "certified": report.certified,
        "argmin": {
            "x": q.x.coords.tolist(),
            "y": q.y.coords.tolist(),
            "xi": q.xi.vec.tolist(),
            "nu": q.nu.vec.tolist(),
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
