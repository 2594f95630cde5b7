"""Quantitative regularity diagnostics for spherical transport.

Ball-mass growth conditions on measures, Holder exponents for potentials,
stay-away margins between transport graphs and the cut locus, hemisphere
mass lower bounds, volume-based mass bounds for maps, and the Monge-Ampere
residual of a synthetic potential on a geodesic chart.

Discrete volumes are measured against a quasi-uniform reference cloud and
every volume comparison carries an explicit sampling slack. Radius grids
are geometric with ratio 2**0.25; probe grids are low-discrepancy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .costs import CostProfile, c_exp, hessian_xx, hessian_xy
from .errors import CutLocusError, DomainError, GradientOutOfRange
from .geometry import (
    SpherePoint,
    TangentFrame,
    TangentVector,
    distance,
    exp_rows,
    fibonacci_rows,
    log_map,
    log_rows,
    orthonormal_frame,
    pairwise_distance,
    rows_distance,
    sample_sphere,
)
from .transport import DiscreteMeasure, TransportMap, TransportPlan

__all__ = [
    "GrowthConditionReport",
    "MassBoundReport",
    "StayAwayReport",
    "chart_coordinate_potential",
    "growth_condition",
    "hemisphere_infimum",
    "holder_exponent",
    "lemma_del_loep_check",
    "ma_residual",
    "mass_bound_check",
    "pushforward_density",
    "sigma_lower_bound",
    "sphere_area",
    "stay_away",
    "uniform_density",
    "volume_weights",
]

_RADIUS_RATIO = 2.0 ** 0.25
_SIGMA_RADIUS_MIN = 1e-3
_HEMISPHERE_PROBES = 512
_GROWTH_PROBES = 256
_CHUNK_ENTRIES = 4_000_000
_FD_STEP = 1e-4
_NEAR_DIAGONAL = 1e-9


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in R^dim."""
    if dim < 3:
        raise DomainError(f"ambient dimension must be >= 3, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def radius_grid(lo: float, hi: float, ratio: float = _RADIUS_RATIO) -> np.ndarray:
    """Geometric radius grid from lo to hi inclusive, step at most ratio."""
    if not 0.0 < lo < hi:
        raise DomainError("radius grid needs 0 < lo < hi")
    count = max(2, int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1)
    return np.geomspace(lo, hi, count)


def _ball_masses(
    centers: np.ndarray, rows: np.ndarray, weights: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """Mass of closed geodesic balls: out[i, k] = mu(B_radii[k](centers[i]))."""
    radii = np.asarray(radii, dtype=float)
    out = np.zeros((centers.shape[0], radii.size))
    step = max(1, _CHUNK_ENTRIES // max(1, rows.shape[0]))
    for s in range(0, centers.shape[0], step):
        d = pairwise_distance(centers[s : s + step], rows)
        # Scatter each weight into its distance bin, then prefix-sum so
        # column k holds the closed-ball mass at radii[k].
        bins = np.searchsorted(radii, d, side="left")
        acc = np.zeros((d.shape[0], radii.size + 1))
        np.add.at(
            acc,
            (np.arange(d.shape[0])[:, None], bins),
            np.broadcast_to(weights, d.shape),
        )
        out[s : s + step] = np.cumsum(acc[:, :-1], axis=1)
    return out


# ---------------------------------------------------------------------------
# Measure growth conditions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthConditionReport:
    """Empirical ball-mass growth profile of a measure.

    constant is the sup over sampled centers and radii of
    mu(B_eps(x)) / eps**dimension_exponent; sup_by_radius resolves the
    same sup per radius so callers can see growth or decay trends.
    """

    dimension_exponent: float
    constant: float
    radii: tuple
    worst_x: SpherePoint
    sup_by_radius: np.ndarray


def growth_condition(
    mu: DiscreteMeasure,
    exponent: float,
    radii,
    probes: int = _GROWTH_PROBES,
) -> GrowthConditionReport:
    """Empirical sup of mu(B_eps(x)) / eps**exponent over centers and radii.

    Centers run over the support of mu plus a low-discrepancy probe grid.
    A bounded, radius-stable constant indicates the measure obeys the
    polynomial growth condition at the given exponent; growth of the
    per-radius sup as eps shrinks indicates failure.

    Args:
        mu: Discrete measure.
        exponent: Growth exponent the ball masses are tested against.
        radii: At least 5 radii, each in (0, pi/2].
        probes: Size of the probe-center grid added to the support.

    Returns:
        GrowthConditionReport with the overall and per-radius suprema.

    Raises:
        DomainError: Fewer than 5 radii, or a radius outside (0, pi/2].
    """
    grid = np.sort(np.asarray(radii, dtype=float).reshape(-1))
    if grid.size < 5:
        raise DomainError("growth condition needs at least 5 radii")
    if grid[0] <= 0.0 or grid[-1] > math.pi / 2.0 + 1e-12:
        raise DomainError("growth radii must lie in (0, pi/2]")
    centers = np.vstack([mu.rows, fibonacci_rows(mu.dim, probes)])
    masses = _ball_masses(centers, mu.rows, mu.weights, grid)
    ratios = masses / grid[None, :] ** exponent
    flat = int(np.argmax(ratios))
    ci, _ = divmod(flat, grid.size)
    return GrowthConditionReport(
        dimension_exponent=float(exponent),
        constant=float(ratios.flat[flat]),
        radii=tuple(float(r) for r in grid),
        worst_x=SpherePoint(centers[ci]),
        sup_by_radius=ratios.max(axis=0),
    )


def holder_exponent(dim: int, p: float) -> tuple:
    """Holder exponents (alpha, beta) of the potential when the source
    measure has an L^p-type ball-mass bound in dimension dim.

    alpha = 1 - dim/p controls the source growth class; the potential
    regularity exponent is beta = alpha / (4*dim - 2 + alpha).

    Args:
        dim: Sphere dimension (ambient dimension minus one).
        p: Integrability exponent, p > dim; math.inf is allowed.

    Returns:
        (alpha, beta), both in (0, 1], strictly increasing in p.

    Raises:
        DomainError: When p <= dim or dim < 1.
    """
    if dim < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {dim}")
    if not p > dim:
        raise DomainError(f"integrability exponent must exceed {dim}, got {p}")
    alpha = 1.0 - dim / p
    beta = alpha / (4.0 * dim - 2.0 + alpha)
    return (alpha, beta)


# ---------------------------------------------------------------------------
# Stay-away margins from the cut locus.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StayAwayReport:
    """Observed and guaranteed cut-locus margins of a transport graph.

    sigma_observed is min(pi - d(x, T(x))) in the reduced convention and
    min d(x, T(x)) in the original-antenna convention; sigma_lower_bound
    is the measure-only guarantee from hemisphere masses.
    """

    sigma_observed: float
    sigma_lower_bound: float
    argmin_x: SpherePoint


def _graph_pairs(obj) -> tuple[np.ndarray, np.ndarray, DiscreteMeasure, DiscreteMeasure]:
    # Source/target rows of the transport graph: support pairs of a plan,
    # or the assignment graph of a total map.
    if isinstance(obj, TransportPlan):
        ii, jj, _ = obj.support()
        return obj.source.rows[ii], obj.target.rows[jj], obj.source, obj.target
    if isinstance(obj, TransportMap):
        if not obj.total:
            raise DomainError("stay-away margins need a total map")
        return obj.source.rows, obj.image_rows(), obj.source, obj.target
    raise DomainError("expected a TransportPlan or TransportMap")


def stay_away(obj, convention: str = "reduced") -> StayAwayReport:
    """Worst cut-locus margin over a transport graph.

    The reduced convention (quadratic cost, or the antenna problem after
    reflecting the target) measures min(pi - d(x, T(x))): the graph must
    avoid antipodal pairs. The original-antenna convention measures
    min d(x, T(x)): the graph must avoid the diagonal.

    Args:
        obj: TransportPlan (all support pairs) or total TransportMap.
        convention: "reduced" or "original-antenna".

    Returns:
        StayAwayReport; sigma_lower_bound comes from sigma_lower_bound()
        applied to the endpoint measures.

    Raises:
        DomainError: Split map or unknown convention.
    """
    xr, yr, mu0, mu1 = _graph_pairs(obj)
    d = rows_distance(xr, yr)
    if convention == "reduced":
        vals = math.pi - d
    elif convention == "original-antenna":
        vals = d
    else:
        raise DomainError(f"unknown stay-away convention: {convention!r}")
    k = int(np.argmin(vals))
    return StayAwayReport(
        sigma_observed=float(vals[k]),
        sigma_lower_bound=sigma_lower_bound(mu0, mu1),
        argmin_x=SpherePoint(xr[k]),
    )


def hemisphere_infimum(mu: DiscreteMeasure, probes: int = _HEMISPHERE_PROBES) -> float:
    """Infimum over probe centers z of the closed-hemisphere mass mu(D_z).

    Probe centers are a low-discrepancy grid plus the antipodes of the
    support, so concentrated measures report an infimum of zero.
    """
    centers = np.vstack([fibonacci_rows(mu.dim, probes), -mu.rows])
    masses = _ball_masses(centers, mu.rows, mu.weights, np.array([math.pi / 2.0]))
    return float(masses[:, 0].min())


def sigma_lower_bound(
    mu0: DiscreteMeasure, mu1: DiscreteMeasure, probes: int = _HEMISPHERE_PROBES
) -> float:
    """Measure-only stay-away radius for transport from mu0 to mu1.

    Computes inf_z mu1(D_z) over hemispheres, then returns the smallest r
    on a geometric grid such that some center x has mu0(B_4r(x)) at least
    that infimum. Concentrated sources reach the infimum at the first
    radius (no guarantee); spread-out sources need 4r comparable to a
    hemisphere radius and give a bound bounded away from zero.
    """
    if mu0.dim != mu1.dim:
        raise DomainError("measures live on spheres of different dimension")
    inf_mass = hemisphere_infimum(mu1, probes)
    grid = radius_grid(_SIGMA_RADIUS_MIN, math.pi / 2.0)
    centers = np.vstack([mu0.rows, fibonacci_rows(mu0.dim, probes)])
    masses = _ball_masses(centers, mu0.rows, mu0.weights, 4.0 * grid)
    hit = (masses >= inf_mass - 1e-12).any(axis=0)
    k = int(np.argmax(hit))
    return float(grid[k if hit[k] else -1])


def _domain_index(tmap: TransportMap, x) -> int:
    if isinstance(x, (int, np.integer)):
        k = int(x)
        if not 0 <= k < len(tmap.source):
            raise DomainError(f"domain index {k} out of range")
        return k
    rows = tmap.source.rows
    k = int(np.argmin(rows_distance(rows, x.coords[None, :])))
    if distance(SpherePoint(rows[k]), x) > 1e-9:
        raise DomainError("point is not in the map domain")
    return k


def lemma_del_loep_check(
    tmap: TransportMap,
    x1=None,
    x2=None,
    pairs: int = 1000,
    seed: int = 0,
) -> float:
    """Margin of the antipode-comparison inequality along a transport map.

    For domain points x1 != x2 with antipode hat_x1 = -x1, the inequality
    d(T(x2), hat_x1) <= 2 pi d(T(x1), hat_x1) / d(x1, x2) must hold; the
    margin is RHS - LHS. With x1 and x2 given (domain indices or points)
    the single-pair margin is returned, otherwise the minimum over
    uniformly sampled index pairs.

    Args:
        tmap: Total transport map.
        x1, x2: Optional pair; both or neither.
        pairs: Sample size when no pair is given.
        seed: Sampling seed.

    Returns:
        Worst margin; nonnegative up to discretization slack on maps
        extracted from optimal plans.

    Raises:
        DomainError: Split map, half-specified or coincident pair.
    """
    if not tmap.total:
        raise DomainError("the inequality check needs a total map")
    if (x1 is None) != (x2 is None):
        raise DomainError("provide both endpoints or neither")
    rows = tmap.source.rows
    image = tmap.image_rows()
    if x1 is not None:
        i = np.array([_domain_index(tmap, x1)])
        j = np.array([_domain_index(tmap, x2)])
        if i[0] == j[0]:
            raise DomainError("the inequality needs two distinct points")
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, len(rows), size=pairs)
        j = rng.integers(0, len(rows), size=pairs)
    sep = rows_distance(rows[i], rows[j])
    keep = sep > 1e-12
    if not keep.any():
        raise DomainError("all sampled pairs coincide")
    i, j, sep = i[keep], j[keep], sep[keep]
    hat = -rows[i]
    rhs = 2.0 * math.pi * rows_distance(image[i], hat) / sep
    lhs = rows_distance(image[j], hat)
    return float(np.min(rhs - lhs))


# ---------------------------------------------------------------------------
# Volume-based mass bound.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MassBoundReport:
    """Worst case of the volume mass bound mu0(B) >= m Vol(T(B)) - slack.

    worst_ratio is min over sampled balls of mu0(B) / (m Vol_est - slack);
    balls whose slack swallows the requirement are trivially satisfied.
    slack is the sampling slack at the worst ball, in mass units.
    """

    worst_ratio: float
    ok: bool
    slack: float
    worst_center: SpherePoint
    worst_radius: float


def volume_weights(rows: np.ndarray, resolution: int = 4096) -> np.ndarray:
    """Nearest-point cell volumes of a point set on the sphere.

    Assigns a quasi-uniform reference cloud of the given resolution to its
    nearest row and returns the covered volume per row; weights sum to the
    total sphere area.
    """
    rows = np.asarray(rows, dtype=float)
    reference = fibonacci_rows(rows.shape[1], resolution)
    counts = np.zeros(rows.shape[0])
    step = max(1, _CHUNK_ENTRIES // max(1, rows.shape[0]))
    for s in range(0, resolution, step):
        d = pairwise_distance(reference[s : s + step], rows)
        counts += np.bincount(np.argmin(d, axis=1), minlength=rows.shape[0])
    return counts * (sphere_area(rows.shape[1]) / resolution)


def mass_bound_check(
    tmap: TransportMap,
    mu0: DiscreteMeasure,
    m: float,
    balls: int = 100,
    radius_range: tuple = (0.25, 1.2),
    resolution: int = 4096,
    seed: int = 0,
) -> MassBoundReport:
    """Check mu0(B) >= m * Vol(T(B)) over random geodesic balls B.

    Vol(T(B)) is estimated as the total nearest-cell volume, within the
    map image, of the image points of B; the estimate carries an explicit
    sampling slack proportional to the square root of the number of
    reference points involved. Maps that push mu0 forward to a measure
    with density at least m satisfy the bound; maps that park small mass
    on top of full-size image cells violate it.

    Args:
        tmap: Total transport map.
        mu0: Measure on the map domain (usually tmap.source).
        m: Claimed lower bound on the target density.
        balls: Number of random balls.
        radius_range: (lo, hi) ball radii.
        resolution: Reference-cloud size for volume estimates.
        seed: Ball sampling seed.

    Returns:
        MassBoundReport; ok means every sampled ball satisfied the bound.

    Raises:
        DomainError: Split map, mismatched sizes, or bad parameters.
    """
    if not tmap.total:
        raise DomainError("the mass bound needs a total map")
    if len(mu0) != len(tmap.source):
        raise DomainError("mu0 does not match the map domain")
    if m <= 0.0:
        raise DomainError("density lower bound must be positive")
    lo, hi = float(radius_range[0]), float(radius_range[1])
    if not 0.0 < lo <= hi:
        raise DomainError("radius range must satisfy 0 < lo <= hi")
    dim = mu0.dim
    unit = sphere_area(dim) / resolution
    image_ids = np.unique(tmap.target_index)
    image = tmap.target.rows[image_ids]
    vol = volume_weights(image, resolution)
    # Column k of this lookup is the image-cell id of source point k.
    cell_of = np.searchsorted(image_ids, tmap.target_index)

    rng = np.random.default_rng(seed)
    centers = sample_sphere(rng, balls, dim)
    radii = rng.uniform(lo, hi, size=balls)
    inside = pairwise_distance(centers, mu0.rows) <= radii[:, None]

    worst = math.inf
    worst_k = 0
    worst_slack = 0.0
    for k in range(balls):
        sel = inside[k]
        if not sel.any():
            continue
        mass = float(mu0.weights[sel].sum())
        cells = np.unique(cell_of[sel])
        vol_est = float(vol[cells].sum())
        slack = m * unit * (2.0 + 2.0 * math.sqrt(vol_est / unit))
        required = m * vol_est - slack
        if required <= 0.0:
            continue
        ratio = mass / required
        if ratio < worst:
            worst, worst_k, worst_slack = ratio, k, slack
    return MassBoundReport(
        worst_ratio=worst,
        ok=bool(worst >= 1.0),
        slack=worst_slack,
        worst_center=SpherePoint(centers[worst_k]),
        worst_radius=float(radii[worst_k]),
    )


# ---------------------------------------------------------------------------
# Monge-Ampere residual on a geodesic chart.
# ---------------------------------------------------------------------------


def uniform_density(dim: int) -> Callable:
    """Constant probability density on the unit sphere in R^dim."""
    value = 1.0 / sphere_area(dim)
    return lambda point: value


def chart_coordinate_potential(
    center: SpherePoint, axis: int = 0, scale: float = 1.0
) -> Callable:
    """Potential equal to scale times one normal coordinate of a chart.

    The chart is the geodesic chart at the given center with the
    deterministic frame; the returned callable maps (k, n) rows to the
    scaled coordinate values. Smooth away from the antipode of center.
    """
    frame = orthonormal_frame(center)
    if not 0 <= axis < frame.axes.shape[0]:
        raise DomainError(f"chart axis {axis} out of range")
    e = frame.axes[axis]
    base = center.coords[None, :]

    def values(rows: np.ndarray) -> np.ndarray:
        return scale * (log_rows(base, np.asarray(rows, dtype=float)) @ e)

    return values


def _phi_gradient(
    phi: Callable, x: SpherePoint, frame: TangentFrame, step: float
) -> np.ndarray:
    k = frame.axes.shape[0]
    pts = exp_rows(
        x.coords[None, :],
        step * np.concatenate([frame.axes, -frame.axes], axis=0),
    )
    vals = np.asarray(phi(pts), dtype=float)
    return (vals[:k] - vals[k:]) / (2.0 * step)


def _phi_hessian(
    phi: Callable, x: SpherePoint, frame: TangentFrame, step: float
) -> np.ndarray:
    # Second differences along geodesics through x give the intrinsic
    # Hessian in the frame; mixed entries come from the two diagonal
    # directions (e_j +- e_k)/sqrt(2).
    k = frame.axes.shape[0]
    dirs = [a for a in frame.axes]
    pair_at = {}
    for jj in range(k):
        for kk in range(jj + 1, k):
            pair_at[(jj, kk)] = len(dirs)
            dirs.append((frame.axes[jj] + frame.axes[kk]) / math.sqrt(2.0))
            dirs.append((frame.axes[jj] - frame.axes[kk]) / math.sqrt(2.0))
    dirs = np.asarray(dirs)
    pts = exp_rows(x.coords[None, :], step * np.concatenate([dirs, -dirs], axis=0))
    vals = np.asarray(phi(pts), dtype=float)
    center = float(np.asarray(phi(x.coords[None, :]), dtype=float)[0])
    second = (vals[: len(dirs)] + vals[len(dirs) :] - 2.0 * center) / step**2
    hess = np.zeros((k, k))
    for jj in range(k):
        hess[jj, jj] = second[jj]
    for (jj, kk), at in pair_at.items():
        hess[jj, kk] = hess[kk, jj] = 0.5 * (second[at] - second[at + 1])
    return hess


def _map_point(
    phi: Callable, x: SpherePoint, frame: TangentFrame, profile: CostProfile, step: float
) -> SpherePoint:
    grad = _phi_gradient(phi, x, frame, step)
    vec = TangentVector(x, grad @ frame.axes)
    try:
        return c_exp(profile, vec)
    except GradientOutOfRange as err:
        raise CutLocusError(f"potential gradient leaves the admissible ball: {err}")


def pushforward_density(
    phi: Callable,
    rho0: Callable,
    x: SpherePoint,
    profile: CostProfile,
    step: float = _FD_STEP,
) -> tuple:
    """Density of the pushforward of rho0 under the map of a potential.

    Differentiates the map G(x) = c_exp_x(grad phi(x)) by central
    differences in an orthonormal frame and returns (G(x), rho1(G(x)))
    with rho1 = rho0 / |det DG| by the change of variables.

    Raises:
        CutLocusError: The map leaves the admissible region near x.
        DomainError: The map is numerically singular at x.
    """
    frame = orthonormal_frame(x)
    y = _map_point(phi, x, frame, profile, step)
    frame_y = orthonormal_frame(y)
    cols = []
    for axis in frame.axes:
        shifted = []
        for sgn in (1.0, -1.0):
            xs = SpherePoint(exp_rows(x.coords[None, :], sgn * step * axis[None, :])[0])
            ys = _map_point(phi, xs, orthonormal_frame(xs), profile, step)
            shifted.append(frame_y.axes @ log_map(y, ys).vec)
        cols.append((shifted[0] - shifted[1]) / (2.0 * step))
    jac = np.stack(cols, axis=1)
    det = abs(float(np.linalg.det(jac)))
    if not det > 1e-12:
        raise DomainError("transport map is numerically singular at x")
    return y, float(rho0(x)) / det


def ma_residual(
    phi: Callable,
    rho0: Callable,
    rho1: Callable,
    x: SpherePoint,
    profile: CostProfile,
    step: float = _FD_STEP,
    frame: TangentFrame | None = None,
) -> float:
    """Monge-Ampere residual of a potential at a point.

    Evaluates det(D2 phi + Hxx) - (rho0 / rho1(G)) |det Hxy| where G is
    the map of the potential, Hxx and Hxy are the cost Hessian blocks at
    (x, G(x)), and D2 phi is the intrinsic Hessian by geodesic finite
    differences. Zero for the potential solving the transport of rho0 to
    rho1; determinants make the value frame-independent.

    Args:
        phi: Potential; callable on (k, n) rows returning (k,) values.
        rho0, rho1: Densities; callables on a SpherePoint.
        x: Evaluation point.
        profile: Cost profile.
        step: Finite-difference step.
        frame: Optional frame at x used for both Hessians.

    Returns:
        Signed residual.

    Raises:
        CutLocusError: G(x) leaves the admissible region.
    """
    if frame is None:
        frame = orthonormal_frame(x)
    elif frame.base != x:
        raise DomainError("frame is not based at the evaluation point")
    y = _map_point(phi, x, frame, profile, step)
    # At the diagonal both Hessian blocks have isotropic limits; evaluate
    # them at a tiny displaced point instead of the singular pair (x, x).
    if distance(x, y) < _NEAR_DIAGONAL:
        yh = SpherePoint(exp_rows(x.coords[None, :], 1e-7 * frame.axes[:1])[0])
    else:
        yh = y
    hess = _phi_hessian(phi, x, frame, step)
    hxx = hessian_xx(profile, x, yh, frame=frame.axes)
    hxy = hessian_xy(profile, x, yh, frame_x=frame.axes)
    lhs = float(np.linalg.det(hess + hxx))
    rhs = float(rho0(x)) / float(rho1(y)) * abs(float(np.linalg.det(hxy)))
    return lhs - rhs
