"""Finite-max potentials, discrete transforms, contact sets, subdifferentials.

A potential here is phi(x) = max_i { -c(x, y_i) + a_i } over finitely many
supports. The module certifies its geometry on dense grids: the discrete
c-transform, the contact set of grid points realizing the global minimum of
phi + c(., y), the subdifferential as a convex hull of active gradients, and
the global-minimum property behind the identity between subdifferential and
c-subdifferential. All scans are vectorized over grid nodes; potentials are
immutable.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .costs import CostProfile, c_exp, grad_x, profile_by_name, raw_cost
from .errors import (
    AntipodalEndpoint,
    ConfigError,
    DomainError,
    DominatedSupportError,
)
from .geometry import (
    SpherePoint,
    TangentVector,
    distance,
    exp_map,
    exp_rows,
    fibonacci_rows,
    log_map,
    log_rows,
    rows_distance,
    sample_sphere,
)

__all__ = [
    "CConvexPotential",
    "ContactSet",
    "Subdifferential",
    "SubdiffCheck",
    "CriticalPointReport",
    "active_supports",
    "c_transform",
    "contact_set",
    "critical_point_classifier",
    "default_tolerance",
    "evaluate",
    "evaluate_rows",
    "grid_covering_radius",
    "minimization_gap",
    "read_potential",
    "ridge_arc",
    "ridge_point",
    "ridge_samples",
    "subdifferential",
    "verify_subdiff_eq_csubdiff",
    "write_potential",
]


@dataclass(frozen=True)
class CConvexPotential:
    """Potential phi(x) = max_i { -c(x, y_i) + a_i } with finitely many supports.

    Construction verifies on a sample grid that the potential is finite and
    that every support strictly attains the max somewhere; a support that
    never wins (including an exact duplicate) raises DominatedSupportError.
    Pass check_grid=0 to skip the grid test.
    """

    supports: tuple
    profile: CostProfile
    check_grid: InitVar[int] = 4096

    def __post_init__(self, check_grid):
        supports = tuple((y, float(a)) for y, a in self.supports)
        if not supports:
            raise DominatedSupportError("potential needs at least one support")
        dim = supports[0][0].dim
        if any(y.dim != dim for y, _ in supports):
            raise DomainError("supports live on spheres of different dimensions")
        object.__setattr__(self, "supports", supports)
        if check_grid:
            _validate_supports(self, int(check_grid))

    @property
    def dim(self) -> int:
        """Ambient dimension n."""
        return self.supports[0][0].dim

    @cached_property
    def support_rows(self) -> np.ndarray:
        """(m, n) array of support coordinates."""
        rows = np.stack([y.coords for y, _ in self.supports])
        rows.setflags(write=False)
        return rows

    @cached_property
    def offsets(self) -> np.ndarray:
        """(m,) array of support offsets a_i."""
        a = np.array([a for _, a in self.supports], dtype=float)
        a.setflags(write=False)
        return a


def branch_rows(phi: CConvexPotential, rows: np.ndarray) -> np.ndarray:
    """Per-support values -c(x, y_i) + a_i at each row.

    Args:
        phi: Potential.
        rows: (N, n) unit rows.

    Returns:
        (N, m) array; -inf marks a cost blow-up at an exact cut pair.
    """
    gram = np.asarray(rows, dtype=float) @ phi.support_rows.T
    np.clip(gram, -1.0, 1.0, out=gram)
    with np.errstate(divide="ignore"):
        vals = np.asarray(phi.profile.f(np.arccos(gram)), dtype=float)
    return phi.offsets[None, :] - vals


def evaluate_rows(phi: CConvexPotential, rows: np.ndarray) -> np.ndarray:
    """Potential values at each row: the max over support branches."""
    return branch_rows(phi, rows).max(axis=1)


def evaluate(phi: CConvexPotential, x: SpherePoint) -> float:
    """Potential value at a point; ties are reported by active_supports."""
    return float(evaluate_rows(phi, x.coords[None, :])[0])


def active_supports(phi: CConvexPotential, x: SpherePoint, tol: float = 1e-10) -> list:
    """Indices of supports attaining the max at x within tol."""
    vals = branch_rows(phi, x.coords[None, :])[0]
    return [int(i) for i in np.flatnonzero(vals >= vals.max() - tol)]


def _validate_supports(phi: CConvexPotential, grid_size: int) -> None:
    """Grid test: finiteness, and every support strictly wins somewhere."""
    grid = np.vstack([fibonacci_rows(phi.dim, grid_size), phi.support_rows])
    vals = branch_rows(phi, grid)
    if not np.isfinite(vals.max(axis=1)).all():
        raise DomainError("potential is not finite on the validation grid")
    m = vals.shape[1]
    if m == 1:
        return
    best = vals.max(axis=1)
    arg = vals.argmax(axis=1)
    second = np.partition(vals, -2, axis=1)[:, -2]
    for i in range(m):
        rival = np.where(arg == i, second, best)
        if float((vals[:, i] - rival).max()) <= 1e-12:
            raise DominatedSupportError(f"support {i} never attains the maximum")


def grid_covering_radius(rows: np.ndarray, probes: int = 2048, seed: int = 0) -> float:
    """Estimated covering radius: the largest hole seen by random probes."""
    rng = np.random.default_rng(seed)
    pts = sample_sphere(rng, probes, rows.shape[1])
    worst = 0.0
    for i in range(0, probes, 512):
        gram = np.clip(pts[i : i + 512] @ rows.T, -1.0, 1.0)
        worst = max(worst, float(np.arccos(gram.max(axis=1)).max()))
    return worst


def _lipschitz_bound(phi: CConvexPotential, grid_rows: np.ndarray, spacing: float) -> float:
    """Gradient bound for phi + c(., y) on the grid, y anywhere off the cut."""
    gram = np.clip(np.asarray(grid_rows) @ phi.support_rows.T, -1.0, 1.0)
    d_max = float(np.arccos(gram.min()))
    cap = phi.profile.domain_cut - 2.0 * spacing
    lip_phi = float(phi.profile.f1(min(d_max, cap)))
    lip_cost = float(phi.profile.f1(cap))
    return lip_phi + lip_cost


def default_tolerance(phi: CConvexPotential, grid_rows: np.ndarray, spacing: float | None = None) -> float:
    """Certification tolerance 1e-6 + 2 L spacing with L the gradient bound.

    Safe against false exclusion of true contact points at grid resolution.
    Sharper discrimination (singleton sets, segment Hausdorff bounds) needs an
    explicit tighter tolerance together with an evaluation grid containing the
    probe point.
    """
    if spacing is None:
        spacing = grid_covering_radius(grid_rows)
    return 1e-6 + 2.0 * _lipschitz_bound(phi, grid_rows, spacing) * spacing


def c_transform(
    values: np.ndarray,
    grid_rows: np.ndarray,
    profile: CostProfile,
    target_rows: np.ndarray | None = None,
    chunk: int = 2048,
    cost_cache: np.ndarray | None = None,
) -> np.ndarray:
    """Discrete c-transform max_y { -c(x, y) - phi(y) } over the sample grid.

    Args:
        values: (N,) potential samples on grid_rows.
        grid_rows: (N, n) unit rows carrying the samples.
        profile: Cost profile.
        target_rows: (T, n) evaluation rows; defaults to grid_rows.
        chunk: Evaluation rows per block.
        cost_cache: Optional precomputed (T, N) cost matrix.

    Returns:
        (T,) transform samples, exact up to the covering radius times the
        cost's gradient bound.
    """
    grid_rows = np.asarray(grid_rows, dtype=float)
    values = np.asarray(values, dtype=float)
    targets = grid_rows if target_rows is None else np.asarray(target_rows, dtype=float)
    out = np.empty(targets.shape[0])
    for i in range(0, targets.shape[0], chunk):
        block = targets[i : i + chunk]
        if cost_cache is not None:
            cost_block = np.asarray(cost_cache[i : i + chunk], dtype=float)
        else:
            gram = np.clip(block @ grid_rows.T, -1.0, 1.0)
            with np.errstate(divide="ignore"):
                cost_block = np.asarray(profile.f(np.arccos(gram)), dtype=float)
        with np.errstate(invalid="ignore"):
            term = -cost_block - values[None, :]
        term[np.isnan(term)] = -np.inf
        out[i : i + chunk] = term.max(axis=1)
    return out


@dataclass
class ContactSet:
    """Grid points realizing the global minimum of phi + c(., y) at x."""

    x: SpherePoint
    member_indices: np.ndarray
    member_rows: np.ndarray
    is_full_sphere: bool
    tol: float

    @property
    def members(self) -> list:
        """Members as sphere points."""
        return [SpherePoint(row) for row in self.member_rows]


def contact_set(
    phi: CConvexPotential,
    x: SpherePoint,
    grid_rows: np.ndarray,
    tol: float | None = None,
    chunk: int = 1024,
) -> ContactSet:
    """Contact set at x: candidates y where x min-dominates the grid.

    A grid point y is a member when phi(x) + c(x, y) stays within tol of the
    grid minimum of phi + c(., y). For sharp membership put x (and any
    predicted members) on the grid and pass a tight tol; the default
    tolerance only certifies at grid resolution. A potential whose value at x
    is -inf sits at a cost pole: every h_y is then minimized at x and the
    contact set is the whole sphere.

    Raises:
        DomainError: The potential has a pole at a grid node other than x.
    """
    grid_rows = np.asarray(grid_rows, dtype=float)
    n_grid = grid_rows.shape[0]
    phi_x = evaluate(phi, x)
    if np.isneginf(phi_x):
        return ContactSet(x, np.arange(n_grid), grid_rows.copy(), True, np.inf)
    phi_grid = evaluate_rows(phi, grid_rows)
    if np.isneginf(phi_grid).any():
        raise DomainError("potential has a pole on the evaluation grid")
    if tol is None:
        tol = default_tolerance(phi, grid_rows)
    mins = np.full(n_grid, np.inf)
    for i in range(0, n_grid, chunk):
        gram = np.clip(grid_rows[i : i + chunk] @ grid_rows.T, -1.0, 1.0)
        with np.errstate(divide="ignore"):
            block = np.asarray(phi.profile.f(np.arccos(gram)), dtype=float)
        block += phi_grid[i : i + chunk, None]
        np.minimum(mins, block.min(axis=0), out=mins)
    gram_x = np.clip(grid_rows @ x.coords, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        vals_x = phi_x + np.asarray(phi.profile.f(np.arccos(gram_x)), dtype=float)
    with np.errstate(invalid="ignore"):
        mask = vals_x - mins <= tol
    mask &= ~np.isnan(vals_x - mins)
    idx = np.flatnonzero(mask)
    return ContactSet(x, idx, grid_rows[idx], bool(mask.all()), float(tol))


def minimization_gap(
    profile: CostProfile,
    grid_values: np.ndarray,
    grid_rows: np.ndarray,
    x: SpherePoint,
    y: SpherePoint,
    value_x: float,
) -> float:
    """Excess value_x + c(x, y) - min over the grid of (values + c(., y)).

    Nonpositive exactly when x min-dominates every grid node for the target
    y. This is the falsifiable core of the contact and subdifferential
    checks; an adversarial non-c-convex input makes it go positive.
    """
    gram = np.clip(np.asarray(grid_rows) @ y.coords, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        col = np.asarray(grid_values, dtype=float) + np.asarray(
            profile.f(np.arccos(gram)), dtype=float
        )
    return float(value_x + raw_cost(profile, x, y) - col.min())


def ridge_point(
    phi: CConvexPotential,
    i: int,
    j: int,
    grid_rows: np.ndarray | None = None,
    iters: int = 80,
) -> SpherePoint:
    """Point where branches i and j tie and jointly attain the max.

    Bisects the branch difference along the geodesic between the cells where
    each branch wins (grid argmax representatives when a grid is given, the
    supports themselves otherwise).

    Raises:
        DomainError: No sign change between the representatives, or the tie
            point is dominated by a third branch.
    """
    if grid_rows is None:
        rep_i, rep_j = phi.supports[i][0], phi.supports[j][0]
    else:
        vals = branch_rows(phi, np.asarray(grid_rows, dtype=float))
        best = vals.max(axis=1)
        arg = vals.argmax(axis=1)
        second = np.partition(vals, -2, axis=1)[:, -2]
        reps = []
        for k in (i, j):
            rival = np.where(arg == k, second, best)
            reps.append(SpherePoint(grid_rows[int(np.argmax(vals[:, k] - rival))]))
        rep_i, rep_j = reps

    def gap(point: SpherePoint) -> float:
        vals = branch_rows(phi, point.coords[None, :])[0]
        return float(vals[i] - vals[j])

    v = log_map(rep_i, rep_j)
    lo, hi = 0.0, 1.0
    g_lo, g_hi = gap(rep_i), gap(rep_j)
    if not (g_lo > 0.0 > g_hi):
        raise DomainError(f"branches {i},{j} do not exchange along the cell geodesic")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if gap(exp_map(rep_i, mid * v)) > 0.0:
            lo = mid
        else:
            hi = mid
    point = exp_map(rep_i, 0.5 * (lo + hi) * v)
    vals = branch_rows(phi, point.coords[None, :])[0]
    scale = max(1.0, float(np.abs(vals).max()))
    if abs(vals[i] - vals[j]) > 1e-9 * scale:
        raise DomainError("bisection did not resolve the branch tie")
    if vals.max() > max(vals[i], vals[j]) + 1e-9 * scale:
        raise DomainError(f"tie of branches {i},{j} is dominated by another branch")
    return point


def _tie_bisect(
    phi: CConvexPotential, i: int, j: int, a: np.ndarray, b: np.ndarray, iters: int
) -> np.ndarray:
    """Bisect the branch difference along the geodesics a -> b; keep ties.

    Rows that fail to tie to 1e-9 or whose tie is dominated by a third
    branch are dropped.
    """
    vel = log_rows(a, b)
    lo = np.zeros(a.shape[0])
    hi = np.ones(a.shape[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        g = branch_rows(phi, exp_rows(a, mid[:, None] * vel))
        pos = g[:, i] - g[:, j] > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    ties = exp_rows(a, (0.5 * (lo + hi))[:, None] * vel)
    g = branch_rows(phi, ties)
    scale = np.maximum(1.0, np.abs(g).max(axis=1))
    ok = np.abs(g[:, i] - g[:, j]) <= 1e-9 * scale
    ok &= g.max(axis=1) <= np.maximum(g[:, i], g[:, j]) + 1e-9 * scale
    return ties[ok]


def _branch_gap_grad_rows(
    phi: CConvexPotential, i: int, j: int, rows: np.ndarray
) -> np.ndarray:
    """Tangent gradient rows of branch i minus branch j at the given rows."""
    grad = np.zeros_like(rows)
    for k, sign in ((i, 1.0), (j, -1.0)):
        y = phi.support_rows[k]
        dots = np.clip(rows @ y, -1.0, 1.0)
        perp = y[None, :] - dots[:, None] * rows
        nrm = np.linalg.norm(perp, axis=1)
        u = perp / np.maximum(nrm, 1e-300)[:, None]
        grad += sign * phi.profile.f1(np.arccos(dots))[:, None] * u
    return grad


def _chain_order(rows: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbor walk through the rows, as index order."""
    n = rows.shape[0]
    dots = rows @ rows.T
    order = np.empty(n, dtype=int)
    used = np.zeros(n, dtype=bool)
    k = 0
    for t in range(n):
        order[t] = k
        used[k] = True
        if t < n - 1:
            row = np.where(used, -np.inf, dots[k])
            k = int(np.argmax(row))
    return order


def ridge_samples(
    phi: CConvexPotential,
    i: int,
    j: int,
    grid_rows: np.ndarray,
    count: int = 512,
    iters: int = 60,
) -> np.ndarray:
    """Rows of tie points of branches i and j, traced along the whole ridge.

    Seeds ties by bisecting between collar nodes straddling the tie curve,
    then walks the curve and inserts projected midpoints until consecutive
    samples sit much closer than the grid spacing. Pairs that fail to tie or
    whose tie is dominated by a third branch are dropped. The final spacing
    matters: grid certification contests the minimum of the support function
    along the ridge, and its resolution error is quadratic in the spacing of
    the ridge samples near the true minimizer.

    Raises:
        DomainError: One of the two branches wins nowhere on the grid.
    """
    grid_rows = np.asarray(grid_rows, dtype=float)
    vals = branch_rows(phi, grid_rows)
    arg = vals.argmax(axis=1)
    g = vals[:, i] - vals[:, j]
    side_i = np.flatnonzero((arg == i) & (g > 0))
    side_j = np.flatnonzero((arg == j) & (g < 0))
    if side_i.size == 0 or side_j.size == 0:
        raise DomainError(f"branch {i} or {j} wins nowhere on the grid")
    dist, nn = cKDTree(grid_rows[side_j]).query(grid_rows[side_i])
    spacing = grid_covering_radius(grid_rows)
    collar = np.flatnonzero(dist <= 2.0 * np.sin(min(2.5 * spacing, np.pi) / 2.0))
    if collar.size == 0:
        collar = np.array([int(np.argmin(dist))])
    a = grid_rows[side_i[collar]]
    b = grid_rows[side_j[nn[collar]]]
    keep = np.einsum("kn,kn->k", a, b) > -1.0 + 1e-6
    ties = _tie_bisect(phi, i, j, a[keep], b[keep], iters)
    if ties.shape[0] == 0:
        return ties
    for _ in range(6):
        order = _chain_order(ties)
        ties = ties[order]
        gaps = rows_distance(ties, np.roll(ties, -1, axis=0))
        span = gaps[gaps <= 0.6].sum()
        goal = max(span / max(count, 8), spacing / 8.0)
        need = np.flatnonzero((gaps > goal) & (gaps <= 0.6))
        if need.size == 0 or ties.shape[0] >= count:
            break
        mids = ties[need] + ties[(need + 1) % ties.shape[0]]
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        fresh = _project_to_ridge(phi, i, j, mids, iters)
        if fresh.shape[0] == 0:
            break
        merged = np.vstack([ties, fresh])
        drop = np.zeros(merged.shape[0], dtype=bool)
        for p, q in cKDTree(merged).query_pairs(2.0 * np.sin(goal / 8.0)):
            drop[max(p, q)] = True
        ties = merged[~drop]
    if ties.shape[0] > count:
        ties = ties[_chain_order(ties)]
        ties = ties[np.linspace(0, ties.shape[0] - 1, count).astype(int)]
    return ties


def ridge_arc(
    phi: CConvexPotential,
    i: int,
    j: int,
    x: SpherePoint,
    half_width: float = 1.0,
    count: int = 700,
    iters: int = 80,
) -> np.ndarray:
    """Exact tie points of branches i and j along the ridge through x.

    Walks the ridge tangent at x to both sides with geometrically graded
    steps (dense near x, a fixed relative spacing outward) and projects each
    step back onto the tie curve. Sharp contact certification needs this
    near field: the support function has a V-shaped kink across the ridge,
    so only nodes sitting on the tie curve itself can contest the shallow
    minima that off-segment targets develop near a ridge point, and both the
    depth and the distance from x of those minima scale with the target's
    offset, which makes relative spacing the right grading.

    Raises:
        DomainError: x is not a tie point of branches i and j.
    """
    row = x.coords[None, :]
    g = branch_rows(phi, row)[0]
    scale = max(1.0, float(np.abs(g).max()))
    if abs(g[i] - g[j]) > 1e-8 * scale:
        raise DomainError(f"base point is not a tie of branches {i},{j}")
    w = _branch_gap_grad_rows(phi, i, j, row)[0]
    nrm = np.linalg.norm(w)
    if nrm < 1e-12:
        raise DomainError("branch gap gradient vanishes at the base point")
    u = np.cross(x.coords, w / nrm)
    half = np.geomspace(1e-4, half_width, count // 2)
    t = np.concatenate([-half[::-1], half])
    seeds = exp_rows(np.repeat(row, t.size, axis=0), t[:, None] * u[None, :])
    ties = _project_to_ridge(phi, i, j, seeds, iters)
    return np.vstack([ties, row])


def _project_to_ridge(
    phi: CConvexPotential, i: int, j: int, rows: np.ndarray, iters: int
) -> np.ndarray:
    """Pull near-ridge rows onto the tie curve along the branch-gap gradient."""
    g = branch_rows(phi, rows)
    gap = g[:, i] - g[:, j]
    grad = _branch_gap_grad_rows(phi, i, j, rows)
    nrm = np.linalg.norm(grad, axis=1)
    alive = nrm > 1e-12
    rows, gap, grad, nrm = rows[alive], gap[alive], grad[alive], nrm[alive]
    unit = grad / nrm[:, None]
    eta = np.minimum(4.0 * np.abs(gap) / nrm + 1e-6, 0.3)
    good = np.zeros(rows.shape[0], dtype=bool)
    for _ in range(3):
        plus = exp_rows(rows, eta[:, None] * unit)
        minus = exp_rows(rows, -eta[:, None] * unit)
        gp = branch_rows(phi, plus)
        gm = branch_rows(phi, minus)
        good = (gp[:, i] - gp[:, j] > 0.0) & (gm[:, i] - gm[:, j] < 0.0)
        if good.all():
            break
        eta = np.where(good, eta, np.minimum(eta * 4.0, 0.3))
    if not good.any():
        return np.empty((0, rows.shape[1]))
    return _tie_bisect(phi, i, j, plus[good], minus[good], iters)


@dataclass
class Subdifferential:
    """Convex set of admissible gradients at x, stored by its extreme points."""

    x: SpherePoint
    vertices: tuple

    def sample_points(self) -> list:
        """Vertices plus pairwise midpoints, for global-minimum probing."""
        probes = list(self.vertices)
        for a in range(len(self.vertices)):
            for b in range(a + 1, len(self.vertices)):
                probes.append(
                    TangentVector(
                        self.x,
                        0.5 * (self.vertices[a].vec + self.vertices[b].vec),
                    )
                )
        return probes


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Indices of the convex hull's extreme points, robust to flat inputs."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] <= 2:
        return np.arange(pts.shape[0])
    center = pts.mean(axis=0)
    shifted = pts - center
    u, s, vt = np.linalg.svd(shifted, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
    if rank == 0:
        return np.array([0])
    reduced = shifted @ vt[:rank].T
    if rank == 1:
        line = reduced[:, 0]
        return np.unique([int(np.argmin(line)), int(np.argmax(line))])
    if pts.shape[0] <= rank + 1:
        return np.arange(pts.shape[0])
    try:
        return np.sort(ConvexHull(reduced).vertices)
    except QhullError:
        keep = [int(np.argmin(reduced[:, 0])), int(np.argmax(reduced[:, 0]))]
        keep += [int(np.argmin(reduced[:, 1])), int(np.argmax(reduced[:, 1]))]
        return np.unique(keep)


def subdifferential(phi: CConvexPotential, x: SpherePoint, tol: float = 1e-10) -> Subdifferential:
    """Subdifferential at x: convex hull of the active-support gradients.

    Raises:
        AntipodalEndpoint: An active support sits at the antipode of x, where
            the admissible-gradient set degenerates to the full closed ball.
    """
    active = active_supports(phi, x, tol)
    vecs = []
    for i in active:
        y = phi.supports[i][0]
        if distance(x, y) >= np.pi - 1e-9:
            raise AntipodalEndpoint("active support at the antipode of x")
        vecs.append((-1.0 * grad_x(phi.profile, x, y)).vec)
    pts = np.asarray(vecs)
    keep = []
    for k in range(pts.shape[0]):
        if all(np.linalg.norm(pts[k] - pts[j]) > 1e-12 for j in keep):
            keep.append(k)
    pts = pts[keep]
    verts = _hull_vertices(pts)
    return Subdifferential(x, tuple(TangentVector(x, pts[v]) for v in verts))


@dataclass
class SubdiffCheck:
    """Outcome of the global-minimum probe of subdifferential samples."""

    ok: bool
    witness: TangentVector | None
    gaps: np.ndarray
    tol: float

    def __bool__(self) -> bool:
        return self.ok


def verify_subdiff_eq_csubdiff(
    phi: CConvexPotential,
    x: SpherePoint,
    grid_rows: np.ndarray,
    tol: float | None = None,
) -> SubdiffCheck:
    """Check that subdifferential samples are witnessed by global minima.

    For p among the subdifferential's vertices and midpoints, maps y via the
    cost exponential and verifies that x min-dominates the grid for
    phi + c(., y). Returns the first violating p as witness when the check
    fails.
    """
    grid_rows = np.asarray(grid_rows, dtype=float)
    if tol is None:
        tol = default_tolerance(phi, grid_rows)
    sub = subdifferential(phi, x)
    phi_grid = evaluate_rows(phi, grid_rows)
    phi_x = evaluate(phi, x)
    gaps = []
    witness = None
    for p in sub.sample_points():
        y = c_exp(phi.profile, p)
        gap = minimization_gap(phi.profile, phi_grid, grid_rows, x, y, phi_x)
        gaps.append(gap)
        if witness is None and gap > tol:
            witness = p
    return SubdiffCheck(witness is None, witness, np.asarray(gaps), float(tol))


@dataclass
class CriticalPointReport:
    """Grid classification of the critical points of h = phi + c(., y)."""

    minima: np.ndarray
    maxima: np.ndarray
    argmin_index: int
    argmax_index: int
    global_min: float
    global_max: float
    antipode_gap: float
    spurious: np.ndarray
    value_tol: float
    resolution: float

    @property
    def passed(self) -> bool:
        """Max sits at the antipode and every other critical value is the min."""
        return self.antipode_gap <= self.resolution and self.spurious.size == 0


def critical_point_classifier(
    phi: CConvexPotential,
    y: SpherePoint,
    grid_rows: np.ndarray,
    radius_factor: float = 2.2,
    value_tol: float | None = None,
    resolution: float | None = None,
) -> CriticalPointReport:
    """Locate and classify grid-local extrema of h = phi + c(., y).

    Flags local minima and maxima against metric-ball neighborhoods of radius
    radius_factor times the covering radius (balls, unlike fixed-k nearest
    neighbors, see along narrow valleys), then checks the two structural
    claims: grid-global maximizers lie within the grid resolution of the
    antipode of y, and every other critical value agrees with the global
    minimum within value_tol. Plateau nodes (flagged as both) count as
    minima.
    """
    grid_rows = np.asarray(grid_rows, dtype=float)
    spacing = grid_covering_radius(grid_rows)
    if resolution is None:
        resolution = 2.0 * spacing
    if value_tol is None:
        # Valley nodes flagged as discrete minima can sit a full gradient
        # step above the min when the landscape is nearly flat along the
        # ridge, so the certification modulus is Lipschitz-scaled.
        value_tol = 1e-6 + 2.0 * _lipschitz_bound(phi, grid_rows, spacing) * spacing
    phi_grid = evaluate_rows(phi, grid_rows)
    gram = np.clip(grid_rows @ y.coords, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        h = phi_grid + np.asarray(phi.profile.f(np.arccos(gram)), dtype=float)
    tree = cKDTree(grid_rows)
    chord = 2.0 * np.sin(min(radius_factor * spacing, np.pi) / 2.0)
    balls = tree.query_ball_point(grid_rows, chord)
    is_min = np.empty(h.size, dtype=bool)
    is_max = np.empty(h.size, dtype=bool)
    for k, ball in enumerate(balls):
        vals = h[ball]
        is_min[k] = h[k] <= vals.min() + 1e-12
        is_max[k] = h[k] >= vals.max() - 1e-12
    finite = np.isfinite(h)
    is_min &= finite
    minima = np.flatnonzero(is_min)
    maxima = np.flatnonzero(is_max & ~is_min)
    global_min = float(h[finite].min())
    global_max = float(h.max())
    antipode = -y.coords
    if np.isfinite(global_max):
        top_idx = np.flatnonzero(h >= global_max - 1e-9 * max(1.0, abs(global_max)))
    else:
        top_idx = np.flatnonzero(np.isposinf(h))
    gaps = np.arccos(np.clip(grid_rows[top_idx] @ antipode, -1.0, 1.0))
    antipode_gap = float(gaps.max()) if gaps.size else np.inf
    near_pole = np.arccos(np.clip(grid_rows @ antipode, -1.0, 1.0)) <= resolution
    spurious = []
    for k in minima:
        if h[k] > global_min + value_tol:
            spurious.append(k)
    for k in maxima:
        if not near_pole[k] and abs(h[k] - global_min) > value_tol:
            spurious.append(k)
    argmin_index = int(np.flatnonzero(finite)[np.argmin(h[finite])])
    return CriticalPointReport(
        minima,
        maxima,
        argmin_index,
        int(np.argmax(h)),
        global_min,
        global_max,
        antipode_gap,
        np.asarray(sorted(spurious), dtype=int),
        float(value_tol),
        float(resolution),
    )


def write_potential(path, phi: CConvexPotential) -> None:
    """Save a potential as JSON with the profile name and support list."""
    if phi.profile.kind == "custom":
        raise ConfigError("only named profiles serialize; custom profiles do not")
    payload = {
        "profile": phi.profile.kind,
        "supports": [
            {"y": [float(c) for c in y.coords], "a": float(a)}
            for y, a in phi.supports
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_potential(path) -> CConvexPotential:
    """Load a potential saved by write_potential."""
    with open(path) as fh:
        payload = json.load(fh)
    try:
        profile = profile_by_name(payload["profile"])
        supports = [
            (SpherePoint(np.asarray(item["y"], dtype=float)), float(item["a"]))
            for item in payload["supports"]
        ]
    except (KeyError, TypeError) as err:
        raise ConfigError(f"malformed potential file: {err}") from err
    return CConvexPotential(tuple(supports), profile)
