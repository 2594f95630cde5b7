"""Discrete optimal transport between measures on the sphere.

Exact coupling by an in-module transportation simplex for small
supports, a log-domain entropic solver with marginal-restoring rounding
at larger sizes, recovery of dual potentials and the induced map, and
optimality certification via two-point c-monotonicity.

Sign convention: a plan's duals satisfy phi[i] + phic[j] >= -c(x_i, y_j)
with equality on the support, and total_cost = -sum(phi dmu0)
- sum(phic dmu1); phi is normalized to zero at the first source point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from ._simplex import STATUS_OK, transport_simplex
from .costs import CostProfile, cost_matrix, profile_by_name
from .errors import (
    ConfigError,
    CutLocusError,
    DomainError,
    PlanInvariantError,
)
from .geometry import SpherePoint, as_rows, load_point_cloud, pairwise_distance, save_point_cloud

__all__ = [
    "DiscreteMeasure",
    "MonotonicityReport",
    "TransportMap",
    "TransportPlan",
    "check_c_monotone",
    "extract_map",
    "gradient_inclusion_margin",
    "load_measure",
    "load_plan",
    "pushforward_check",
    "save_measure",
    "save_plan",
    "solve_entropic",
    "solve_exact",
]

# Point pairs closer than this are one support point (weights added).
_MERGE_TOL = 1e-10
# Plan entries above this count as support for slackness and map checks.
_SUPPORT_TOL = 1e-12
_MARGINAL_TOL = 1e-9
_FEASIBILITY_TOL = 1e-8
_SLACKNESS_TOL = 1e-7
_DUALITY_TOL = 1e-8
_EXACT_LIMIT = 512
# Row mass share above which an entry counts as the unique target.
_CONCENTRATION = 1.0 - 1e-6


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure on S^{n-1}.

    Construction normalizes the total mass to one, merges points closer
    than 1e-10 (weights added, first occurrence keeps its coordinates),
    and drops points of zero weight.
    """

    points: tuple
    weights: np.ndarray

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise DomainError("measure needs at least one support point")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size != len(pts):
            raise DomainError("one weight per point required")
        if not np.isfinite(w).all() or (w < 0).any():
            raise DomainError("weights must be finite and nonnegative")
        if w.sum() <= 0.0:
            raise DomainError("total mass must be positive")
        dim = pts[0].dim
        if any(p.dim != dim for p in pts):
            raise DomainError("points live on spheres of different dimensions")
        rows = as_rows(pts)
        pairs = cKDTree(rows).query_pairs(_MERGE_TOL, output_type="ndarray")
        if len(pairs):
            rep = np.arange(len(pts))
            for i, j in pairs[np.lexsort(pairs.T)]:
                a, b = sorted((_root(rep, i), _root(rep, j)))
                rep[b] = a
            roots = np.array([_root(rep, k) for k in range(len(pts))])
            merged = np.zeros(len(pts))
            np.add.at(merged, roots, w)
            keep = np.flatnonzero((roots == np.arange(len(pts))) & (merged > 0))
            pts = tuple(pts[int(k)] for k in keep)
            w = merged[keep]
        else:
            keep = np.flatnonzero(w > 0)
            if keep.size != w.size:
                pts = tuple(pts[int(k)] for k in keep)
                w = w[keep]
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_rows(cls, rows, weights=None) -> "DiscreteMeasure":
        """Measure from (N, n) coordinate rows; uniform weights by default."""
        rows = np.asarray(rows, dtype=float)
        pts = tuple(SpherePoint(r) for r in rows)
        if weights is None:
            weights = np.full(len(pts), 1.0 / len(pts))
        return cls(pts, np.asarray(weights, dtype=float))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        """Equal-weight measure on the given points."""
        pts = tuple(points)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))

    @cached_property
    def rows(self) -> np.ndarray:
        """(N, n) coordinate rows of the support."""
        rows = as_rows(self.points)
        rows.setflags(write=False)
        return rows

    @property
    def dim(self) -> int:
        """Ambient dimension n."""
        return self.points[0].dim

    def __len__(self) -> int:
        return len(self.points)


def _root(rep: np.ndarray, i: int) -> int:
    while rep[i] != i:
        rep[i] = rep[rep[i]]
        i = rep[i]
    return int(i)


@dataclass(frozen=True)
class TransportPlan:
    """A coupling of two discrete measures with its dual certificate.

    entries is a sparse (m, n) nonnegative matrix whose row sums are the
    source weights and column sums the target weights; dual_phi and
    dual_phic certify optimality in the sign convention of the module
    docstring, with dual_phi[0] = 0.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    entries: sparse.csr_array
    dual_phi: np.ndarray
    dual_phic: np.ndarray
    total_cost: float
    profile: CostProfile
    method: str = "exact"
    converged: bool = True

    def __post_init__(self):
        ent = sparse.csr_array(self.entries)
        ent.eliminate_zeros()
        ent.sort_indices()
        m, n = len(self.source), len(self.target)
        if ent.shape != (m, n):
            raise DomainError("plan entries shape does not match the measures")
        phi = np.array(self.dual_phi, dtype=float).reshape(-1)
        phic = np.array(self.dual_phic, dtype=float).reshape(-1)
        if phi.size != m or phic.size != n:
            raise DomainError("dual vector lengths do not match the supports")
        if ent.nnz and ent.data.min() < 0:
            raise DomainError("plan entries must be nonnegative")
        phi.setflags(write=False)
        phic.setflags(write=False)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "dual_phi", phi)
        object.__setattr__(self, "dual_phic", phic)
        object.__setattr__(self, "total_cost", float(self.total_cost))

    def dense(self) -> np.ndarray:
        """Dense (m, n) coupling matrix."""
        return self.entries.toarray()

    def marginal_error(self) -> float:
        """Largest deviation of a row or column sum from its marginal."""
        row = np.abs(self.entries.sum(axis=1) - self.source.weights).max()
        col = np.abs(self.entries.sum(axis=0) - self.target.weights).max()
        return float(max(row, col))

    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, masses) of entries above the support threshold."""
        coo = self.entries.tocoo()
        keep = coo.data > _SUPPORT_TOL
        return coo.row[keep], coo.col[keep], coo.data[keep]

    def validate(self) -> None:
        """Check marginal, dual, and cost invariants; raise on violation.

        Marginals must match within 1e-9 and the duals must be feasible
        within 1e-8 on every pair.  Exact plans additionally satisfy
        complementary slackness within 1e-7 on the support and strong
        duality within 1e-8.
        """
        if self.marginal_error() > _MARGINAL_TOL:
            raise PlanInvariantError(
                f"marginal error {self.marginal_error():.3e} exceeds {_MARGINAL_TOL}"
            )
        C = cost_matrix(self.profile, self.source.rows, self.target.rows)
        gap = self.dual_phi[:, None] + self.dual_phic[None, :] + C
        worst = float(np.min(gap[np.isfinite(C)], initial=np.inf))
        if worst < -_FEASIBILITY_TOL:
            raise PlanInvariantError(
                f"dual feasibility violated by {worst:.3e}"
            )
        ii, jj, masses = self.support()
        total = float(np.sum(masses * C[ii, jj]))
        if not np.isfinite(total) or abs(total - self.total_cost) > 1e-9 * (
            1.0 + abs(self.total_cost)
        ):
            raise PlanInvariantError("recorded total_cost does not match the entries")
        if self.method == "exact":
            slack = np.abs(gap[ii, jj]).max(initial=0.0)
            if slack > _SLACKNESS_TOL:
                raise PlanInvariantError(
                    f"complementary slackness violated by {slack:.3e}"
                )
            dual_value = -float(np.dot(self.dual_phi, self.source.weights)) - float(
                np.dot(self.dual_phic, self.target.weights)
            )
            if abs(dual_value - self.total_cost) > _DUALITY_TOL:
                raise PlanInvariantError(
                    f"strong duality gap {abs(dual_value - self.total_cost):.3e}"
                )


@dataclass(frozen=True)
class TransportMap:
    """Pointwise assignment extracted from a plan.

    target_index[i] is the column receiving at least the concentration
    share of row i's mass, or -1 where the row genuinely splits.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    target_index: np.ndarray
    split: np.ndarray

    def __post_init__(self):
        idx = np.array(self.target_index, dtype=np.int64).reshape(-1)
        spl = np.array(self.split, dtype=bool).reshape(-1)
        if idx.size != len(self.source) or spl.size != len(self.source):
            raise DomainError("map arrays do not match the source support")
        idx.setflags(write=False)
        spl.setflags(write=False)
        object.__setattr__(self, "target_index", idx)
        object.__setattr__(self, "split", spl)

    @property
    def total(self) -> bool:
        """True when no source point splits its mass."""
        return not bool(self.split.any())

    def image_rows(self) -> np.ndarray:
        """Rows of the mapped targets; raises DomainError on split rows."""
        if not self.total:
            raise DomainError("map has split rows and is not defined everywhere")
        return self.target.rows[self.target_index]


@dataclass(frozen=True)
class MonotonicityReport:
    """Worst two-point exchange margin over a plan or map's support."""

    ok: bool
    worst_margin: float
    worst_pair: tuple


def _exclusion_big(C: np.ndarray, finite: np.ndarray) -> float:
    # Large enough that rerouting any mass off excluded arcs always pays:
    # an improving cycle trades at most (m + n) finite arcs against one
    # excluded arc.
    scale = 1.0 + float(np.abs(C[finite]).max(initial=0.0))
    return 8.0 * (C.shape[0] + C.shape[1]) * scale


def solve_exact(
    mu0: DiscreteMeasure, mu1: DiscreteMeasure, profile: CostProfile
) -> TransportPlan:
    """Optimal coupling of two measures by the transportation simplex.

    Deterministic pivoting; duals are read off the final basis and
    normalized so that dual_phi[0] = 0.  Pairs at or beyond the cost's
    domain cut are excluded from the coupling; if the marginals cannot
    be transported without such a pair, CutLocusError is raised.

    Args:
        mu0: source measure, at most 512 support points.
        mu1: target measure, at most 512 support points.
        profile: cost profile.

    Returns:
        TransportPlan with method "exact".
    """
    if mu0.dim != mu1.dim:
        raise DomainError("measures live on spheres of different dimensions")
    m, n = len(mu0), len(mu1)
    if m > _EXACT_LIMIT or n > _EXACT_LIMIT:
        raise DomainError(f"exact solver is limited to {_EXACT_LIMIT} points per side")
    C = cost_matrix(profile, mu0.rows, mu1.rows)
    finite = np.isfinite(C)
    if finite.all():
        work = C
    else:
        if (~finite.any(axis=1)).any() or (~finite.any(axis=0)).any():
            raise CutLocusError(
                "a support point has no admissible partner inside the domain cut"
            )
        work = np.where(finite, C, _exclusion_big(C, finite))
    flow, u, v, _, status = transport_simplex(mu0.weights, mu1.weights, work)
    if status != STATUS_OK:
        raise PlanInvariantError("simplex exhausted its pivot budget")
    if not finite.all():
        spill = float(flow[~finite].sum())
        if spill > 1e-9:
            raise CutLocusError(
                "optimal coupling needs a pair at or beyond the domain cut"
            )
        flow = np.where(finite, flow, 0.0)
    total = float(np.vdot(flow, np.where(finite, C, 0.0)))
    phi = u[0] - u
    phic = -v - u[0]
    return TransportPlan(
        source=mu0,
        target=mu1,
        entries=sparse.csr_array(flow),
        dual_phi=phi,
        dual_phic=phic,
        total_cost=total,
        profile=profile,
        method="exact",
    )


def _round_to_marginals(P: np.ndarray, a, b, finite: np.ndarray) -> np.ndarray:
    # Scale rows then columns below their marginals, then spread the
    # remaining deficit as a rank-one correction on admissible pairs.
    r = P.sum(axis=1)
    P = P * np.where(r > a, a / np.where(r > 0, r, 1.0), 1.0)[:, None]
    c = P.sum(axis=0)
    P = P * np.where(c > b, b / np.where(c > 0, c, 1.0), 1.0)[None, :]
    ra = np.maximum(a - P.sum(axis=1), 0.0)
    rb = np.maximum(b - P.sum(axis=0), 0.0)
    s = ra.sum()
    if s > 0:
        corr = np.outer(ra, rb) / s
        corr[~finite] = 0.0
        P = P + corr
    return P


def solve_entropic(
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    profile: CostProfile,
    epsilon: float,
    rounds: int = 5000,
    tol: float = 1e-9,
) -> TransportPlan:
    """Entropically regularized coupling with exact-marginal rounding.

    Log-domain matrix scaling on the kernel exp(-c / eps), annealed from
    a large regularization down to eps, followed by the standard
    marginal-restoration rounding so that row and column sums match the
    measures exactly up to roundoff.  If the scaling loop exhausts its
    budget before the marginal error drops below tol, the best iterate
    is returned with converged set to False.

    Args:
        mu0: source measure.
        mu1: target measure.
        profile: cost profile.
        epsilon: regularization strength, > 0.
        rounds: total scaling-sweep budget across annealing levels.
        tol: L1 marginal error declaring convergence.

    Returns:
        TransportPlan with method "entropic" and a converged flag.
    """
    if mu0.dim != mu1.dim:
        raise DomainError("measures live on spheres of different dimensions")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    C = cost_matrix(profile, mu0.rows, mu1.rows)
    finite = np.isfinite(C)
    if (~finite.any(axis=1)).any() or (~finite.any(axis=0)).any():
        raise CutLocusError(
            "a support point has no admissible partner inside the domain cut"
        )
    a = mu0.weights
    b = mu1.weights
    loga = np.log(a)
    logb = np.log(b)
    f = np.zeros(len(mu0))
    g = np.zeros(len(mu1))

    levels = [float(epsilon)]
    while levels[-1] < 1.0:
        levels.append(min(2.0 * levels[-1], 1.0))
    levels.reverse()

    used = 0
    converged = False
    eps_last = levels[0]
    P = np.exp(
        (f[:, None] + g[None, :] - C) / eps_last + loga[:, None] + logb[None, :]
    )
    for eps in levels:
        final = eps == levels[-1]
        # Warm-up levels only seed the potentials; cap them so the
        # budget is spent at the requested regularization.
        stop = rounds if final else min(used + 300, rounds)
        while used < stop:
            f = -eps * logsumexp((g[None, :] - C) / eps + logb[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - C) / eps + loga[:, None], axis=0)
            used += 1
            eps_last = eps
            P = np.exp(
                (f[:, None] + g[None, :] - C) / eps + loga[:, None] + logb[None, :]
            )
            err = float(np.abs(P.sum(axis=1) - a).sum())
            if final and err <= tol:
                converged = True
                break
            if not final and err <= max(tol, 1e-7):
                break
    P = _round_to_marginals(P, a, b, finite)
    total = float(np.vdot(P, np.where(finite, C, 0.0)))
    u = f + eps_last * loga
    phi = u[0] - u
    vdual = np.min(np.where(finite, C, np.inf) - (u - u[0])[:, None], axis=0)
    phic = -vdual
    return TransportPlan(
        source=mu0,
        target=mu1,
        entries=sparse.csr_array(P),
        dual_phi=phi,
        dual_phic=phic,
        total_cost=total,
        profile=profile,
        method="entropic",
        converged=converged,
    )


def extract_map(plan: TransportPlan) -> TransportMap:
    """Pointwise map from a plan: rows concentrated on one column.

    A row maps to its largest entry's column when that entry carries at
    least 1 - 1e-6 of the row mass; otherwise the row is flagged split
    and its index is -1 (mass splitting is genuine in discrete OT).
    """
    P = plan.dense()
    rowsum = P.sum(axis=1)
    j = P.argmax(axis=1)
    share = P[np.arange(P.shape[0]), j] / np.where(rowsum > 0, rowsum, 1.0)
    split = share < _CONCENTRATION
    return TransportMap(
        source=plan.source,
        target=plan.target,
        target_index=np.where(split, -1, j),
        split=split,
    )


def gradient_inclusion_margin(plan: TransportPlan, tmap: TransportMap | None = None) -> float:
    """Worst defect of the map's branch in the dual's upper envelope.

    The dual potential extends to phi(x) = max_j(-c(x, y_j) - phic[j]);
    the assigned target of an unsplit row realizes a subgradient of phi
    exactly when its branch attains this maximum.  Returns the largest
    amount (over unsplit rows) by which the assigned branch misses the
    envelope; optimal plans stay within slackness tolerance.
    """
    if tmap is None:
        tmap = extract_map(plan)
    keep = ~tmap.split
    if not keep.any():
        return 0.0
    C = cost_matrix(plan.profile, plan.source.rows[keep], plan.target.rows)
    branches = -C - plan.dual_phic[None, :]
    own = branches[np.arange(keep.sum()), tmap.target_index[keep]]
    return float((branches.max(axis=1) - own).max())


def check_c_monotone(obj, profile: CostProfile | None = None) -> MonotonicityReport:
    """Two-point exchange test over a plan's support or a map's graph.

    For every support pair, swapping the two targets must not lower the
    cost: c(x1,y1) + c(x2,y2) <= c(x1,y2) + c(x2,y1).  Returns the worst
    margin (right side minus left side) and the offending index pair.
    """
    if isinstance(obj, TransportPlan):
        profile = profile if profile is not None else obj.profile
        ii, jj, _ = obj.support()
        xr = obj.source.rows[ii]
        yr = obj.target.rows[jj]
    elif isinstance(obj, TransportMap):
        if profile is None:
            raise DomainError("a cost profile is required to check a bare map")
        keep = np.flatnonzero(~obj.split)
        ii = keep
        jj = obj.target_index[keep]
        xr = obj.source.rows[keep]
        yr = obj.target.rows[jj]
    else:
        raise DomainError("expected a TransportPlan or TransportMap")
    with np.errstate(invalid="ignore"):
        M = cost_matrix(profile, xr, yr)
    own = np.diagonal(M)
    margin = M + M.T - own[:, None] - own[None, :]
    np.fill_diagonal(margin, np.inf)
    margin[np.isnan(margin)] = np.inf
    if margin.size <= 1:
        return MonotonicityReport(True, np.inf, ((int(ii[0]), int(jj[0])),) * 2)
    flat = int(np.argmin(margin))
    s, t = divmod(flat, margin.shape[1])
    worst = float(margin[s, t])
    pair = ((int(ii[s]), int(jj[s])), (int(ii[t]), int(jj[t])))
    return MonotonicityReport(worst >= -1e-9, worst, pair)


def pushforward_check(
    tmap: TransportMap,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    radius: float,
) -> float:
    """Largest mismatch of mu1(B) and mu0(T^-1(B)) over metric balls.

    Balls are centered at the target support points.  Requires a total
    map whose source and target supports match the given measures.
    """
    if len(mu0) != len(tmap.source) or len(mu1) != len(tmap.target):
        raise DomainError("measures do not match the map's supports")
    if not radius > 0:
        raise DomainError("ball radius must be positive")
    image = tmap.image_rows()
    centers = mu1.rows
    mass_target = (pairwise_distance(centers, mu1.rows) <= radius) @ mu1.weights
    mass_pulled = (pairwise_distance(centers, image) <= radius) @ mu0.weights
    return float(np.abs(mass_target - mass_pulled).max())


def save_plan(path, plan: TransportPlan) -> None:
    """Write a plan as triplet CSV plus a JSON dual sidecar.

    The CSV holds one "i,j,mass" row per stored entry; the sidecar at
    path + ".json" carries the duals, total cost, profile kind, method,
    and converged flag.
    """
    coo = plan.entries.tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# transport plan triplets: source index, target index, mass\n")
        fh.write("i,j,mass\n")
        for i, j, mass in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i},{j},{mass:.17g}\n")
    sidecar = {
        "converged": bool(plan.converged),
        "dual_phi": [float(x) for x in plan.dual_phi],
        "dual_phic": [float(x) for x in plan.dual_phic],
        "method": plan.method,
        "profile": plan.profile.kind,
        "shape": [len(plan.source), len(plan.target)],
        "total_cost": plan.total_cost,
    }
    with open(f"{path}.json", "w", encoding="ascii") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_plan(
    path,
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    profile: CostProfile | None = None,
) -> TransportPlan:
    """Read a plan written by save_plan, given its two measures.

    The profile is reconstructed from the sidecar by name; pass one
    explicitly for custom profiles.
    """
    try:
        with open(f"{path}.json", encoding="ascii") as fh:
            sidecar = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable plan sidecar {path}.json: {exc}") from exc
    if sidecar.get("shape") != [len(source), len(target)]:
        raise ConfigError("plan sidecar shape does not match the measures")
    if profile is None:
        kind = sidecar.get("profile", "")
        if kind == "custom":
            raise ConfigError("custom-profile plans need an explicit profile")
        profile = profile_by_name(kind)
    ii: list[int] = []
    jj: list[int] = []
    mass: list[float] = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("i,"):
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 'i,j,mass'")
            ii.append(int(fields[0]))
            jj.append(int(fields[1]))
            mass.append(float(fields[2]))
    entries = sparse.csr_array(
        sparse.coo_array(
            (mass, (ii, jj)), shape=(len(source), len(target))
        )
    )
    return TransportPlan(
        source=source,
        target=target,
        entries=entries,
        dual_phi=np.asarray(sidecar["dual_phi"], dtype=float),
        dual_phic=np.asarray(sidecar["dual_phic"], dtype=float),
        total_cost=float(sidecar["total_cost"]),
        profile=profile,
        method=str(sidecar.get("method", "exact")),
        converged=bool(sidecar.get("converged", True)),
    )


def save_measure(path, measure: DiscreteMeasure) -> None:
    """Write a measure in the point-cloud format (trailing weight column)."""
    save_point_cloud(path, measure.rows, measure.weights)


def load_measure(path, dim: int) -> DiscreteMeasure:
    """Read a measure from a point-cloud file; missing weights mean uniform."""
    rows, weights = load_point_cloud(path, dim)
    return DiscreteMeasure.from_rows(rows, weights)
