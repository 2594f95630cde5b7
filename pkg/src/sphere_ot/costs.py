"""Geodesic cost profiles on the sphere and their differential toolkit.

Costs have the form c(x, y) = f(d(x, y)) with d the geodesic distance.
Two profiles are built in: the quadratic profile f(d) = d^2 / 2 and the
antenna profile f(d) = -(1/2) log(1 + cos d). Custom profiles supply the
profile function and its first four derivatives.

The module provides cost values, the intrinsic gradient, both second
derivative blocks in orthonormal tangent frames, the cost exponential map
(inverse of the gradient), and generalized segments traced through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    AntipodalEndpoint,
    ConfigError,
    CutLocusError,
    DomainError,
    GradientOutOfRange,
)
from .geometry import (
    SpherePoint,
    TangentVector,
    distance,
    exp_map,
    log_map,
    orthonormal_frame,
    rows_distance,
)

CUT_GUARD = 1e-9
HALF_LOG2 = 0.5 * math.log(2.0)

_KINDS = ("quadratic", "antenna", "custom")


@dataclass(frozen=True)
class CostProfile:
    """A radial cost profile f and its derivatives up to fourth order.

    Attributes:
        kind: One of "quadratic", "antenna", "custom".
        f: Profile value, vectorized over numpy arrays of distances.
        f1, f2, f3, f4: First through fourth derivatives of f.
        domain_cut: Largest admissible geodesic distance (default pi).
        grad_sup: Supremum of f' on [0, domain_cut); the radius of the
            admissible gradient ball for the cost exponential.
    """

    kind: str
    f: Callable
    f1: Callable
    f2: Callable
    f3: Callable
    f4: Callable
    domain_cut: float = math.pi
    grad_sup: float = math.inf

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown profile kind {self.kind!r}")
        if not 0.0 < self.domain_cut <= math.pi:
            raise ConfigError(f"domain_cut must lie in (0, pi], got {self.domain_cut}")


@dataclass(frozen=True)
class CostPair:
    """A pair of sphere points with their geodesic distance cached."""

    x: SpherePoint
    y: SpherePoint
    d: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "d", distance(self.x, self.y))

    def admissible(self, profile: CostProfile, margin: float = 0.0) -> bool:
        """Whether the pair lies strictly inside the profile domain.

        Args:
            profile: Cost profile supplying the domain cut.
            margin: Extra distance to the cut required of the pair.
        """
        return self.d < profile.domain_cut - margin - CUT_GUARD


def _quad_profile() -> CostProfile:
    return CostProfile(
        kind="quadratic",
        f=lambda d: 0.5 * np.square(np.asarray(d, dtype=float)),
        f1=lambda d: np.asarray(d, dtype=float) * 1.0,
        f2=lambda d: np.ones_like(np.asarray(d, dtype=float)),
        f3=lambda d: np.zeros_like(np.asarray(d, dtype=float)),
        f4=lambda d: np.zeros_like(np.asarray(d, dtype=float)),
        domain_cut=math.pi,
        grad_sup=math.pi,
    )


def _antenna_f3(d):
    h = 0.5 * np.asarray(d, dtype=float)
    return 0.25 * np.tan(h) / np.cos(h) ** 2


def _antenna_f4(d):
    h = 0.5 * np.asarray(d, dtype=float)
    sec2 = 1.0 / np.cos(h) ** 2
    return 0.125 * sec2 * sec2 + 0.25 * sec2 * np.tan(h) ** 2


def _antenna_profile() -> CostProfile:
    return CostProfile(
        kind="antenna",
        f=lambda d: -0.5 * np.log1p(np.cos(np.asarray(d, dtype=float))),
        f1=lambda d: 0.5 * np.tan(0.5 * np.asarray(d, dtype=float)),
        f2=lambda d: 0.5 / (1.0 + np.cos(np.asarray(d, dtype=float))),
        f3=_antenna_f3,
        f4=_antenna_f4,
        domain_cut=math.pi,
        grad_sup=math.inf,
    )


_QUADRATIC = _quad_profile()
_ANTENNA = _antenna_profile()


def quadratic() -> CostProfile:
    """The quadratic profile f(d) = d^2 / 2."""
    return _QUADRATIC


def antenna() -> CostProfile:
    """The antenna profile f(d) = -(1/2) log(1 + cos d)."""
    return _ANTENNA


def profile_by_name(name: str) -> CostProfile:
    """Look up a built-in profile by name ("quadratic" or "antenna")."""
    if name == "quadratic":
        return _QUADRATIC
    if name == "antenna":
        return _ANTENNA
    raise ConfigError(f"unknown profile name {name!r}")


def validate_profile(profile: CostProfile, samples: int = 256) -> None:
    """Check the structural requirements of a profile on a grid.

    Requires f'(0) = 0, f strictly increasing, and f' strictly increasing
    on (0, domain_cut). Raises ConfigError on violation.
    """
    cut = profile.domain_cut
    grid = np.linspace(1e-6, cut - 1e-6, samples)
    if abs(float(profile.f1(1e-8))) > 1e-3:
        raise ConfigError("profile must have vanishing slope at d = 0")
    if not np.all(np.diff(profile.f(grid)) > 0.0):
        raise ConfigError("profile must be strictly increasing in distance")
    if not np.all(np.diff(profile.f1(grid)) > 0.0):
        raise ConfigError("profile derivative must be strictly increasing")


def custom_profile(
    f: Callable,
    f1: Callable,
    f2: Callable,
    f3: Callable,
    f4: Callable,
    domain_cut: float = math.pi,
    grad_sup: float | None = None,
) -> CostProfile:
    """Build a custom profile from user-supplied derivative callables.

    Args:
        f, f1, f2, f3, f4: Profile and derivatives, vectorized over arrays.
        domain_cut: Largest admissible distance.
        grad_sup: Supremum of f' on the domain; estimated near the cut
            when omitted.

    Returns:
        A validated CostProfile of kind "custom".
    """
    if grad_sup is None:
        grad_sup = float(f1(domain_cut * (1.0 - 1e-12)))
    prof = CostProfile(
        kind="custom", f=f, f1=f1, f2=f2, f3=f3, f4=f4,
        domain_cut=float(domain_cut), grad_sup=float(grad_sup),
    )
    validate_profile(prof)
    return prof


def tabulated_profile(path) -> CostProfile:
    """Load a profile from a whitespace table of (d, f, f', f'', f''', f'''').

    Columns are interpolated by cubic splines over the tabulated distances;
    the domain cut is the last grid point.
    """
    from scipy.interpolate import CubicSpline

    table = np.loadtxt(path, dtype=float)
    if table.ndim != 2 or table.shape[1] != 6:
        raise ConfigError("profile table must have six columns")
    d = table[:, 0]
    if not np.all(np.diff(d) > 0):
        raise ConfigError("profile table distances must be strictly increasing")
    splines = [CubicSpline(d, table[:, j]) for j in range(1, 6)]
    cut = float(d[-1])
    prof = CostProfile(
        kind="custom",
        f=splines[0], f1=splines[1], f2=splines[2], f3=splines[3], f4=splines[4],
        domain_cut=cut, grad_sup=float(splines[1](cut)),
    )
    validate_profile(prof)
    return prof


def _check_cut(d: float, profile: CostProfile) -> None:
    if d >= profile.domain_cut - CUT_GUARD:
        raise CutLocusError(
            f"distance {d:.6g} reaches the profile cut {profile.domain_cut:.6g}"
        )


def cost(profile: CostProfile, x: SpherePoint, y: SpherePoint) -> float:
    """Cost value f(d(x, y)); raises CutLocusError at the domain cut."""
    d = distance(x, y)
    _check_cut(d, profile)
    return float(profile.f(d))


def raw_cost(profile: CostProfile, x: SpherePoint, y: SpherePoint) -> float:
    """Cost value without the domain check; may be +inf at the cut."""
    with np.errstate(divide="ignore"):
        return float(profile.f(distance(x, y)))


def cost_rows(profile: CostProfile, rows_x: np.ndarray, rows_y: np.ndarray) -> np.ndarray:
    """Paired cost values for row arrays; +inf where the cut is reached."""
    d = rows_distance(rows_x, rows_y)
    with np.errstate(divide="ignore"):
        out = np.asarray(profile.f(d), dtype=float)
    return np.where(d >= profile.domain_cut - CUT_GUARD, np.inf, out)


def cost_matrix(
    profile: CostProfile,
    rows_x: np.ndarray,
    rows_y: np.ndarray,
    dtype=np.float64,
) -> np.ndarray:
    """Dense cost matrix between two point clouds.

    Entries at or beyond the domain cut are +inf. Pass float32 to halve
    the memory of large caches.

    Args:
        profile: Cost profile.
        rows_x: (m, n) unit rows.
        rows_y: (k, n) unit rows.
        dtype: Output dtype.

    Returns:
        (m, k) array of f(d(x_i, y_j)).
    """
    gram = np.asarray(rows_x, dtype=dtype) @ np.asarray(rows_y, dtype=dtype).T
    np.clip(gram, -1.0, 1.0, out=gram)
    d = np.arccos(gram)
    with np.errstate(divide="ignore"):
        out = np.asarray(profile.f(d), dtype=dtype)
    out[d >= profile.domain_cut - CUT_GUARD] = np.inf
    return out


def grad_x(profile: CostProfile, x: SpherePoint, y: SpherePoint) -> TangentVector:
    """Intrinsic gradient of c(., y) at x: -f'(d) times the unit direction to y."""
    d = distance(x, y)
    _check_cut(d, profile)
    if d < 1e-14:
        return TangentVector(x, np.zeros(x.dim))
    e = log_map(x, y).vec / d
    return TangentVector(x, -float(profile.f1(d)) * e)


def hessian_xx(
    profile: CostProfile,
    x: SpherePoint,
    y: SpherePoint,
    frame: np.ndarray | None = None,
) -> np.ndarray:
    """Second derivative block of c in x, in an orthonormal frame at x.

    Equals f''(r) on the direction toward y and f'(r) cos(r)/sin(r) on the
    orthogonal complement. With the default frame (first axis toward y) the
    matrix is exactly diagonal.

    Args:
        profile: Cost profile.
        x, y: Admissible pair with 0 < d(x, y) < domain_cut.
        frame: Optional (n-1, n) orthonormal frame at x.

    Returns:
        (n-1, n-1) symmetric matrix of frame components.
    """
    r = distance(x, y)
    _check_cut(r, profile)
    if r < 1e-14:
        raise DomainError("hessian_xx requires distinct points")
    e = log_map(x, y).vec / r
    if frame is None:
        frame = orthonormal_frame(x, first_axis=e).axes
    a = frame @ e
    radial = float(profile.f2(r))
    tangential = float(profile.f1(r)) * math.cos(r) / math.sin(r)
    eye = np.eye(frame.shape[0])
    outer = np.outer(a, a)
    return radial * outer + tangential * (eye - outer)


def _transport_rows(x: SpherePoint, y: SpherePoint, rows: np.ndarray) -> np.ndarray:
    # Parallel transport of raw tangent rows from x to y along the geodesic.
    r = distance(x, y)
    u = log_map(x, y).vec / r
    v = log_map(y, x).vec / r
    return rows - np.outer(rows @ u, u + v)


def transported_frames(x: SpherePoint, y: SpherePoint) -> tuple[np.ndarray, np.ndarray]:
    """Canonical frame pair: first axis along the geodesic, rest transported.

    Returns (E, F) with E an orthonormal frame at x whose first axis points
    toward y, and F the parallel transport of E along the geodesic to y.
    """
    e = log_map(x, y).vec
    frame_x = orthonormal_frame(x, first_axis=e).axes
    return frame_x, _transport_rows(x, y, frame_x)


def hessian_xy(
    profile: CostProfile,
    x: SpherePoint,
    y: SpherePoint,
    frame_x: np.ndarray | None = None,
    frame_y: np.ndarray | None = None,
) -> np.ndarray:
    """Mixed second derivative block of c, in frames at x and y.

    In the canonical transported frames the matrix is
    -diag(f''(r), f'(r)/sin r, ..., f'(r)/sin r); it tends to minus the
    identity as r tends to 0 for the quadratic profile.

    Args:
        profile: Cost profile.
        x, y: Admissible pair with 0 < d(x, y) < domain_cut.
        frame_x: Optional (n-1, n) orthonormal frame at x.
        frame_y: Optional (n-1, n) orthonormal frame at y; defaults to the
            parallel transport of frame_x.

    Returns:
        (n-1, n-1) matrix H with H[i, j] the derivative along frame_x[i]
        at x and frame_y[j] at y.
    """
    r = distance(x, y)
    _check_cut(r, profile)
    if r < 1e-14:
        raise DomainError("hessian_xy requires distinct points")
    u = log_map(x, y).vec / r
    v = log_map(y, x).vec / r
    if frame_x is None:
        frame_x = orthonormal_frame(x, first_axis=u).axes
    if frame_y is None:
        frame_y = _transport_rows(x, y, frame_x)
    a = frame_x @ u
    b = frame_y @ v
    radial = float(profile.f2(r))
    shear = float(profile.f1(r)) / math.sin(r)
    perp = frame_y - np.outer(frame_y @ v, v)
    back = _transport_rows(y, x, perp)
    back = back - np.outer(back @ u, u)
    t = frame_x @ back.T
    return radial * np.outer(a, b) - shear * t


def mixed_determinant(profile: CostProfile, x: SpherePoint, y: SpherePoint) -> float:
    """Absolute determinant of the mixed block: f''(r) (f'(r)/sin r)^(n-2)."""
    r = distance(x, y)
    _check_cut(r, profile)
    if r < 1e-14:
        raise DomainError("mixed_determinant requires distinct points")
    return float(profile.f2(r)) * (float(profile.f1(r)) / math.sin(r)) ** (x.dim - 2)


def mixed_determinant_rows(profile: CostProfile, dists: np.ndarray, dim: int) -> np.ndarray:
    """Vectorized absolute mixed determinant over an array of distances."""
    d = np.asarray(dists, dtype=float)
    return np.asarray(profile.f2(d), dtype=float) * (
        np.asarray(profile.f1(d), dtype=float) / np.sin(d)
    ) ** (dim - 2)


def solve_radius(profile: CostProfile, target: float) -> float:
    """Solve f'(d) = target for d in [0, domain_cut) by safeguarded Newton.

    Monotonicity of f' makes the bracketed iteration globally convergent;
    tolerance 1e-12 on the residual, at most 50 steps with bisection
    fallback.
    """
    if target <= 0.0:
        return 0.0
    lo, hi = 0.0, profile.domain_cut
    d = 0.5 * profile.domain_cut
    for _ in range(50):
        g = float(profile.f1(d)) - target
        # Newton is cheap; run it to the machine floor, well past the
        # 1e-12 contract, so downstream difference stencils stay quiet.
        if abs(g) <= 1e-15 * max(1.0, target):
            break
        if g > 0.0:
            hi = d
        else:
            lo = d
        slope = float(profile.f2(d))
        nd = d - g / slope if slope > 0.0 and math.isfinite(slope) else math.nan
        if not lo < nd < hi:
            nd = 0.5 * (lo + hi)
        d = nd
    return d


def c_exp(profile: CostProfile, p: TangentVector) -> SpherePoint:
    """Cost exponential: the unique y with -grad_x c(x, y) = p.

    Solves f'(d) = |p| for the radius and shoots the geodesic. Coincides
    with the Riemannian exponential for the quadratic profile.

    Raises:
        GradientOutOfRange: When |p| reaches the admissible gradient ball.
    """
    t = p.norm
    if t == 0.0:
        return p.base
    if t >= profile.grad_sup - CUT_GUARD:
        raise GradientOutOfRange(
            f"|p| = {t:.6g} reaches the gradient bound {profile.grad_sup:.6g}"
        )
    d = solve_radius(profile, t)
    return exp_map(p.base, TangentVector(p.base, (d / t) * p.vec))


def c_segment(
    profile: CostProfile,
    x: SpherePoint,
    y0: SpherePoint,
    y1: SpherePoint,
    theta: float,
) -> SpherePoint:
    """Point at parameter theta on the generalized segment from y0 to y1.

    The segment is the image under the cost exponential at x of the straight
    line between the gradients -grad_x c(x, y0) and -grad_x c(x, y1).

    Raises:
        AntipodalEndpoint: When y0 or y1 is the antipode of x.
    """
    for endpoint in (y0, y1):
        if distance(x, endpoint) >= math.pi - CUT_GUARD:
            raise AntipodalEndpoint("segment endpoint at the antipode of the base")
    p0 = -1.0 * grad_x(profile, x, y0)
    p1 = -1.0 * grad_x(profile, x, y1)
    p = TangentVector(x, theta * p1.vec + (1.0 - theta) * p0.vec)
    return c_exp(profile, p)


def original_antenna_cost(x: SpherePoint, y: SpherePoint) -> float:
    """The cost -log|x - y|, via the antenna profile at the reflected point.

    Uses -log|x - y| = f(d(x, -y)) - (1/2) log 2 with f the antenna
    profile. Raises CutLocusError as y approaches x, where the value blows
    up.
    """
    return cost(_ANTENNA, x, y.antipode()) - HALF_LOG2


def original_antenna_cost_rows(rows_x: np.ndarray, rows_y: np.ndarray) -> np.ndarray:
    """Paired -log|x - y| values for row arrays; +inf at coincident pairs."""
    return cost_rows(_ANTENNA, rows_x, -np.asarray(rows_y, dtype=float)) - HALF_LOG2


def original_antenna_cost_matrix(rows_x: np.ndarray, rows_y: np.ndarray, dtype=np.float64) -> np.ndarray:
    """Dense -log|x - y| matrix between two clouds; +inf at coincidences."""
    return cost_matrix(_ANTENNA, rows_x, -np.asarray(rows_y, dtype=dtype), dtype=dtype) - dtype(HALF_LOG2)
