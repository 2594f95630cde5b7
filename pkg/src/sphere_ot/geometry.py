"""Geodesic primitives on the unit sphere S^{n-1} embedded in R^n.

Points live on the sphere, tangent vectors live in the tangent plane of
their base point, and every map here works for any ambient dimension
n >= 3.  Scalar wrappers (SpherePoint, TangentVector) carry the public
contracts; the *_rows helpers operate on (N, n) arrays and feed the scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._series import sin_over_r
from .errors import (
    AntipodalError,
    DegenerateAxis,
    DomainError,
    UnsupportedDimension,
)

# Tolerance below which a tangent vector is treated as the zero vector.
ZERO_TANGENT = 1e-300

# Refuse the logarithm this close to the antipode: the direction is no
# longer numerically meaningful there.
ANTIPODE_GUARD = 1e-9


def _as_unit(coords: np.ndarray) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 1:
        raise ValueError("a point is a flat coordinate vector")
    if coords.size < 3:
        raise UnsupportedDimension(
            f"ambient dimension must be >= 3, got {coords.size}"
        )
    nrm = float(np.linalg.norm(coords))
    if nrm < 1e-12:
        raise ValueError("cannot normalize a (near) zero vector onto the sphere")
    return coords / nrm


@dataclass(frozen=True)
class SpherePoint:
    """A point of S^{n-1}; coordinates are renormalized on construction."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_unit(self.coords))
        self.coords.setflags(write=False)

    @property
    def dim(self) -> int:
        """Ambient dimension n."""
        return self.coords.size

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpherePoint) and np.array_equal(
            self.coords, other.coords
        )

    def __repr__(self) -> str:
        return f"SpherePoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True)
class TangentVector:
    """A vector in T_base S^{n-1}; orthogonality to base is enforced."""

    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vec, dtype=float)
        if vec.shape != self.base.coords.shape:
            raise ValueError("tangent vector and base point dimensions differ")
        radial = float(vec @ self.base.coords)
        scale = max(1.0, float(np.linalg.norm(vec)))
        if abs(radial) > 1e-9 * scale:
            raise ValueError(
                f"vector is not tangent: radial component {radial:.3e}"
            )
        # Scrub the harmless sub-tolerance radial residue.
        vec = vec - radial * self.base.coords
        object.__setattr__(self, "vec", vec)
        self.vec.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        if other.base != self.base:
            raise ValueError("cannot add tangent vectors at different base points")
        return TangentVector(self.base, self.vec + other.vec)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        if other.base != self.base:
            raise ValueError("cannot subtract tangent vectors at different base points")
        return TangentVector(self.base, self.vec - other.vec)

    def __mul__(self, s: float) -> "TangentVector":
        return TangentVector(self.base, self.vec * float(s))

    __rmul__ = __mul__

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, -self.vec)


@dataclass(frozen=True)
class TangentFrame:
    """An orthonormal basis of T_base S^{n-1}, stored as rows of axes."""

    base: SpherePoint
    axes: np.ndarray  # shape (n-1, n)

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=float)
        n = self.base.dim
        if axes.shape != (n - 1, n):
            raise ValueError(f"frame axes must have shape {(n - 1, n)}")
        object.__setattr__(self, "axes", axes)
        self.axes.setflags(write=False)

    def coords_of(self, v: TangentVector) -> np.ndarray:
        """Components of a tangent vector in this frame."""
        return self.axes @ v.vec

    def vector(self, comps: np.ndarray) -> TangentVector:
        """Tangent vector with the given frame components."""
        return TangentVector(self.base, np.asarray(comps, dtype=float) @ self.axes)


def distance(x: SpherePoint, y: SpherePoint) -> float:
    """Geodesic distance arccos(x . y), clamped into [0, pi].

    Symmetric by construction: the dot product is evaluated once.
    """
    return float(np.arccos(np.clip(x.coords @ y.coords, -1.0, 1.0)))


def exp_map(base: SpherePoint, p: TangentVector) -> SpherePoint:
    """Geodesic exponential cos(|p|) base + sin(|p|) p/|p|.

    Args:
        base: foot point.
        p: tangent vector at base; |p| must be < 2*pi to guard against
           silently wrapped inputs.

    Returns:
        The point reached after geodesic time |p|.
    """
    if p.base != base:
        raise ValueError("tangent vector is not based at the given point")
    r = p.norm
    if r >= 2.0 * math.pi:
        raise DomainError(f"|p| = {r:.6f} >= 2*pi; refusing wrapped exponential")
    if r < ZERO_TANGENT:
        return SpherePoint(base.coords.copy())
    out = math.cos(r) * base.coords + sin_over_r(r) * p.vec
    return SpherePoint(out)


def log_map(base: SpherePoint, target: SpherePoint) -> TangentVector:
    """Inverse of exp_map on the ball |p| < pi.

    Raises:
        AntipodalError: when d(base, target) >= pi - 1e-9; the direction
            back from the antipode is not defined.
    """
    d = distance(base, target)
    if d >= math.pi - ANTIPODE_GUARD:
        raise AntipodalError(
            f"log map undefined within {ANTIPODE_GUARD:g} of the antipode (d={d!r})"
        )
    dot = float(base.coords @ target.coords)
    perp = target.coords - dot * base.coords
    size = float(np.linalg.norm(perp))
    # |perp| = sin(d) resolves tiny separations that arccos saturates over;
    # below its noise floor the points are coincident or antipodal.
    if size < 1e-12:
        if dot < 0.0:
            raise AntipodalError("log map undefined at the antipode")
        return TangentVector(base, np.zeros_like(base.coords))
    # Rescale sin(d) to length d with the stable ratio.
    return TangentVector(base, perp * (d / size))


def orthonormal_frame(
    base: SpherePoint, first_axis: TangentVector | np.ndarray | None = None
) -> TangentFrame:
    """Deterministic orthonormal basis of the tangent plane.

    Completion axes come from Gram-Schmidt over the standard basis of R^n
    in index order, so the result is reproducible across runs.

    Args:
        base: foot point.
        first_axis: optional direction to normalize into axes[0]; either a
            TangentVector at base or an ambient array, which is projected
            onto the tangent plane.

    Raises:
        DegenerateAxis: if first_axis has (projected) norm below 1e-12.
    """
    n = base.dim
    axes: list[np.ndarray] = []
    if first_axis is not None:
        if isinstance(first_axis, TangentVector):
            if first_axis.base != base:
                raise ValueError("first_axis is not based at the given point")
            lead = first_axis.vec
        else:
            lead = np.asarray(first_axis, dtype=float)
            lead = lead - (lead @ base.coords) * base.coords
        size = float(np.linalg.norm(lead))
        if size < 1e-12:
            raise DegenerateAxis("first_axis has (numerically) zero length")
        axes.append(lead / size)
    for k in range(n):
        if len(axes) == n - 1:
            break
        v = np.zeros(n)
        v[k] = 1.0
        # Two Gram-Schmidt sweeps keep the residual near machine precision.
        for _ in range(2):
            v = v - (v @ base.coords) * base.coords
            for a in axes:
                v = v - (v @ a) * a
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            axes.append(v / nv)
    if len(axes) != n - 1:
        raise DegenerateAxis("failed to complete an orthonormal frame")
    return TangentFrame(base, np.array(axes))


def parallel_transport(
    start: SpherePoint, end: SpherePoint, w: TangentVector
) -> TangentVector:
    """Parallel transport along the unique minimal geodesic start -> end."""
    if w.base != start:
        raise ValueError("vector is not based at the start point")
    d = distance(start, end)
    if d >= math.pi - ANTIPODE_GUARD:
        raise AntipodalError("transport along an antipodal geodesic is ambiguous")
    if d == 0.0:
        return TangentVector(end, w.vec.copy())
    u = log_map(start, end).vec / d  # unit, at start, toward end
    v = log_map(end, start).vec / d  # unit, at end, back toward start
    # Components perpendicular to the geodesic plane ride along unchanged;
    # the in-plane component rotates u -> -v.
    out = w.vec - (w.vec @ u) * (u + v)
    return TangentVector(end, out)


def fibonacci_grid(dim: int, count: int) -> list[SpherePoint]:
    """Deterministic quasi-uniform point set on S^{dim-1}.

    dim == 3 uses the golden-angle lattice; higher dimensions map a
    Kronecker low-discrepancy sequence through the Gaussian quantile and
    normalize, which keeps the construction seed-free and reproducible.

    Args:
        dim: ambient dimension n >= 3.
        count: number of points, >= 1.

    Raises:
        UnsupportedDimension: for dim < 3.
    """
    if dim < 3:
        raise UnsupportedDimension(f"ambient dimension must be >= 3, got {dim}")
    if count < 1:
        raise ValueError("count must be positive")
    return [SpherePoint(row) for row in fibonacci_rows(dim, count)]


def fibonacci_rows(dim: int, count: int) -> np.ndarray:
    """Array form of fibonacci_grid: (count, dim) unit rows."""
    if dim < 3:
        raise UnsupportedDimension(f"ambient dimension must be >= 3, got {dim}")
    if dim == 3:
        k = np.arange(count, dtype=float)
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        z = 1.0 - (2.0 * k + 1.0) / count
        lon = 2.0 * math.pi * k / golden
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([s * np.cos(lon), s * np.sin(lon), z], axis=1)
    from scipy.special import ndtri

    # Kronecker sequence driven by the generalized golden ratio.
    g = _plastic_root(dim)
    alpha = g ** -(np.arange(1, dim + 1, dtype=float))
    # Offset by one so the first row is not the all-median (zero) point.
    k = np.arange(1, count + 1, dtype=float)[:, None]
    u = np.mod(0.5 + k * alpha[None, :], 1.0)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    rows = ndtri(u)
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def polar_cap_rows(
    center: np.ndarray, radius: float, rings: int = 24, angles: int = 72
) -> np.ndarray:
    """Geodesic polar grid on the cap of the given radius around a center row.

    Returns the center row followed by rings x angles points, ring radii
    evenly spaced in (0, radius]. Certification grids use such caps to
    resolve features far below the global grid spacing around one point.

    Raises:
        UnsupportedDimension: for ambient dimension other than 3.
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (3,):
        raise UnsupportedDimension("polar caps are only defined on the 2-sphere")
    n = center / np.linalg.norm(center)
    probe = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, probe)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    r = np.linspace(radius / rings, radius, rings)
    ang = np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False)
    dirs = np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2
    cap = (
        np.cos(r)[:, None, None] * n
        + np.sin(r)[:, None, None] * dirs[None, :, :]
    ).reshape(-1, 3)
    return np.vstack([n[None, :], cap])


def _plastic_root(d: int) -> float:
    # Unique real root > 1 of x^(d+1) = x + 1.
    x = 1.5
    for _ in range(64):
        x = x - (x ** (d + 1) - x - 1.0) / ((d + 1) * x**d - 1.0)
    return x


# ---------------------------------------------------------------------------
# Array-layer helpers used by the scan code paths.
# ---------------------------------------------------------------------------


def as_rows(points) -> np.ndarray:
    """Stack SpherePoints (or pass through an array) into (N, n) rows."""
    if isinstance(points, np.ndarray):
        return points
    return np.stack([p.coords for p in points], axis=0)


def unit_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=float)
    return rows / np.linalg.norm(rows, axis=-1, keepdims=True)


def pairwise_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All geodesic distances between rows of a and rows of b."""
    return np.arccos(np.clip(a @ b.T, -1.0, 1.0))


def rows_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise geodesic distances between matched rows of a and b."""
    return np.arccos(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))


def exp_rows(base: np.ndarray, vel: np.ndarray) -> np.ndarray:
    """Batch exponential map; zero velocities map to the base rows."""
    r = np.linalg.norm(vel, axis=-1)
    # sin(r)/r * vel supplies the sin(r) * direction term and is exact at r=0.
    return np.cos(r)[..., None] * base + sin_over_r(r)[..., None] * vel


def log_rows(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Batch logarithm map; rows at the exact base give zero vectors."""
    dots = np.clip(np.sum(base * target, axis=-1), -1.0, 1.0)
    d = np.arccos(dots)
    perp = target - dots[..., None] * base
    nrm = np.linalg.norm(perp, axis=-1)
    scale = np.where(nrm > 0.0, d / np.where(nrm > 0.0, nrm, 1.0), 0.0)
    return perp * scale[..., None]


def project_tangent_rows(base: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Remove the radial component of vec rows relative to base rows."""
    return vec - np.sum(vec * base, axis=-1, keepdims=True) * base


def sample_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Uniform random unit rows (Gaussian normalization)."""
    if dim < 3:
        raise UnsupportedDimension(f"ambient dimension must be >= 3, got {dim}")
    return unit_rows(rng.normal(size=(count, dim)))


def sample_tangent_rows(rng: np.random.Generator, base: np.ndarray) -> np.ndarray:
    """Random unit tangent rows over the given base rows."""
    v = project_tangent_rows(base, rng.normal(size=base.shape))
    return unit_rows(v)


# ---------------------------------------------------------------------------
# Point-cloud files: one point per line, whitespace separated decimals,
# optional trailing weight column, '#' starts a comment.
# ---------------------------------------------------------------------------


def save_point_cloud(path, points, weights=None) -> None:
    rows = as_rows(points)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# sphere point cloud, dim={rows.shape[1]}\n")
        for i, row in enumerate(rows):
            line = " ".join(f"{c:.17g}" for c in row)
            if weights is not None:
                line += f" {float(weights[i]):.17g}"
            fh.write(line + "\n")


def load_point_cloud(path, dim: int):
    """Read a point-cloud file.

    Args:
        path: file to read.
        dim: expected ambient dimension; rows with dim+1 fields carry a
             trailing weight.

    Returns:
        (points, weights): (N, dim) unit rows and a weight vector or None.
    """
    coords: list[list[float]] = []
    weights: list[float] = []
    has_weights = None
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = [float(tok) for tok in line.split()]
            if len(fields) == dim:
                row_w = None
            elif len(fields) == dim + 1:
                row_w = fields[-1]
                fields = fields[:-1]
            else:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} or {dim + 1} fields, "
                    f"got {len(fields)}"
                )
            this_has = row_w is not None
            if has_weights is None:
                has_weights = this_has
            elif has_weights != this_has:
                raise ValueError(f"{path}:{lineno}: inconsistent weight column")
            coords.append(fields)
            if this_has:
                weights.append(row_w)
    if not coords:
        raise ValueError(f"{path}: no points found")
    rows = unit_rows(np.array(coords))
    return rows, (np.array(weights) if has_weights else None)
