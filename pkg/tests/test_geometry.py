import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphere_ot.errors import (
    AntipodalError,
    DegenerateAxis,
    DomainError,
    UnsupportedDimension,
)
from sphere_ot.geometry import (
    SpherePoint,
    TangentVector,
    distance,
    exp_map,
    fibonacci_grid,
    fibonacci_rows,
    load_point_cloud,
    log_map,
    orthonormal_frame,
    pairwise_distance,
    parallel_transport,
    sample_sphere,
    save_point_cloud,
)

from conftest import random_point, random_tangent


def _units(draw_dim=3):
    return st.lists(
        st.floats(-1.0, 1.0, allow_nan=False), min_size=draw_dim, max_size=draw_dim
    ).filter(lambda v: np.linalg.norm(v) > 1e-3)


# ---------------------------------------------------------------- distance


def test_distance_identical_and_antipodal():
    x = SpherePoint([0.0, 0.0, 1.0])
    assert distance(x, x) == 0.0
    assert distance(x, x.antipode()) == pytest.approx(math.pi, abs=1e-15)


def test_distance_orthogonal_axes():
    x = SpherePoint([1.0, 0.0, 0.0])
    y = SpherePoint([0.0, 1.0, 0.0])
    assert distance(x, y) == pytest.approx(math.pi / 2, abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(_units(), _units())
def test_distance_symmetry_exact(u, v):
    x, y = SpherePoint(u), SpherePoint(v)
    assert distance(x, y) == distance(y, x)


@settings(max_examples=80, deadline=None)
@given(_units(), _units(), _units())
def test_triangle_inequality(u, v, w):
    x, y, z = SpherePoint(u), SpherePoint(v), SpherePoint(w)
    assert distance(x, z) <= distance(x, y) + distance(y, z) + 1e-10


def test_distance_matches_frame_coordinates(rng):
    # distance computed from normal coordinates of y around x agrees with
    # the ambient formula for any frame choice
    for _ in range(25):
        x = random_point(rng)
        y = random_point(rng)
        if distance(x, y) > math.pi - 0.05:
            continue
        fr = orthonormal_frame(x, random_tangent(rng, x))
        comps = fr.coords_of(log_map(x, y))
        assert np.linalg.norm(comps) == pytest.approx(distance(x, y), abs=1e-10)


# ------------------------------------------------------------- exp and log


def test_exp_zero_vector_is_base():
    x = SpherePoint([0.3, -0.4, 0.86])
    p = TangentVector(x, np.zeros(3))
    assert distance(exp_map(x, p), x) == 0.0


def test_exp_quarter_turn():
    x = SpherePoint([0.0, 0.0, 1.0])
    p = TangentVector(x, [math.pi / 2, 0.0, 0.0])
    y = exp_map(x, p)
    assert np.allclose(y.coords, [1.0, 0.0, 0.0], atol=1e-15)


def test_exp_rejects_wrapped_input():
    x = SpherePoint([0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        exp_map(x, TangentVector(x, [2.0 * math.pi, 0.0, 0.0]))


def test_log_of_antipode_raises():
    x = SpherePoint([0.0, 0.0, 1.0])
    with pytest.raises(AntipodalError):
        log_map(x, x.antipode())


@settings(max_examples=60, deadline=None)
@given(_units(), st.floats(1e-6, 3.13), st.integers(0, 10 ** 6))
def test_exp_log_round_trip(u, r, salt):
    rng = np.random.default_rng(salt)
    x = SpherePoint(u)
    v = random_tangent(rng, x)
    p = r * v
    y = exp_map(x, p)
    back = log_map(x, y)
    assert np.linalg.norm(back.vec - p.vec) <= 1e-9


def test_round_trip_both_orders(rng):
    # Chordal norm resolves errors far below the ~1e-8 floor of arccos.
    for dim in (3, 4, 6):
        for _ in range(20):
            x = random_point(rng, dim)
            y = random_point(rng, dim)
            if distance(x, y) > math.pi - 0.01:
                continue
            again = exp_map(x, log_map(x, y))
            assert np.linalg.norm(again.coords - y.coords) <= 1e-9
            p = log_map(x, y)
            back = log_map(x, exp_map(x, p))
            assert np.linalg.norm(back.vec - p.vec) <= 1e-9


# ------------------------------------------------------------------ frames


def test_frame_orthonormality_many_points(rng):
    for dim in (3, 4, 5, 6):
        for _ in range(250):
            x = random_point(rng, dim)
            fr = orthonormal_frame(x)
            m = np.vstack([x.coords, fr.axes])
            assert np.max(np.abs(m @ m.T - np.eye(dim))) <= 1e-12


def test_frame_is_deterministic():
    x = SpherePoint([0.2, 0.3, -0.5, 0.7])
    a = orthonormal_frame(x).axes
    b = orthonormal_frame(x).axes
    assert np.array_equal(a, b)


def test_frame_first_axis_respected(rng):
    x = random_point(rng)
    t = random_tangent(rng, x, unit=False) * 2.5
    fr = orthonormal_frame(x, first_axis=t)
    assert np.allclose(fr.axes[0], t.vec / t.norm, atol=1e-14)


def test_frame_degenerate_axis(rng):
    x = random_point(rng)
    with pytest.raises(DegenerateAxis):
        orthonormal_frame(x, first_axis=TangentVector(x, np.zeros(3)))


def test_tangent_vector_rejects_radial():
    x = SpherePoint([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        TangentVector(x, [0.0, 0.0, 0.5])


# ------------------------------------------------------------- transport


def test_parallel_transport_preserves_norm_and_geodesic_tangent(rng):
    for _ in range(30):
        x = random_point(rng)
        y = random_point(rng)
        d = distance(x, y)
        if d > math.pi - 0.05 or d < 1e-3:
            continue
        u = log_map(x, y) * (1.0 / d)
        w = random_tangent(rng, x, unit=False) * 1.7
        out = parallel_transport(x, y, w)
        assert out.norm == pytest.approx(w.norm, abs=1e-12)
        # the geodesic direction transports onto the outgoing direction at y
        tu = parallel_transport(x, y, u)
        back = log_map(y, x) * (1.0 / d)
        assert np.allclose(tu.vec, -back.vec, atol=1e-12)


# ------------------------------------------------------------- fibonacci


def test_fibonacci_single_point_deterministic():
    a = fibonacci_grid(3, 1)
    b = fibonacci_grid(3, 1)
    assert len(a) == 1 and a[0] == b[0]


def test_fibonacci_rejects_low_dimension():
    with pytest.raises(UnsupportedDimension):
        fibonacci_grid(2, 10)


def test_fibonacci_ball_mass_uniformity():
    # mass of metric balls of radius 0.3 vs exact cap area, 1e4 points
    rows = fibonacci_rows(3, 10_000)
    rng = np.random.default_rng(5)
    centers = sample_sphere(rng, 200, 3)
    frac = (centers @ rows.T >= math.cos(0.3)).mean(axis=1)
    exact = (1.0 - math.cos(0.3)) / 2.0
    assert np.max(np.abs(frac - exact) / exact) <= 0.05


def test_fibonacci_higher_dim_rows_are_unit_and_spread():
    rows = fibonacci_rows(5, 4000)
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)
    # crude uniformity: all coordinate means near zero
    assert np.max(np.abs(rows.mean(axis=0))) < 0.05


# ---------------------------------------------------------------- file io


def test_point_cloud_round_trip(tmp_path, rng):
    rows = sample_sphere(rng, 17, 4)
    w = rng.uniform(0.1, 1.0, size=17)
    path = tmp_path / "cloud.txt"
    save_point_cloud(path, rows, weights=w)
    back, wback = load_point_cloud(path, dim=4)
    assert np.allclose(back, rows, atol=1e-15)
    assert np.allclose(wback, w, atol=1e-15)


def test_point_cloud_without_weights(tmp_path, rng):
    rows = sample_sphere(rng, 5, 3)
    path = tmp_path / "cloud.txt"
    save_point_cloud(path, rows)
    back, wback = load_point_cloud(path, dim=3)
    assert wback is None and back.shape == (5, 3)


def test_point_cloud_rejects_ragged(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 0 0\n0 1\n")
    with pytest.raises(ValueError):
        load_point_cloud(path, dim=3)


def test_pairwise_distance_matches_scalar(rng):
    a = sample_sphere(rng, 8, 3)
    b = sample_sphere(rng, 6, 3)
    m = pairwise_distance(a, b)
    for i in range(8):
        for j in range(6):
            assert m[i, j] == pytest.approx(
                distance(SpherePoint(a[i]), SpherePoint(b[j])), abs=1e-15
            )
