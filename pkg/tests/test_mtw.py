import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_ot._series import bowl_ratio, lens_combo, shell_ratio
from sphere_ot.costs import antenna, custom_profile, quadratic
from sphere_ot.errors import ConfigError, CutLocusError, DomainError, GradientOutOfRange
from sphere_ot.geometry import SpherePoint, TangentVector, exp_map
from sphere_ot.mtw import (
    CurvatureQuery,
    MTW_NORMALIZATION,
    certify_as,
    inequality_constants,
    mtw_closed_form,
    mtw_closed_form_scan,
    mtw_fd,
    write_report_csv,
    write_report_json,
)

from conftest import random_point, random_tangent

QUAD = quadratic()
ANTE = antenna()


def make_query(rng, dim=3, r=None, low=0.1, high=math.pi - 0.15):
    x = random_point(rng, dim)
    geo = random_tangent(rng, x)
    xi = random_tangent(rng, x)
    nu_raw = rng.normal(size=dim)
    nu_raw = nu_raw - (nu_raw @ x.coords) * x.coords
    nu_raw = nu_raw - (nu_raw @ xi.vec) * xi.vec
    nu = TangentVector(x, nu_raw / np.linalg.norm(nu_raw))
    if r is None:
        r = rng.uniform(low, high)
    y = exp_map(x, float(r) * geo)
    return CurvatureQuery(x=x, y=y, xi=xi, nu=nu)


def test_near_diagonal_value_is_three_halves(rng):
    for _ in range(5):
        q = make_query(rng, r=0.01)
        assert abs(mtw_fd(QUAD, q) - 1.5) <= 5e-2


def test_bilinear_scaling(rng):
    q = make_query(rng, r=1.2)
    base_fd = mtw_fd(QUAD, q)
    base_cf = mtw_closed_form(QUAD, q)
    scaled = CurvatureQuery(q.x, q.y, 2.0 * q.xi, q.nu)
    assert mtw_fd(QUAD, scaled) == pytest.approx(4.0 * base_fd, rel=1e-3)
    both = CurvatureQuery(q.x, q.y, 2.0 * q.xi, 3.0 * q.nu)
    assert mtw_fd(QUAD, both) == pytest.approx(36.0 * base_fd, rel=1e-6)
    assert mtw_closed_form(QUAD, both) == pytest.approx(36.0 * base_cf, rel=1e-6)


def test_route_agreement_on_random_queries(rng):
    for _ in range(200):
        q = make_query(rng, dim=int(rng.integers(3, 5)), low=0.05, high=math.pi - 0.1)
        fd = mtw_fd(QUAD, q)
        cf = mtw_closed_form(QUAD, q)
        assert abs(fd - cf) <= max(1e-2 * abs(cf), 1e-3)


def test_antenna_step_consistency(rng):
    for _ in range(40):
        q = make_query(rng, low=0.1, high=math.pi - 0.3)
        a = mtw_fd(ANTE, q, h=1e-2)
        b = mtw_fd(ANTE, q, h=2e-2)
        assert abs(a - b) <= max(1e-2 * abs(a), 1e-3)


def test_closed_form_small_radius_limit(rng):
    q = make_query(rng, r=1e-3)
    assert mtw_closed_form(QUAD, q) == pytest.approx(1.5, abs=1e-4)


def test_closed_form_radial_section_dim4():
    x = SpherePoint([0.0, 0.0, 0.0, 1.0])
    geo = TangentVector(x, [1.0, 0.0, 0.0, 0.0])
    nu = TangentVector(x, [0.0, 1.0, 0.0, 0.0])
    xi = TangentVector(x, [0.0, 0.0, 1.0, 0.0])
    q = CurvatureQuery(x, exp_map(x, geo), xi, nu)
    want = MTW_NORMALIZATION * (1.0 - math.sin(1.0) * math.cos(1.0)) / math.sin(1.0) ** 2
    assert mtw_closed_form(QUAD, q) == pytest.approx(want, abs=1e-12)
    assert mtw_fd(QUAD, q) == pytest.approx(want, abs=1e-4)


def test_positivity_on_decomposition_grid():
    r = np.linspace(1e-3, math.pi - 0.05, 100)[:, None, None]
    tau = np.linspace(-0.999, 0.999, 50)[None, :, None]
    cr = np.linspace(-1.0, 1.0, 20)[None, None, :]
    vals = mtw_closed_form_scan(r, tau, cr)
    assert vals.size == 100_000
    assert vals.min() >= 1.49


@settings(max_examples=200, deadline=None)
@given(
    r=st.floats(1e-3, math.pi - 0.05),
    tau=st.floats(-0.9999, 0.9999),
    cr=st.floats(-1.0, 1.0),
)
def test_closed_form_never_below_three_halves(r, tau, cr):
    assert float(mtw_closed_form_scan(r, tau, cr)) >= 1.4999


def test_inequality_constants_limits_and_floors():
    assert float(bowl_ratio(1e-6)) == pytest.approx(1.0 / 3.0, abs=1e-10)
    assert float(shell_ratio(1e-6)) == pytest.approx(2.0 / 3.0, abs=1e-10)
    c1, c2, trig = inequality_constants()
    assert c1 > 0.1
    assert c2 > 0.1
    assert c1 == pytest.approx(1.0 / math.pi**2, abs=1e-6)
    assert 0.0 <= trig <= 1e-20
    assert float(lens_combo(0.0)) == 0.0


def test_step_validation(rng):
    q = make_query(rng)
    with pytest.raises(DomainError):
        mtw_fd(QUAD, q, h=1e-4)
    with pytest.raises(DomainError):
        mtw_fd(QUAD, q, h=0.2)


def test_closed_form_requires_quadratic(rng):
    q = make_query(rng)
    with pytest.raises(ConfigError):
        mtw_closed_form(ANTE, q)


def test_closed_form_domain_errors(rng):
    x = random_point(rng)
    xi = random_tangent(rng, x)
    nu = random_tangent(rng, x)
    with pytest.raises(DomainError):
        mtw_closed_form(QUAD, CurvatureQuery(x, x, xi, nu))
    with pytest.raises(DomainError):
        mtw_closed_form(QUAD, CurvatureQuery(x, x.antipode(), xi, nu))


def test_gradient_bound_propagates_from_the_stencil(rng):
    x = random_point(rng)
    geo = random_tangent(rng, x)
    y = exp_map(x, (math.pi - 0.005) * geo)
    nu = geo  # aligned with p0, so the inner shift leaves the ball
    xi = TangentVector(x, np.cross(x.coords, geo.vec))
    with pytest.raises(GradientOutOfRange):
        mtw_fd(QUAD, CurvatureQuery(x, y, xi, nu))


def test_cut_locus_propagates_with_custom_cut(rng):
    prof = custom_profile(QUAD.f, QUAD.f1, QUAD.f2, QUAD.f3, QUAD.f4, domain_cut=1.0)
    x = random_point(rng)
    geo = random_tangent(rng, x)
    y = exp_map(x, 0.99 * geo)
    nu = TangentVector(x, np.cross(x.coords, geo.vec))
    with pytest.raises(CutLocusError):
        mtw_fd(prof, CurvatureQuery(x, y, geo, nu))


def test_certify_both_costs_positive():
    for prof in (QUAD, ANTE):
        rep = certify_as(prof, margin=0.1, samples=2000, seed=7)
        assert rep.samples > 0
        assert rep.c0_estimate > 0.0
        assert rep.certified
        assert rep.min_value == rep.c0_estimate
        assert rep.rows.shape == (rep.samples, 4)
        assert np.isfinite(rep.rows).all()
        assert rep.argmin.orthogonal(1e-9)


def test_certify_determinism():
    a = certify_as(QUAD, margin=0.1, samples=400, seed=31)
    b = certify_as(QUAD, margin=0.1, samples=400, seed=31)
    assert a.samples == b.samples
    assert a.min_value == b.min_value
    assert a.c0_estimate == b.c0_estimate
    assert np.array_equal(a.rows, b.rows)
    assert np.array_equal(a.argmin.x.coords, b.argmin.x.coords)
    assert np.array_equal(a.argmin.nu.vec, b.argmin.nu.vec)


def test_certify_monotone_in_margin():
    estimates = [
        certify_as(QUAD, margin=m, samples=1500, seed=5).c0_estimate
        for m in (0.4, 0.2, 0.1, 0.05)
    ]
    for tight, loose in zip(estimates[1:], estimates[:-1]):
        assert tight <= loose


def test_certify_scalar_path_matches_kernel():
    fast = certify_as(ANTE, margin=0.2, samples=60, seed=11, use_kernel=True)
    slow = certify_as(ANTE, margin=0.2, samples=60, seed=11, use_kernel=False)
    assert fast.samples == slow.samples
    scale = np.maximum(1.0, np.abs(slow.rows[:, 3]))
    assert np.max(np.abs(fast.rows[:, 3] - slow.rows[:, 3]) / scale) <= 1e-4
    assert np.allclose(fast.rows[:, :3], slow.rows[:, :3], atol=1e-12)


def test_certify_validates_arguments():
    with pytest.raises(DomainError):
        certify_as(QUAD, margin=0.01, samples=10, seed=0)
    with pytest.raises(DomainError):
        certify_as(QUAD, margin=0.1, samples=0, seed=0)
    with pytest.raises(DomainError):
        certify_as(QUAD, margin=math.pi, samples=10, seed=0)


def test_report_files_roundtrip(tmp_path):
    rep = certify_as(QUAD, margin=0.2, samples=50, seed=3)
    csv_path = tmp_path / "rows.csv"
    json_path = tmp_path / "summary.json"
    write_report_csv(rep, csv_path)
    write_report_json(rep, json_path)
    loaded = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert np.allclose(loaded, rep.rows, rtol=0, atol=0)
    with open(json_path) as fh:
        payload = json.load(fh)
    assert payload["c0_estimate"] == rep.c0_estimate
    assert payload["certified"] is True
    assert payload["samples"] == rep.samples
    assert len(payload["argmin"]["x"]) == 3


def test_query_orthogonality_check(rng):
    x = random_point(rng)
    xi = random_tangent(rng, x)
    nu_raw = rng.normal(size=3)
    nu_raw -= (nu_raw @ x.coords) * x.coords
    nu_raw -= (nu_raw @ xi.vec) * xi.vec
    nu = TangentVector(x, nu_raw / np.linalg.norm(nu_raw))
    y = exp_map(x, 1.0 * random_tangent(rng, x))
    assert CurvatureQuery(x, y, xi, nu).orthogonal()
    skew = TangentVector(x, nu.vec + 1e-3 * xi.vec)
    assert not CurvatureQuery(x, y, xi, skew).orthogonal()


def test_query_requires_matching_base(rng):
    x = random_point(rng)
    z = random_point(rng)
    with pytest.raises(ValueError):
        CurvatureQuery(x, z, random_tangent(rng, z), random_tangent(rng, x))
