import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_point(rng, dim=3):
    from sphere_ot.geometry import SpherePoint

    return SpherePoint(rng.normal(size=dim))


def random_tangent(rng, base, unit=True):
    from sphere_ot.geometry import TangentVector

    v = rng.normal(size=base.dim)
    v = v - (v @ base.coords) * base.coords
    if unit:
        v = v / np.linalg.norm(v)
    return TangentVector(base, v)
