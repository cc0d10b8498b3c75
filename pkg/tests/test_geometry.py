import math
import warnings

import numpy as np
import pytest

from isolab.errors import DegenerateEllipse, OverlapViolation, ZoneViolation
from isolab.geometry import (BumpSpec, bump_profile, bump_profile_derivs, build_domain, build_ellipse,
                             domain_from_dict, make_pair, mirror_bumps, zone_of)


def test_ellipse_foci():
    ell = build_ellipse(2.0, 1.0)
    assert ell.c == pytest.approx(math.sqrt(3), abs=1e-15)
    with pytest.raises(DegenerateEllipse):
        build_ellipse(1.0, 1.0)


def test_bump_profile_compact_and_smooth():
    assert bump_profile(0.0) == 1.0
    assert bump_profile(1.0) == 0.0 and bump_profile(-1.5) == 0.0
    t = np.linspace(-0.9, 0.9, 41)
    p, d1, d2 = bump_profile_derivs(t)
    h = 1e-6
    fd1 = (bump_profile(t + h) - bump_profile(t - h)) / (2 * h)
    fd2 = (bump_profile(t + h) - 2 * p + bump_profile(t - h)) / h**2
    assert np.max(np.abs(fd1 - d1)) < 1e-7
    assert np.max(np.abs(fd2 - d2)) < 1e-2


def test_zones(pair):
    ell = pair.ellipse
    B1, B2 = pair.omega1.outer_bumps
    M, = pair.omega1.focal_bumps
    assert zone_of(B1, ell, 0.01) == "left-outer"
    assert zone_of(B2, ell, 0.01) == "right-outer"
    assert zone_of(M, ell, 0.01) == "focal"
    assert zone_of(BumpSpec(ell.c, 0.1, 0.1), ell) is None


def test_build_domain_rejects_bad_bumps():
    ell = build_ellipse(2.0, 1.0)
    with pytest.raises(ZoneViolation):
        build_domain(ell, focal=[BumpSpec(1.7, 0.1, 0.1)])
    with pytest.raises(OverlapViolation):
        build_domain(ell, focal=[BumpSpec(0.0, 0.3, 0.1), BumpSpec(0.5, 0.3, 0.1)])


def test_pair_is_mirror(pair):
    assert pair.status == "ok"
    assert pair.omega2.focal_bumps == mirror_bumps(pair.omega1.focal_bumps)
    assert pair.omega1.outer_bumps == pair.omega2.outer_bumps
    # equal areas and perimeters: the bottom graphs are mirror images
    assert pair.omega1.boundary.area == pytest.approx(pair.omega2.boundary.area, rel=1e-13)
    assert pair.omega1.perimeter == pytest.approx(pair.omega2.perimeter, rel=1e-13)


def test_self_dual_pair_warns(pair):
    B1, B2 = pair.omega1.outer_bumps
    with pytest.warns(UserWarning, match="identical"):
        make_pair(pair.ellipse, B1, B2, BumpSpec(0.0, 0.3, 0.2))


def test_half_ellipse_area_and_perimeter(half_ellipse):
    bd = half_ellipse.boundary
    assert bd.area == pytest.approx(math.pi, rel=1e-12)
    from scipy.special import ellipe
    per = 4 * 2.0 * ellipe(1 - 0.25) / 2 + 4.0
    assert bd.perimeter == pytest.approx(per, rel=1e-12)


def test_boundary_evaluate_consistent(pair):
    bd = pair.omega1.boundary
    s = (np.arange(97) + 0.5) * bd.perimeter / 97   # away from the corners
    X, T, N, K = bd.evaluate(s)
    assert np.allclose(np.hypot(*T.T), 1.0, atol=1e-13)
    assert np.allclose(np.einsum("ij,ij->i", T, N), 0.0, atol=1e-13)
    # outward normal: a small step along -N lands inside
    assert bd.contains(X - 1e-6 * N).all()
    assert not bd.contains(X + 1e-6 * N).any()


def test_domain_roundtrip(pair):
    d = pair.omega1.to_dict()
    assert domain_from_dict(d) == pair.omega1


def test_rounding_meets_bump():
    ell = build_ellipse(2.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(OverlapViolation):
            build_domain(ell, outer=[BumpSpec(-1.85, 0.06, 0.05)], rounding=0.3)
