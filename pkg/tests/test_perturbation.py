import numpy as np
import pytest

from isolab.errors import SupportViolation
from isolab.geometry import BumpSpec, DomainSpec, build_ellipse
from isolab.perturbation import (Certificate, PerturbationSpec, SegmentPair, evenness_defect, fd_rate_check,
                                 genericity_scan, hadamard_rate, pair_rates, sample_bumps)
from isolab.perturbation.certify import _verdict
from isolab.perturbation.hadamard import check_support
from isolab.spectral import ground_state, normal_trace

M = BumpSpec(-0.8, 0.3, 0.25)


@pytest.fixture(scope="module")
def sym(half_ellipse):
    gp = ground_state(half_ellipse, check_level=False)
    return gp, normal_trace(gp)


def test_unit_shape():
    f = PerturbationSpec.unit(M)
    x = np.linspace(-1.1, -0.5, 2001)
    assert f(x).min() == pytest.approx(-1.0, abs=1e-12)
    assert f.reflect().bumps == (BumpSpec(0.8, 0.3, 1.0),)
    assert f.amplitude(1e-3) == (BumpSpec(-0.8, 0.3, 1e-3),)
    assert f.amplitude(0.0) == ()


def test_disk_validation_mode(disk_ground):
    # uniform inward displacement of the unit disk: dlam/dR = -2 lam
    r = hadamard_rate(normal_trace(disk_ground), lambda X: -np.ones(len(X)))
    assert r == pytest.approx(-2 * disk_ground.lam, rel=1e-10)


def test_symmetric_domain_rates_equal(sym):
    gp, tr = sym
    f = PerturbationSpec.unit(M)
    d1, d2 = hadamard_rate(tr, f), hadamard_rate(tr, f.reflect())
    assert d1 < 0
    assert abs(d1 - d2) <= 1e-9 * abs(d1)
    ell = build_ellipse(2.0, 1.0)
    seg = SegmentPair(0.1 * ell.c, 0.9 * ell.c)
    assert evenness_defect(tr, seg) < 1e-8


def test_rate_linear_and_zero(sym):
    tr = sym[1]
    f = PerturbationSpec((M,))
    f2 = PerturbationSpec((M.scaled(2.0),))
    assert hadamard_rate(tr, f2) == pytest.approx(2 * hadamard_rate(tr, f), rel=1e-14)
    assert hadamard_rate(tr, PerturbationSpec()) == 0.0
    two = PerturbationSpec((M, BumpSpec(0.5, 0.2, 0.1)))
    parts = hadamard_rate(tr, f) + hadamard_rate(tr, PerturbationSpec((BumpSpec(0.5, 0.2, 0.1),)))
    assert hadamard_rate(tr, two) == pytest.approx(parts, rel=1e-13)


def test_support_violations(half_ellipse, sym):
    with pytest.raises(SupportViolation):
        hadamard_rate(sym[1], PerturbationSpec((BumpSpec(1.75, 0.1, 0.1),)))
    dom = DomainSpec(build_ellipse(2.0, 1.0), (), (M,))
    with pytest.raises(SupportViolation):
        check_support(dom, PerturbationSpec((BumpSpec(-0.6, 0.2, 0.1),)))
    with pytest.raises(SupportViolation):
        pair_rates(dom, PerturbationSpec((M,)))
    with pytest.raises(SupportViolation):
        SegmentPair(0.5, 1.8).check(half_ellipse.ellipse)


def test_evenness_needs_samples(sym):
    with pytest.raises(ValueError):
        evenness_defect(sym[1], SegmentPair(0.2, 1.5), n_samples=8)
    with pytest.raises(ValueError):
        SegmentPair(0.5, 0.2)


def test_fd_check_zero_profile(half_ellipse, sym):
    rc = fd_rate_check(half_ellipse, PerturbationSpec(), base=sym[0])
    assert rc.rate == 0.0 and rc.deviation == 0.0 and not rc.nonlinear
    with pytest.raises(ValueError):
        fd_rate_check(half_ellipse, PerturbationSpec(), eps_list=[1e-3, 0.0], base=sym[0])


def test_verdicts():
    assert _verdict(1.0, 0.1, 5) is True
    assert _verdict(0.1, 0.1, 5) is False
    assert _verdict(0.3, 0.1, 5) is None


def _cert(spectra, rates, match=True):
    return Certificate(1.0, 1.0, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0, {}, match, spectra, rates, {}, {})


def test_certificate_status():
    assert _cert(True, True).status == "NONISOSPECTRAL"
    assert _cert(True, True, match=False).status == "NOT-SEPARATED"
    assert _cert(False, False).status == "NOT-SEPARATED"
    assert _cert(True, None).status == "INCONCLUSIVE"


def test_sample_bumps(half_ellipse):
    ell = half_ellipse.ellipse
    a = sample_bumps(ell, 30, 7, half_ellipse.clearance)
    assert a == sample_bumps(ell, 30, 7, half_ellipse.clearance)
    assert a[:10] == sample_bumps(ell, 10, 7, half_ellipse.clearance)
    for bm in a:
        check_support(half_ellipse, PerturbationSpec((bm,)))
        assert bm.center <= 0


def test_genericity_symmetric(half_ellipse, sym):
    gp, tr = sym
    rep = genericity_scan(half_ellipse, 10, 0, trace=tr, rel_floor=gp.moler_payne)
    assert rep["fraction"] == 0.0
    assert genericity_scan(half_ellipse, 0, 0)["samples"] == []
