import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from isolab.errors import GridTooCoarse
from isolab.geometry import disk, half_disk, square
from isolab.spectral import eval_eigenfunction, fd_oracle, find_eigs, normal_trace
from isolab.spectral.area import area_rules

J01 = jn_zeros(0, 1)[0]


def test_disk_ground_state(disk_ground):
    assert disk_ground.lam == pytest.approx(J01**2, rel=1e-10)
    assert disk_ground.error < 1e-8
    assert abs(disk_ground.lam - J01**2) <= 10 * disk_ground.error + 1e-12


def test_disk_normalization(disk_ground):
    # psi(0) of the unit-normalized J0 mode: 1 / (sqrt(pi) |J1(j01)|) = 1.086761636...
    assert abs(eval_eigenfunction(disk_ground, (0.0, 0.0))) == pytest.approx(1.086761636131273, rel=1e-8)
    assert disk_ground.normalization_defect < 1e-8


def test_disk_rellich(disk_ground):
    # int (x . nu) (d psi/d nu)^2 ds = 2 lambda
    tr = normal_trace(disk_ground)
    assert tr.rellich == pytest.approx(2 * disk_ground.lam, rel=1e-9)
    assert np.allclose(np.abs(tr.dpsi_dnu), np.abs(tr.dpsi_dnu[0]), rtol=1e-8)


def test_area_rules_agree():
    for shape, area in ((disk(), math.pi), (half_disk(), math.pi / 2), (square(), math.pi**2)):
        rules = area_rules(shape)
        for X, W in rules.values():
            assert W.sum() == pytest.approx(area, rel=1e-12)


def test_square_fd_oracle():
    lams = fd_oracle(square(), math.pi / 100, 2)
    assert lams[0] == pytest.approx(2.0, rel=1e-3)
    assert lams[1] == pytest.approx(5.0, rel=1e-3)
    # fixed ARPACK start vector: repeated calls agree bit for bit
    assert fd_oracle(square(), math.pi / 100, 2) == lams


def test_fd_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        fd_oracle(disk(), 1.0, 1)


def test_mfs_disk():
    pairs = find_eigs(disk(), 2.2, 2.6, n_scan=12, method="mfs")
    assert pairs
    assert pairs[0].lam == pytest.approx(J01**2, rel=1e-6)
