"""Method of fundamental solutions with the subspace-angle indicator.

Basis: Y0(k|x - y_j|) with sources y_j pushed off the boundary along the
outward normal.  The indicator is the smallest singular value of the
boundary rows of an orthonormal basis for the span of [A_B; A_I], where the
interior rows sample fixed random interior nodes; this keeps the trivial
"small everywhere" combinations from producing spurious minima.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import y0, y1

from ..errors import IllConditioned
from ..geometry import DomainSpec, as_boundary
from .area import area_rules

OFFSET = 0.15
RANK_TOL = 1e-13


@dataclass
class HelmholtzBasis:
    sources: np.ndarray
    collocation: np.ndarray
    interior: np.ndarray
    offsets: np.ndarray = field(repr=False)

    @property
    def n_src(self):
        return len(self.sources)

    @property
    def n_col(self):
        return len(self.collocation)

    def matrix(self, k, pts):
        d = np.hypot(pts[:, None, 0] - self.sources[None, :, 0], pts[:, None, 1] - self.sources[None, :, 1])
        return y0(k * d)

    def gradient(self, k, pts):
        dx = pts[:, None, 0] - self.sources[None, :, 0]
        dy = pts[:, None, 1] - self.sources[None, :, 1]
        r = np.hypot(dx, dy)
        f = -k * y1(k * r) / r
        return f * dx, f * dy


def _bump_features(domain):
    if isinstance(domain, DomainSpec):
        return [(bm.center, bm.half_width) for bm in domain.bumps]
    return []


def _arc_samples(bd, n, bumps):
    """n arc-length-uniform samples, with doubled density over bump supports."""
    s = (np.arange(n) + 0.5) * bd.perimeter / n
    if bumps:
        X = bd.evaluate(s)[0]
        extra = []
        ds = bd.perimeter / n
        for c, w in bumps:
            on = (np.abs(X[:, 0] - c) < w) & (X[:, 1] <= 1e-12)
            extra.append(s[on] + 0.5 * ds)
        s = np.sort(np.concatenate([s] + extra))
    return s


def make_basis(domain, n_src=None, n_col=None, n_int=None, seed=0, k=None):
    bd = as_boundary(domain)
    lo, hi = bd.bbox
    diam = float(np.hypot(*(hi - lo)))
    if n_src is None:
        kk = 5.0 if k is None else k
        n_src = int(max(60, math.ceil(bd.perimeter * kk * 10)))
    if n_col is None:
        n_col = 2 * n_src
    if n_col < 2 * n_src:
        raise ValueError("need n_col >= 2 n_src")
    bumps = _bump_features(domain)
    ss = _arc_samples(bd, n_src, bumps)
    X, _, N, _ = bd.evaluate(ss)
    d = np.full(len(ss), OFFSET * diam)
    feats = [2 * w for _, w in bumps]
    if len(bumps) > 1:
        cs = sorted(c for c, _ in bumps)
        feats += list(np.diff(cs))
    for c, w in bumps:
        near = np.abs(X[:, 0] - c) < 3 * w
        d[near] = np.minimum(d[near], OFFSET * min(diam, min(feats)))
    corners = bd.corner_points()
    for cp in corners:
        # keep sources off the bisector region right next to a corner
        rc = np.hypot(X[:, 0] - cp[0], X[:, 1] - cp[1])
        d = np.where(rc < d, np.maximum(rc, 0.25 * d), d)
    src = X + d[:, None] * N
    for _ in range(30):
        bad = bd.contains(src)
        if not bad.any():
            break
        d[bad] *= 0.7
        src = X + d[:, None] * N
    else:
        raise IllConditioned("could not place all sources outside the domain")
    sc = _arc_samples(bd, n_col, bumps)
    col = bd.evaluate(sc)[0]
    rng = np.random.default_rng(seed)
    n_int = n_int or n_src
    P = bd.sample_interior(n_int, rng)
    return HelmholtzBasis(src, col, P, d)


def _orth(basis, k):
    A = np.vstack([basis.matrix(k, basis.collocation), basis.matrix(k, basis.interior)])
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * s[0]))
    return U[:, :r], s, r


def mfs_indicator(domain, k, basis=None, **kw):
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    basis = basis or make_basis(domain, k=k, **kw)
    Q, s, r = _orth(basis, k)
    si = np.linalg.svd(Q[basis.n_col:], compute_uv=False)
    if np.sum(si > 1e-10) < min(len(basis.interior), r) // 2:
        raise IllConditioned("interior block is rank-deficient; re-sample interior nodes")
    return float(np.linalg.svd(Q[:basis.n_col], compute_uv=False)[-1])


def _golden(f, a, b, tol=1e-10):
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b), b - a


@dataclass
class MfsPair:
    lam: float
    k: float
    domain: object = field(repr=False)
    basis: HelmholtzBasis = field(repr=False)
    coef: np.ndarray = field(repr=False)
    indicator: float
    bracket: float
    method: str = "mfs"
    index: int = 0

    @cached_property
    def scale(self):
        P, W = area_rules(self.domain)["vertical"]
        v = self.basis.matrix(self.k, P) @ self.coef
        c = self.basis.matrix(self.k, self.basis.interior) @ self.coef
        sgn = 1.0 if np.sum(c) >= 0 else -1.0
        return sgn / math.sqrt(float(np.sum(W * v * v)))

    def psi(self, points):
        return self.basis.matrix(self.k, np.atleast_2d(points)) @ self.coef * self.scale

    @cached_property
    def boundary_residual(self):
        bd = as_boundary(self.domain)
        s = (np.arange(4 * self.basis.n_col) + 0.5) * bd.perimeter / (4 * self.basis.n_col)
        v = self.psi(bd.evaluate(s)[0])
        return float(np.max(np.abs(v)) * math.sqrt(bd.area))

    @property
    def error(self):
        return float(max(self.lam * math.sqrt(2) * self.boundary_residual, 2 * self.k * self.bracket))

    def to_row(self):
        return (self.index, self.lam, self.k, self.error, self.method)


def mfs_refine(domain, k_lo, k_hi, basis=None, tol=1e-10):
    basis = basis or make_basis(domain, k=k_hi)
    k, br = _golden(lambda kk: mfs_indicator(domain, kk, basis), k_lo, k_hi, tol)
    Q, s, r = _orth(basis, k)
    QB = Q[:basis.n_col]
    _, sv, Vh = np.linalg.svd(QB, full_matrices=False)
    z = Vh[-1]
    # coefficients of the combination U z in terms of the original basis
    A = np.vstack([basis.matrix(k, basis.collocation), basis.matrix(k, basis.interior)])
    coef, *_ = np.linalg.lstsq(A, Q @ z, rcond=RANK_TOL)
    return MfsPair(k * k, k, domain, basis, coef, float(sv[-1]), br)


def find_eigs_mfs(domain, k_min, k_max, n_scan=100, threshold=0.3, **kw):
    basis = make_basis(domain, k=k_max, **kw)
    ks = np.linspace(k_min, k_max, n_scan)
    vals = np.array([mfs_indicator(domain, k, basis) for k in ks])
    dk = ks[1] - ks[0]
    thresh = threshold * np.median(vals)
    out = []
    for i in range(n_scan):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < n_scan - 1 else np.inf
        if vals[i] <= left and vals[i] < right and vals[i] < thresh:
            p = mfs_refine(domain, max(k_min, ks[i] - dk), min(k_max, ks[i] + dk), basis)
            p.index = len(out)
            out.append(p)
    return out
