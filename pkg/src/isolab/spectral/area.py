"""Boundary-fitted area quadratures: vertical strips and horizontal strips.

Each strip family is a composite Gauss rule in the outer variable (graded
toward endpoints where the strip length has a square-root singularity)
times a Gauss rule across the strip.
"""
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..geometry import DomainSpec

NLEV = 20


def _graded(lo, hi, breaks=(), grade=(False, False), hmax=0.1, n=16, nlev=NLEV):
    br = [lo, hi] + [b for b in breaks if lo < b < hi]
    L = hi - lo
    for flag, e, sg in ((grade[0], lo, 1), (grade[1], hi, -1)):
        if flag:
            br += [e + sg * min(0.25, L / 4) * 2.0 ** -l for l in range(nlev)]
    inner = sorted(b for b in breaks if lo < b < hi)
    for b in inner:
        # flat-ended bump profiles are smooth but far from polynomial at their ends
        br += [b + sg * 0.02 * 2.0 ** -l for l in range(8) for sg in (-1, 1)]
    br = np.unique(np.round(np.sort(br), 15))
    edges = [br[0]]
    for a, b in zip(br[:-1], br[1:]):
        m = max(1, int(math.ceil((b - a) / hmax)))
        edges += list(a + (b - a) * np.arange(1, m + 1) / m)
    edges = np.asarray(edges)
    t, w = leggauss(n)
    h = 0.5 * np.diff(edges)
    c = 0.5 * (edges[1:] + edges[:-1])
    return (c[:, None] + h[:, None] * t[None, :]).ravel(), (h[:, None] * w[None, :]).ravel()


def _strips(pieces, n_outer=16, n_inner=20, swap=False, inner_breaks=()):
    """pieces: (lo, hi, f_lo, f_hi, grade, breaks).  Outer variable in [lo, hi],
    inner variable in [f_lo(t), f_hi(t)]."""
    ti, wi = leggauss(n_inner)
    P, W = [], []
    for lo, hi, flo, fhi, grade, brk in pieces:
        t, wt = _graded(lo, hi, brk, grade, n=n_outer)
        a = flo(t)
        b = fhi(t)
        for j in range(len(t)):
            ib = [a[j]] + [x for x in inner_breaks if a[j] < x < b[j]] + [b[j]]
            for u0, u1 in zip(ib[:-1], ib[1:]):
                hh = 0.5 * (u1 - u0)
                s = 0.5 * (u1 + u0) + hh * ti
                tt = np.full(n_inner, t[j])
                P.append(np.c_[s, tt] if swap else np.c_[tt, s])
                W.append(wt[j] * hh * wi)
    return np.vstack(P), np.concatenate(W)


def _pocket_halfwidth(bm, y):
    """x-offset from the bump centre where g = y (y in (-depth, 0))."""
    q = np.clip(-y / bm.depth, 1e-300, 1.0)
    return bm.half_width * np.sqrt(np.maximum(0.0, 1 - 1 / (1 - np.log(q))))


def _mushroom(dom):
    a, b = dom.ellipse.a, dom.ellipse.b
    bumps = dom.bumps
    top = lambda x: b * np.sqrt(np.maximum(0.0, 1 - (x / a) ** 2))
    ends = sorted(e for bm in bumps for e in bm.support)
    r = dom.corner_rounding
    if r > 0:
        xc, thT, _, yT = dom.fillet
        xT = a * math.cos(thT)
        low = lambda x: np.where(np.abs(x) > xc, r - np.sqrt(np.maximum(0.0, r * r - (np.abs(x) - xc) ** 2)), dom.g(x))
        up_c = lambda x: r + np.sqrt(np.maximum(0.0, r * r - (np.abs(x) - xc) ** 2))
        xs = [(-xc - r, -xT, low, up_c, (True, False), ()),
              (-xT, xT, low, top, (False, False), tuple(ends) + (-xc, xc)),
              (xT, xc + r, low, up_c, (False, True), ())]
        xend = lambda y: np.where(y < yT, xc + np.sqrt(np.maximum(0.0, r * r - (y - r) ** 2)),
                                  a * np.sqrt(np.maximum(0.0, 1 - (y / b) ** 2)))
        ys = [(0.0, yT, lambda y: -xend(y), xend, (True, False), (r,)),
              (yT, b, lambda y: -xend(y), xend, (False, True), ())]
    else:
        xs = [(-a, a, dom.g, top, (True, True), tuple(ends))]
        xend = lambda y: a * np.sqrt(np.maximum(0.0, 1 - (y / b) ** 2))
        ys = [(0.0, b, lambda y: -xend(y), xend, (False, True), ())]
    for bm in bumps:
        ys.append((-bm.depth, 0.0, lambda y, bm=bm: bm.center - _pocket_halfwidth(bm, y),
                   lambda y, bm=bm: bm.center + _pocket_halfwidth(bm, y), (True, True), ()))
    inner = tuple(ends) + ((-xc, xc) if r > 0 else ())
    return {"vertical": _strips(xs), "horizontal": _strips(ys, swap=True, n_inner=16, inner_breaks=inner)}


def _circle_rules(R, half):
    sq = lambda t: np.sqrt(np.maximum(0.0, R * R - t * t))
    zero = lambda t: 0 * t
    if half:
        xs = [(-R, R, zero, sq, (True, True), ())]
        ys = [(0.0, R, lambda y: -sq(y), sq, (False, True), ())]
    else:
        xs = [(-R, R, lambda x: -sq(x), sq, (True, True), ())]
        ys = [(-R, R, lambda y: -sq(y), sq, (True, True), ())]
    return {"vertical": _strips(xs), "horizontal": _strips(ys, swap=True, n_inner=24)}


def _ellipse_rules(a, b):
    top = lambda x: b * np.sqrt(np.maximum(0.0, 1 - (x / a) ** 2))
    side = lambda y: a * np.sqrt(np.maximum(0.0, 1 - (y / b) ** 2))
    xs = [(-a, a, lambda x: -top(x), top, (True, True), ())]
    ys = [(-b, b, lambda y: -side(y), side, (True, True), ())]
    return {"vertical": _strips(xs), "horizontal": _strips(ys, swap=True, n_inner=24)}


def _square_rules(L):
    c = lambda t: 0 * t
    e = lambda t: 0 * t + L
    return {"vertical": _strips([(0.0, L, c, e, (False, False), ())]),
            "horizontal": _strips([(0.0, L, c, e, (False, False), ())], swap=True, n_outer=12, n_inner=24)}


def area_rules(obj):
    """Two independent (points, weights) rules covering the domain."""
    if isinstance(obj, DomainSpec):
        return _mushroom(obj)
    name = getattr(obj, "name", "")
    seg = obj.segments[-1]
    if name == "disk":
        return _circle_rules(seg.r, False)
    if name == "half-disk":
        return _circle_rules(seg.r, True)
    if name == "ellipse":
        return _ellipse_rules(seg.a, seg.b)
    if name == "square":
        return _square_rules(float(obj.segments[0].u1))
    raise NotImplementedError(f"no area rule for boundary {name!r}")
