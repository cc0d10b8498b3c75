"""Mushroom domains: half-ellipse base, mollifier bumps on the bottom segment,
the duality reflection x -> -x and the assembled pair.

Boundaries are stored as a list of smooth parametric segments traversed
counterclockwise.  Arc length is measured from the left end of the bottom
segment, which is the corner (-a, 0) unless the corners are rounded.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .errors import DegenerateEllipse, OverlapViolation, ZoneViolation

_TG, _WG = leggauss(16)

# default zone clearance as a fraction of a (the running example needs < 0.009a)
CLEARANCE_FRACTION = 0.005


# ---------------------------------------------------------------- bump shape

def bump_profile(t):
    """Standard mollifier exp(1 - 1/(1-t^2)) on |t|<1, zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out if out.ndim else float(out)


def bump_profile_derivs(t):
    """phi, phi', phi'' at t (arrays)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = np.zeros_like(t)
    d1 = np.zeros_like(t)
    d2 = np.zeros_like(t)
    m = np.abs(t) < 1
    tm = t[m]
    s = 1.0 - tm * tm
    e = np.exp(1.0 - 1.0 / s)
    q = -2.0 * tm / s**2
    p[m] = e
    d1[m] = e * q
    d2[m] = e * (q * q - 2.0 / s**2 - 8.0 * tm * tm / s**3)
    return p, d1, d2


# ---------------------------------------------------------------- specs

@dataclass(frozen=True)
class EllipseSpec:
    a: float
    b: float

    def __post_init__(self):
        if not (self.b > 0 and self.a > self.b):
            raise DegenerateEllipse(f"need a > b > 0, got a={self.a}, b={self.b}")

    @property
    def c(self):
        return math.sqrt(self.a * self.a - self.b * self.b)

    @property
    def foci(self):
        return (-self.c, 0.0), (self.c, 0.0)

    @property
    def center(self):
        return (0.0, 0.0)


def build_ellipse(a, b):
    return EllipseSpec(float(a), float(b))


@dataclass(frozen=True, order=True)
class BumpSpec:
    center: float
    half_width: float
    depth: float

    def __post_init__(self):
        if not (self.half_width > 0 and self.depth > 0):
            raise ValueError("bump half_width and depth must be positive")

    @property
    def support(self):
        return (self.center - self.half_width, self.center + self.half_width)

    def mirrored(self):
        return BumpSpec(-self.center, self.half_width, self.depth)

    def scaled(self, factor):
        return BumpSpec(self.center, self.half_width, self.depth * factor)

    def __call__(self, x):
        """Contribution -h*phi((x-center)/w) to the bottom profile."""
        return -self.depth * bump_profile((np.asarray(x, float) - self.center) / self.half_width)


def mirror_bumps(bumps):
    return tuple(sorted(bm.mirrored() for bm in bumps))


def zone_of(bump, ellipse, clearance=0.0):
    """Name of the admissible zone holding the bump support, or None."""
    a, c = ellipse.a, ellipse.c
    lo, hi = bump.support
    zones = {"left-outer": (-a, -c), "focal": (-c, c), "right-outer": (c, a)}
    for name, (z0, z1) in zones.items():
        if lo >= z0 + clearance and hi <= z1 - clearance:
            return name
    return None


def profile(bumps, x):
    """g, g', g'' of the bottom graph at x."""
    x = np.atleast_1d(np.asarray(x, float))
    g = np.zeros_like(x)
    g1 = np.zeros_like(x)
    g2 = np.zeros_like(x)
    for bm in bumps:
        w = bm.half_width
        m = np.abs(x - bm.center) < w
        if not m.any():
            continue
        p, d1, d2 = bump_profile_derivs((x[m] - bm.center) / w)
        g[m] -= bm.depth * p
        g1[m] -= bm.depth / w * d1
        g2[m] -= bm.depth / (w * w) * d2
    return g, g1, g2


# ---------------------------------------------------------------- segments

class Segment:
    """Smooth parametric piece u in [u0, u1] -> plane."""

    kind = "segment"
    breaks = ()

    def point(self, u):
        raise NotImplementedError

    def d1(self, u):
        raise NotImplementedError

    def d2(self, u):
        raise NotImplementedError

    def eval3(self, u):
        return self.point(u), self.d1(u), self.d2(u)


class LineSeg(Segment):
    kind = "line"

    def __init__(self, p0, p1):
        self.p0 = np.asarray(p0, float)
        self.p1 = np.asarray(p1, float)
        self.u0, self.u1 = 0.0, float(np.hypot(*(self.p1 - self.p0)))
        self.dir = (self.p1 - self.p0) / self.u1

    def point(self, u):
        u = np.atleast_1d(u)
        return self.p0[None, :] + u[:, None] * self.dir[None, :]

    def d1(self, u):
        return np.tile(self.dir, (np.size(u), 1))

    def d2(self, u):
        return np.zeros((np.size(u), 2))


class BottomSeg(Segment):
    """Graph y = g(x) for x in [x0, x1]; the parameter is x."""

    kind = "bottom"

    def __init__(self, x0, x1, bumps):
        self.u0, self.u1 = float(x0), float(x1)
        self.bumps = tuple(bumps)
        self.breaks = tuple(sorted(e for bm in self.bumps for e in bm.support))

    def point(self, u):
        u = np.atleast_1d(np.asarray(u, float))
        return np.c_[u, profile(self.bumps, u)[0]]

    def d1(self, u):
        u = np.atleast_1d(np.asarray(u, float))
        return np.c_[np.ones_like(u), profile(self.bumps, u)[1]]

    def d2(self, u):
        u = np.atleast_1d(np.asarray(u, float))
        return np.c_[np.zeros_like(u), profile(self.bumps, u)[2]]

    def eval3(self, u):
        u = np.atleast_1d(np.asarray(u, float))
        g, g1, g2 = profile(self.bumps, u)
        one = np.ones_like(u)
        return np.stack([u, g], 1), np.stack([one, g1], 1), np.stack([0 * u, g2], 1)


class EllipseArcSeg(Segment):
    kind = "arc"

    def __init__(self, a, b, th0, th1):
        self.a, self.b = a, b
        self.u0, self.u1 = float(th0), float(th1)

    def point(self, u):
        u = np.atleast_1d(u)
        return np.c_[self.a * np.cos(u), self.b * np.sin(u)]

    def d1(self, u):
        u = np.atleast_1d(u)
        return np.c_[-self.a * np.sin(u), self.b * np.cos(u)]

    def d2(self, u):
        u = np.atleast_1d(u)
        return np.c_[-self.a * np.cos(u), -self.b * np.sin(u)]

    def eval3(self, u):
        u = np.atleast_1d(u)
        c, s = np.cos(u), np.sin(u)
        P = np.empty((len(u), 2))
        D1 = np.empty_like(P)
        P[:, 0] = self.a * c
        P[:, 1] = self.b * s
        D1[:, 0] = -self.a * s
        D1[:, 1] = self.b * c
        return P, D1, -P


class CircleArcSeg(Segment):
    kind = "circle"

    def __init__(self, center, r, al0, al1):
        self.center = np.asarray(center, float)
        self.r = float(r)
        self.u0, self.u1 = float(al0), float(al1)

    def point(self, u):
        u = np.atleast_1d(u)
        return self.center[None, :] + self.r * np.c_[np.cos(u), np.sin(u)]

    def d1(self, u):
        u = np.atleast_1d(u)
        return self.r * np.c_[-np.sin(u), np.cos(u)]

    def d2(self, u):
        u = np.atleast_1d(u)
        return -self.r * np.c_[np.cos(u), np.sin(u)]


# ---------------------------------------------------------------- boundary

@dataclass(frozen=True)
class BoundaryPoint:
    s: float
    position: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    curvature: float


class Boundary:
    """Closed counterclockwise curve made of smooth segments.

    corners[i] is True when the junction at the end of segment i is a
    tangent discontinuity.
    """

    def __init__(self, segments, corners, contains, name="", convex=False):
        self.segments = list(segments)
        self.corners = list(corners)
        self._contains = contains
        self.name = name
        self.convex = convex
        self._build_tables()

    def _build_tables(self):
        self._panels = []
        lens = []
        for seg in self.segments:
            br = [seg.u0, *[u for u in seg.breaks if seg.u0 < u < seg.u1], seg.u1]
            edges = [seg.u0]
            nmin = 64
            for lo, hi in zip(br[:-1], br[1:]):
                n = max(1 if lo == seg.u0 and hi == seg.u1 else 32, int(math.ceil(nmin * (hi - lo) / (seg.u1 - seg.u0))))
                edges += list(lo + (hi - lo) * np.arange(1, n + 1) / n)
            edges = np.array(edges)
            cum = [0.0]
            for lo, hi in zip(edges[:-1], edges[1:]):
                cum.append(cum[-1] + self._gl_len(seg, lo, np.array([hi]))[0])
            self._panels.append((edges, np.array(cum)))
            lens.append(cum[-1])
        self.lengths = np.array(lens)
        self.s_start = np.r_[0.0, np.cumsum(self.lengths)[:-1]]
        self.perimeter = float(np.sum(self.lengths))

    @staticmethod
    def _gl_len(seg, lo, hi):
        hi = np.asarray(hi, float)
        half = 0.5 * (hi - lo)
        u = half[:, None] * _TG[None, :] + (0.5 * (hi + lo))[:, None]
        d = seg.d1(u.ravel())
        sp = np.hypot(d[:, 0], d[:, 1]).reshape(u.shape)
        return half * (sp @ _WG)

    def s_of(self, i, u):
        """Arc length parameter of natural parameter u on segment i."""
        seg = self.segments[i]
        edges, cum = self._panels[i]
        u = np.atleast_1d(np.asarray(u, float))
        p = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(edges) - 2)
        out = np.empty_like(u)
        for pp in np.unique(p):
            m = p == pp
            out[m] = cum[pp] + self._gl_len(seg, edges[pp], u[m])
        return self.s_start[i] + out

    def locate(self, s):
        """Segment index and natural parameter for arc length s (vectorized)."""
        s = np.mod(np.atleast_1d(np.asarray(s, float)), self.perimeter)
        idx = np.clip(np.searchsorted(self.s_start, s, side="right") - 1, 0, len(self.segments) - 1)
        u = np.empty_like(s)
        for i in np.unique(idx):
            m = idx == i
            seg = self.segments[i]
            edges, cum = self._panels[i]
            sl = s[m] - self.s_start[i]
            p = np.clip(np.searchsorted(cum, sl, side="right") - 1, 0, len(edges) - 2)
            ui = edges[p] + (edges[p + 1] - edges[p]) * (sl - cum[p]) / (cum[p + 1] - cum[p])
            for _ in range(30):
                d = seg.d1(ui)
                sp = np.hypot(d[:, 0], d[:, 1])
                du = (self.s_of(i, ui) - self.s_start[i] - sl) / sp
                ui = np.clip(ui - du, seg.u0, seg.u1)
                if np.max(np.abs(du)) < 1e-15 * max(1.0, abs(seg.u1)):
                    break
            u[m] = ui
        return idx, u

    def frame(self, i, u):
        """Position, unit tangent, outward unit normal, curvature at (i, u)."""
        seg = self.segments[i]
        x = seg.point(u)
        d = seg.d1(u)
        dd = seg.d2(u)
        sp = np.hypot(d[:, 0], d[:, 1])
        t = d / sp[:, None]
        n = np.c_[t[:, 1], -t[:, 0]]
        kap = (d[:, 0] * dd[:, 1] - d[:, 1] * dd[:, 0]) / sp**3
        return x, t, n, kap

    def evaluate(self, s):
        idx, u = self.locate(s)
        s = np.atleast_1d(s)
        X = np.empty((len(u), 2))
        T = np.empty_like(X)
        N = np.empty_like(X)
        K = np.empty(len(u))
        for i in np.unique(idx):
            m = idx == i
            X[m], T[m], N[m], K[m] = self.frame(i, u[m])
        return X, T, N, K

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return self._contains(pts)

    def corner_points(self):
        out = []
        for i, flag in enumerate(self.corners):
            if flag:
                seg = self.segments[i]
                out.append(seg.point(seg.u1)[0])
        return np.array(out).reshape(-1, 2)

    def polyline(self, n):
        s = np.arange(n) * self.perimeter / n
        return s, self.evaluate(s)[0]

    @cached_property
    def area(self):
        tot = 0.0
        for i, seg in enumerate(self.segments):
            edges, _ = self._panels[i]
            for lo, hi in zip(edges[:-1], edges[1:]):
                u = 0.5 * (hi - lo) * _TG + 0.5 * (hi + lo)
                x = seg.point(u)
                d = seg.d1(u)
                tot += 0.5 * (hi - lo) * np.dot(_WG, 0.5 * (x[:, 0] * d[:, 1] - x[:, 1] * d[:, 0]))
        return tot

    @cached_property
    def bbox(self):
        _, X = self.polyline(4096)
        return X.min(axis=0), X.max(axis=0)

    def winding(self, p, n=10000):
        _, X = self.polyline(n)
        v = X - np.asarray(p, float)[None, :]
        ang = np.arctan2(v[:, 1], v[:, 0])
        dang = np.diff(np.r_[ang, ang[0]])
        dang = (dang + np.pi) % (2 * np.pi) - np.pi
        return int(round(np.sum(dang) / (2 * np.pi)))

    def sample_interior(self, n, rng):
        lo, hi = self.bbox
        out = []
        while sum(len(o) for o in out) < n:
            P = lo + (hi - lo) * rng.random((2 * n, 2))
            out.append(P[self.contains(P)])
        return np.vstack(out)[:n]


# ---------------------------------------------------------------- domains

def _fillet(ellipse, r):
    """Right-corner fillet of radius r: returns (xc, theta_T, alpha_T, yT)."""
    a, b = ellipse.a, ellipse.b

    def cy(th):
        nn = math.hypot(b * math.cos(th), a * math.sin(th))
        return b * math.sin(th) - r * a * math.sin(th) / nn - r

    th = brentq(cy, 1e-14, 0.5 * math.pi, xtol=1e-15)
    nn = math.hypot(b * math.cos(th), a * math.sin(th))
    px, py = a * math.cos(th), b * math.sin(th)
    xc = px - r * b * math.cos(th) / nn
    return xc, th, math.atan2(py - r, px - xc), py


@dataclass(frozen=True)
class DomainSpec:
    ellipse: EllipseSpec
    outer_bumps: tuple = ()
    focal_bumps: tuple = ()
    corner_rounding: float = 0.0
    clearance: float = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "outer_bumps", tuple(sorted(self.outer_bumps)))
        object.__setattr__(self, "focal_bumps", tuple(sorted(self.focal_bumps)))
        if self.clearance is None:
            object.__setattr__(self, "clearance", CLEARANCE_FRACTION * self.ellipse.a)

    @property
    def bumps(self):
        return tuple(sorted(self.outer_bumps + self.focal_bumps))

    def g(self, x):
        return profile(self.bumps, x)[0]

    @cached_property
    def fillet(self):
        if self.corner_rounding <= 0:
            return None
        return _fillet(self.ellipse, self.corner_rounding)

    @cached_property
    def boundary(self):
        a, b = self.ellipse.a, self.ellipse.b
        r = self.corner_rounding
        bumps = self.bumps
        if r <= 0:
            segs = [BottomSeg(-a, a, bumps), EllipseArcSeg(a, b, 0.0, math.pi)]
            corners = [True, True]
        else:
            xc, th, al, _ = self.fillet
            segs = [BottomSeg(-xc, xc, bumps),
                    CircleArcSeg((xc, r), r, -0.5 * math.pi, al),
                    EllipseArcSeg(a, b, th, math.pi - th),
                    CircleArcSeg((-xc, r), r, math.pi - al, 1.5 * math.pi)]
            corners = [False] * 4
        return Boundary(segs, corners, self._contains, name="mushroom")

    @property
    def perimeter(self):
        return self.boundary.perimeter

    def _contains(self, P):
        a, b = self.ellipse.a, self.ellipse.b
        x, y = P[:, 0], P[:, 1]
        ok = (np.abs(x) < a) & (x * x / (a * a) + y * y / (b * b) < 1.0)
        ok &= y > profile(self.bumps, x)[0]
        if self.corner_rounding > 0:
            xc, _, _, yT = self.fillet
            r = self.corner_rounding
            cut = (np.abs(x) > xc) & (y < yT) & ((np.abs(x) - xc) ** 2 + (y - r) ** 2 >= r * r)
            ok &= ~cut
        return ok

    def contains(self, pts):
        return self.boundary.contains(pts)

    def reflect(self):
        return reflect(self)

    def to_dict(self):
        bd = lambda bs: [dict(center=bm.center, half_width=bm.half_width, depth=bm.depth) for bm in bs]
        return {"ellipse": {"a": self.ellipse.a, "b": self.ellipse.b},
                "corner_rounding": self.corner_rounding,
                "outer_bumps": bd(self.outer_bumps),
                "focal_bumps": bd(self.focal_bumps)}


def _check_bumps(ellipse, outer, focal, rounding, clearance):
    for bm in outer:
        if zone_of(bm, ellipse, clearance) not in ("left-outer", "right-outer"):
            raise ZoneViolation(f"outer bump {bm} is not inside an outer zone with clearance {clearance}")
    for bm in focal:
        if zone_of(bm, ellipse, clearance) != "focal":
            raise ZoneViolation(f"focal bump {bm} is not inside the focal zone with clearance {clearance}")
    allb = sorted(list(outer) + list(focal))
    for b0, b1 in zip(allb[:-1], allb[1:]):
        if b0.support[1] > b1.support[0]:
            raise OverlapViolation(f"bumps {b0} and {b1} overlap")
    if rounding > 0:
        if rounding >= ellipse.b / 2:
            raise ValueError("corner rounding must be below b/2")
        xc = _fillet(ellipse, rounding)[0]
        for bm in allb:
            if abs(bm.center) + bm.half_width > xc:
                raise OverlapViolation(f"bump {bm} meets the corner rounding (|x| > {xc:.6g})")


def build_domain(ellipse, outer=(), focal=(), rounding=0.0, clearance=None):
    if clearance is None:
        clearance = CLEARANCE_FRACTION * ellipse.a
    outer, focal = tuple(outer), tuple(focal)
    _check_bumps(ellipse, outer, focal, rounding, clearance)
    return DomainSpec(ellipse, outer, focal, float(rounding), clearance)


def reflect(domain):
    return DomainSpec(domain.ellipse, mirror_bumps(domain.outer_bumps), mirror_bumps(domain.focal_bumps),
                      domain.corner_rounding, domain.clearance)


def domain_from_dict(d, validate=True):
    ell = build_ellipse(d["ellipse"]["a"], d["ellipse"]["b"])
    mk = lambda lst: tuple(BumpSpec(float(e["center"]), float(e["half_width"]), float(e["depth"])) for e in lst or [])
    outer, focal = mk(d.get("outer_bumps")), mk(d.get("focal_bumps"))
    rounding = float(d.get("corner_rounding", 0.0))
    if validate:
        return build_domain(ell, outer, focal, rounding)
    return DomainSpec(ell, outer, focal, rounding)


@dataclass(frozen=True)
class MushroomPair:
    omega1: DomainSpec
    omega2: DomainSpec
    b_dual: bool
    m_self_dual: bool

    @property
    def status(self):
        if self.m_self_dual:
            return "identical"
        if self.b_dual:
            return "isometric"
        return "ok"

    @property
    def ellipse(self):
        return self.omega1.ellipse


def make_pair(ellipse, B1, B2, M, rounding=0.0):
    """Pair (omega1 with M, omega2 with the mirror of M) sharing the outer bumps."""
    Ms = tuple(M) if isinstance(M, (list, tuple)) else (M,)
    outer = (B1, B2)
    om1 = build_domain(ellipse, outer, Ms, rounding)
    om2 = build_domain(ellipse, outer, mirror_bumps(Ms), rounding)
    b_dual = mirror_bumps(om1.outer_bumps) == om1.outer_bumps
    m_self_dual = mirror_bumps(om1.focal_bumps) == om1.focal_bumps
    pair = MushroomPair(om1, om2, b_dual, m_self_dual)
    if pair.status != "ok":
        warnings.warn(f"mushroom pair is {pair.status}", stacklevel=2)
    return pair


def boundary_eval(domain, s):
    """BoundaryPoint at arc length s (from the left end of the bottom)."""
    bd = domain.boundary if isinstance(domain, DomainSpec) else domain
    X, T, N, K = bd.evaluate([s])
    return BoundaryPoint(float(s), X[0], N[0], T[0], float(K[0]))


def running_example(a=2.0, b=1.0):
    """The default pair B1(-1.85,.06,.05), B2(1.80,.05,.07), M(-0.8,.3,.25)."""
    ell = build_ellipse(a, b)
    return make_pair(ell, BumpSpec(-1.85, 0.06, 0.05), BumpSpec(1.80, 0.05, 0.07), BumpSpec(-0.8, 0.3, 0.25))


# ---------------------------------------------------------------- validation shapes

def disk(R=1.0):
    seg = CircleArcSeg((0.0, 0.0), R, 0.0, 2 * math.pi)
    return Boundary([seg], [False], lambda P: np.hypot(P[:, 0], P[:, 1]) < R, name="disk", convex=True)


def half_disk(R=1.0):
    segs = [LineSeg((-R, 0.0), (R, 0.0)), CircleArcSeg((0.0, 0.0), R, 0.0, math.pi)]
    inside = lambda P: (np.hypot(P[:, 0], P[:, 1]) < R) & (P[:, 1] > 0)
    return Boundary(segs, [True, True], inside, name="half-disk", convex=True)


def square(side=math.pi):
    L = side
    pts = [(0.0, 0.0), (L, 0.0), (L, L), (0.0, L)]
    segs = [LineSeg(pts[i], pts[(i + 1) % 4]) for i in range(4)]
    inside = lambda P: (P[:, 0] > 0) & (P[:, 0] < L) & (P[:, 1] > 0) & (P[:, 1] < L)
    return Boundary(segs, [True] * 4, inside, name="square", convex=True)


def full_ellipse(a=2.0, b=1.0):
    seg = EllipseArcSeg(a, b, 0.0, 2 * math.pi)
    inside = lambda P: (P[:, 0] / a) ** 2 + (P[:, 1] / b) ** 2 < 1
    return Boundary([seg], [False], inside, name="ellipse", convex=True)


def as_boundary(obj):
    return obj.boundary if isinstance(obj, DomainSpec) else obj
