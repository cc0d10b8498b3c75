"""Periodic billiard orbits as critical points of the length functional,
and the length spectrum built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import CapMismatch
from ..geometry import DomainSpec, as_boundary
from ._backend import kernels
from .dynamics import classify_mu, geom_array, mu_from_direction

GRAD_TOL = 1e-12
CLUSTER_TOL = 1e-9
DEGENERATE_TOL = 1e-6


class _Param:
    """Concatenated natural parameter t in [0, U) over the boundary segments."""

    def __init__(self, boundary):
        self.bd = boundary
        self.segs = boundary.segments
        widths = np.array([sg.u1 - sg.u0 for sg in self.segs])
        self.off = np.r_[0.0, np.cumsum(widths)]
        self.U = float(self.off[-1])
        self.u0s = np.array([sg.u0 for sg in self.segs])

    def split(self, t):
        t = np.mod(t, self.U)
        i = np.clip(np.searchsorted(self.off, t, side="right") - 1, 0, len(self.segs) - 1)
        return i, t - self.off[i] + self.u0s[i]

    def eval(self, t):
        i, u = self.split(np.atleast_1d(t))
        if len(self.segs) == 1 or np.all(i == i[0]):
            return self.segs[i[0]].eval3(u)
        P = np.empty((len(u), 2))
        D1 = np.empty_like(P)
        D2 = np.empty_like(P)
        for k in np.unique(i):
            m = i == k
            P[m], D1[m], D2[m] = self.segs[k].eval3(u[m])
        return P, D1, D2

    def s(self, t):
        i, u = self.split(np.atleast_1d(t))
        out = np.empty(len(u))
        for k in np.unique(i):
            m = i == k
            out[m] = self.bd.s_of(k, u[m])
        out = np.mod(out, self.bd.perimeter)
        out[self.bd.perimeter - out < 1e-12] = 0.0
        return out

    def t_of(self, i, u):
        return self.off[i] + u - self.segs[i].u0


def _mirror_t(domain, param, t):
    """Parameter of the mirror image (x -> -x) of the boundary point at t."""
    i, u = param.split(np.atleast_1d(t))
    kinds = [sg.kind for sg in param.segs]
    out = np.empty(len(u))
    for j, (k, uu) in enumerate(zip(i, u)):
        kind = kinds[k]
        if kind == "bottom":
            out[j] = param.t_of(k, -uu)
        elif kind == "arc":
            v = math.pi - uu
            if param.segs[k].u1 > math.pi + 1e-12:   # full ellipse
                v = v % (2 * math.pi)
            out[j] = param.t_of(k, v)
        else:
            other = len(param.segs) - k   # fillet 1 <-> 3
            out[j] = param.t_of(other, math.pi - uu)
    return out


_IDX = {}


def _cyclic(n):
    if n not in _IDX:
        i = np.arange(n)
        _IDX[n] = (i, np.roll(i, -1), np.roll(i, 1))
    return _IDX[n]


def _dot(A, B):
    return A[:, 0] * B[:, 0] + A[:, 1] * B[:, 1]


def length_and_derivs(param, t):
    """L, dL/dt, d2L/dt2 for the closed polygon through gamma(t_i)."""
    n = len(t)
    idx, nxt, prv = _cyclic(n)
    P, D1, D2 = param.eval(t)
    d = P[nxt] - P
    ell = np.hypot(d[:, 0], d[:, 1])
    u = d / ell[:, None]
    L = ell.sum()
    up = u[prv]                        # unit vector of the chord ending at i
    g = _dot(D1, up - u)
    Dn = D1[nxt]
    du = _dot(D1, u)
    dnu = _dot(Dn, u)
    aii = (_dot(D1, D1) - du * du) / ell - _dot(D2, u)
    bjj = (_dot(Dn, Dn) - dnu * dnu) / ell + _dot(D2[nxt], u)
    cij = -(_dot(D1, Dn) - du * dnu) / ell
    H = np.zeros((n, n))
    H[idx, idx] = aii + bjj[prv]
    H[idx, nxt] += cij
    H[nxt, idx] += cij
    return L, g, H, P, D1


@dataclass
class PeriodicOrbit:
    n: int
    s: tuple
    length: float
    residual: float
    crossing: str
    points: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False, default=None)
    degenerate: bool = False
    mu: float = float("nan")

    def to_row(self):
        return (self.length, self.n, self.crossing)


def _canonical_index(s):
    """Vertex order with the smallest s first, taking the lexicographically
    smaller of the two traversal directions."""
    n = len(s)
    k = int(np.argmin(s))
    best = None
    for step in (1, -1):
        idx = [(k + step * j) % n for j in range(n)]
        seq = [s[i] for i in idx]
        if best is None or seq < best[0]:
            best = (seq, idx)
    return best[1]


def _is_repetition(P, tol=1e-8):
    n = len(P)
    for p in range(1, n):
        if n % p == 0 and np.all(np.hypot(*(P - np.roll(P, -p, axis=0)).T) < tol):
            return True
    return False


def _chords_inside(domain, geom, P):
    n = len(P)
    for i in range(n):
        p, q = P[i], P[(i + 1) % n]
        d = q - p
        ell = math.hypot(d[0], d[1])
        t, kind, _ = kernels.first_hit(float(p[0]), float(p[1]), float(d[0] / ell), float(d[1] / ell), geom)
        if kind < 0 or abs(t - ell) > 1e-9 * max(1.0, ell):
            return False
    # midpoints strictly inside guards against chords running along the boundary
    mid = 0.5 * (P + np.roll(P, -1, axis=0))
    return bool(np.all(domain.contains(mid)))


def _classify(ell, P, upper_only=True):
    """Class from the caustic parameter of the chords.  For mushrooms only
    chords reaching the upper half plane count; a chord from a bump to the
    arc crosses the axis at the bump mouth, which is what mu encodes."""
    Q = np.roll(P, -1, axis=0)
    up = (P[:, 1] >= -1e-14) | (Q[:, 1] >= -1e-14) if upper_only else np.ones(len(P), bool)
    if not up.any():
        return "Separatrix", float("nan")
    mu = mu_from_direction(ell, P[up], Q[up] - P[up])
    cls = {classify_mu(m, ell.b) for m in mu}
    if len(cls) == 1:
        return cls.pop(), float(np.median(mu))
    return "Separatrix", float(np.median(mu))


def _newton(param, t, maxit=60):
    lam = 1e-3
    L, g, H, P, D1 = length_and_derivs(param, t)
    for it in range(maxit):
        sp = np.hypot(D1[:, 0], D1[:, 1])
        gs = g / sp
        if np.max(np.abs(gs)) <= GRAD_TOL:
            return t, L, gs, H, P, D1, True
        while True:
            A = H.T @ H + lam * np.eye(len(t))
            dt = -np.linalg.solve(A, H.T @ g)
            nrm = np.max(np.abs(dt))
            if nrm > 0.5:
                dt *= 0.5 / nrm
            tn = np.mod(t + dt, param.U)
            Ln, gn, Hn, Pn, D1n = length_and_derivs(param, tn)
            if np.linalg.norm(gn) < np.linalg.norm(g) or lam > 1e8:
                lam = max(lam / 10, 1e-12)
                break
            lam *= 10
        if lam > 1e8:
            break
        t, L, g, H, P, D1 = tn, Ln, gn, Hn, Pn, D1n
        if it == 25 and np.linalg.norm(g) > 1e-4:
            break
    sp = np.hypot(D1[:, 0], D1[:, 1])
    gs = g / sp
    return t, L, gs, H, P, D1, bool(np.max(np.abs(gs)) <= GRAD_TOL)


class _Searcher:
    def __init__(self, domain):
        self.domain = domain
        self.bd = as_boundary(domain)
        self.param = _Param(self.bd)
        self.is_mushroom = isinstance(domain, DomainSpec)
        self.geom = geom_array(domain) if self.is_mushroom else None
        self.corners = self.bd.corner_points()
        scale = domain.ellipse.a if self.is_mushroom else 1.0
        self.corner_r = 1e-6 * scale
        self.nonconvergent = 0
        self.rejected = 0

    def polish(self, t):
        """Newton from t; returns a validated PeriodicOrbit or None."""
        t, L, gs, H, P, D1 = _newton(self.param, np.asarray(t, float))[:6]
        if np.max(np.abs(gs)) > GRAD_TOL:
            self.nonconvergent += 1
            return None
        return self._validate(t, L, gs, H, P, D1)

    def _validate(self, t, L, gs, H, P, D1):
        n = len(t)
        Q = np.roll(P, -1, axis=0)
        if np.min(np.hypot(*(Q - P).T)) < 1e-8 or _is_repetition(P):
            self.rejected += 1
            return None
        for i in range(n):
            for j in range(i + 1, n):
                if math.hypot(*(P[i] - P[j])) < 1e-8:
                    self.rejected += 1
                    return None
        if len(self.corners):
            dc = np.hypot(P[:, None, 0] - self.corners[None, :, 0], P[:, None, 1] - self.corners[None, :, 1])
            if dc.min() < self.corner_r:
                self.rejected += 1
                return None
        if self.is_mushroom:
            if not _chords_inside(self.domain, self.geom, P):
                self.rejected += 1
                return None
            cls, mu = _classify(self.domain.ellipse, P)
        elif self.bd.name == "ellipse":
            from ..geometry import EllipseSpec
            seg = self.bd.segments[0]
            cls, mu = _classify(EllipseSpec(seg.a, seg.b), P, upper_only=False)
        else:
            cls, mu = "Separatrix", float("nan")
        sp = np.hypot(D1[:, 0], D1[:, 1])
        Hs = H / np.outer(sp, sp)
        ev = np.linalg.eigvalsh(Hs)
        degenerate = bool(np.min(np.abs(ev)) < DEGENERATE_TOL * max(1.0, np.max(np.abs(ev))))
        s = self.param.s(t)
        idx = _canonical_index(list(s))
        return PeriodicOrbit(n, tuple(float(s[i]) for i in idx), float(L), float(np.max(np.abs(gs))), cls,
                             P[idx], t[idx], degenerate, mu)


def _same_orbit(o1, o2, tol=1e-8):
    return o1.n == o2.n and abs(o1.length - o2.length) < 1e-9 and np.max(np.abs(o1.points - o2.points)) < tol


def _add(found, orb):
    for o in found:
        if _same_orbit(o, orb):
            return False
    found.append(orb)
    return True


def _starts(param, n, n_starts, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
    return rng.uniform(0.0, param.U, size=(n_starts, n))


def find_orbits(domain, n, L_max, n_starts=200, seed=0, extra_starts=()):
    """Multistart Newton search for n-bounce periodic orbits with L <= L_max.

    Each random start (drawn from SeedSequence([seed, n])) is paired with its
    mirror image so the start set is invariant under x -> -x."""
    if n < 2:
        raise ValueError("n must be >= 2")
    srch = _Searcher(domain)
    found = []
    if L_max <= 0 or n_starts <= 0:
        return found
    starts = _starts(srch.param, n, n_starts, seed)
    mir = np.array([_mirror_t(domain, srch.param, st) for st in starts])
    for st in list(starts) + list(mir) + list(extra_starts):
        orb = srch.polish(st)
        if orb is not None and orb.length <= L_max:
            _add(found, orb)
    found.sort(key=lambda o: (o.length, o.s))
    find_orbits.last_stats = {"nonconvergent": srch.nonconvergent, "rejected": srch.rejected}
    return found


@dataclass
class LengthSpectrum:
    entries: list
    tol: float
    caps: dict
    orbits: list = field(default_factory=list, repr=False)

    @property
    def lengths(self):
        return [e[0] for e in self.entries]

    def rows(self):
        """(length, multiplicity, n, class) rows; n and class of the first member."""
        for L, m, members in self._groups:
            yield (L, m, members[0].n, members[0].crossing)

    def to_dict(self):
        return {"tol": self.tol, "caps": self.caps,
                "entries": [{"length": L, "multiplicity": m} for L, m in self.entries]}


def _cluster(orbits, tol):
    """Merge degenerate family members, then cluster lengths."""
    units = []
    for o in sorted(orbits, key=lambda o: o.length):
        if o.degenerate:
            merged = False
            for u in units:
                r = u[0]
                if (r.degenerate and r.n == o.n and r.crossing == o.crossing
                        and abs(r.length - o.length) <= tol
                        and (abs(r.mu - o.mu) <= 1e-7 or (math.isnan(r.mu) and math.isnan(o.mu)))):
                    merged = True
                    break
            if merged:
                continue
        units.append((o,))
    groups = []
    for (o,) in units:
        if groups and o.length - groups[-1][2][-1].length <= tol:
            groups[-1][2].append(o)
            groups[-1][1] += 1
        else:
            groups.append([o.length, 1, [o]])
    for g in groups:
        g[0] = float(np.mean([o.length for o in g[2]]))
    return groups


def _make_spectrum(orbits, tol, caps):
    groups = _cluster(orbits, tol)
    sp = LengthSpectrum([(g[0], g[1]) for g in groups], tol, caps, orbits)
    sp._groups = groups
    return sp


def length_spectrum(domain, L_max, n_max, n_starts=200, seed=0, tol=CLUSTER_TOL):
    caps = {"L_max": L_max, "n_max": n_max, "n_starts": n_starts, "seed": seed}
    orbits = []
    if L_max > 0:
        for n in range(2, n_max + 1):
            orbits += find_orbits(domain, n, L_max, n_starts, seed)
    return _make_spectrum(orbits, tol, caps)


def pair_length_spectra(pair, L_max, n_max, n_starts=200, seed=0, tol=CLUSTER_TOL):
    """Length spectra of both members with cross-seeding.

    Every orbit found in one domain seeds a Newton polish in the other: at
    its own vertices (Outer class, which never sees the focal bumps) or at
    their mirror images (FocalCrossing and Separatrix).  The seeded polish must
    itself converge and pass validation, so an orbit without a partner stays
    unmatched and the comparison fails."""
    caps = {"L_max": L_max, "n_max": n_max, "n_starts": n_starts, "seed": seed}
    doms = [pair.omega1, pair.omega2]
    srch = [_Searcher(d) for d in doms]
    found = [[], []]
    for n in range(2, n_max + 1):
        for k in (0, 1):
            found[k] += find_orbits(doms[k], n, L_max, n_starts, seed)
    for _ in range(3):
        added = 0
        for k in (0, 1):
            other = 1 - k
            for o in list(found[k]):
                seeds = [np.array(o.t)]
                seeds.append(_mirror_t(doms[other], srch[other].param, o.t))
                for st in seeds:
                    p = srch[other].polish(st)
                    if p is not None and p.length <= L_max and abs(p.length - o.length) < 1e-6:
                        added += _add(found[other], p)
        if not added:
            break
    return (_make_spectrum(found[0], tol, caps), _make_spectrum(found[1], tol, caps))


@dataclass
class MatchReport:
    verdict: str
    max_gap: float
    matched: list
    unmatched_1: list
    unmatched_2: list
    match_tol: float

    def to_dict(self):
        return {"verdict": self.verdict, "max_gap": self.max_gap, "match_tol": self.match_tol,
                "n_matched": len(self.matched), "unmatched_1": self.unmatched_1,
                "unmatched_2": self.unmatched_2}


def compare_spectra(S1, S2, match_tol=1e-8):
    """Greedy nearest matching of sorted lengths, multiplicities expanded."""
    if S1.caps != S2.caps:
        raise CapMismatch(f"search caps differ: {S1.caps} vs {S2.caps}")
    a = [L for L, m in S1.entries for _ in range(m)]
    b = [L for L, m in S2.entries for _ in range(m)]
    used = [False] * len(b)
    matched, un1 = [], []
    j0 = 0
    for L in a:
        best, bj = math.inf, -1
        for j in range(j0, len(b)):
            if used[j]:
                continue
            gap = abs(b[j] - L)
            if gap < best:
                best, bj = gap, j
            if b[j] > L + match_tol:
                break
        if bj >= 0 and best <= match_tol:
            used[bj] = True
            matched.append((L, b[bj], best))
        else:
            un1.append(L)
    un2 = [b[j] for j in range(len(b)) if not used[j]]
    max_gap = max((g for _, _, g in matched), default=0.0)
    ok = not un1 and not un2
    return MatchReport("PASS" if ok else "FAIL", float(max_gap), matched, un1, un2, match_tol)


def mirror_gradient(orbit, domain):
    """Gradient norm (arc-length units) of domain's length functional at the
    mirror image of orbit's vertices."""
    param = _Param(as_boundary(domain))
    t = _mirror_t(domain, param, orbit.t)
    L, g, H, P, D1 = length_and_derivs(param, t)
    return float(np.max(np.abs(g / np.hypot(D1[:, 0], D1[:, 1]))))


def reflection_residual(orbit, domain):
    """Max |angle of incidence - angle of reflection| over vertices, from
    the boundary normals (independent of the length gradient)."""
    bd = as_boundary(domain)
    X, T, N, K = bd.evaluate(np.array(orbit.s))
    P = orbit.points
    prev = np.roll(P, 1, axis=0)
    nxt = np.roll(P, -1, axis=0)
    vin = (prev - P) / np.hypot(*(prev - P).T)[:, None]
    vout = (nxt - P) / np.hypot(*(nxt - P).T)[:, None]
    a_in = np.arctan2(np.einsum("ij,ij->i", vin, T), -np.einsum("ij,ij->i", vin, N))
    a_out = np.arctan2(np.einsum("ij,ij->i", vout, T), -np.einsum("ij,ij->i", vout, N))
    return float(np.max(np.abs(a_in + a_out)))
