"""Dirichlet eigenpairs: indicator sweep, refinement, normalization, traces."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import legval
from scipy.special import j0, y0

from ..billiards.dynamics import n_workers
from ..errors import MissedEigenvalueWarning, OutsideDomain
from ..geometry import DomainSpec, as_boundary
from .area import area_rules
from .bie import Discretization, refine, small_eig, smallest_singular


from .quadrature import NQ, TG, VL_INV, WG, interp_matrix, log_weights

SCAN_LEVEL = -1
MULT_TOL = 1e-7
NEAR = 0.5


def _disc(domain, k, level):
    bd = as_boundary(domain)
    return Discretization(bd, k_max=k, level=level)


def _check_k(k):
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")


def bie_indicator(domain, k, disc=None):
    """Smallest singular value of the symmetrized Nystrom matrix."""
    _check_k(k)
    disc = disc or _disc(domain, k, 0)
    s, _ = smallest_singular(disc.matrix(k), p=1, iters=3)
    return float(s[0])


# ---------------------------------------------------------------- real layer

class Layer:
    """psi = S[sigma] for a real density sigma on a discretization."""

    def __init__(self, disc, sigma, k):
        self.disc = disc
        self.sigma = np.asarray(sigma, float)
        self.k = float(k)

    def _panel_nodes(self, p):
        return slice(p * NQ, (p + 1) * NQ)

    def __call__(self, targets, on=None):
        """on: optional (panel, t) arrays marking targets lying on the boundary
        (panel = -1 for interior targets)."""
        d, k = self.disc, self.k
        T = np.atleast_2d(np.asarray(targets, float))
        nt = len(T)
        out = np.zeros(nt)
        tp = np.full(nt, -1) if on is None else np.asarray(on[0])
        tt = None if on is None else np.asarray(on[1], float)
        nb_of = [[q for q, _ in d._neighbours(p)] for p in range(d.npan)]
        for p in range(d.npan):
            js = self._panel_nodes(p)
            Y = d.X[js]
            spec = np.nonzero((tp == p) | np.isin(tp, nb_of[p]))[0] if on is not None else np.array([], int)
            for ti in spec:
                if tp[ti] == p:
                    t0 = tt[ti]
                else:
                    q = tp[ti]
                    t0 = d.local_t(p, q, T[ti:ti + 1], np.array([d._u_of(q, tt[ti])]))[0]
                out[ti] += self._product(p, T[ti], t0)
            rest = np.ones(nt, bool)
            rest[spec] = False
            idx = np.nonzero(rest)[0]
            if not len(idx):
                continue
            R = np.hypot(T[idx, None, 0] - Y[None, :, 0], T[idx, None, 1] - Y[None, :, 1])
            near = R.min(axis=1) < NEAR * d.plen[p]
            far = ~near
            if far.any():
                out[idx[far]] += (-0.25 * y0(k * R[far])) @ (self.sigma[js] * d.w[js])
            if near.any():
                out[idx[near]] += self._adaptive(p, T[idx[near]])
        return out

    def _product(self, p, x, t0):
        d, k = self.disc, self.k
        h = d.half[p]
        js = self._panel_nodes(p)
        Y = d.X[js]
        sp = d.sp[js]
        r = np.hypot(x[0] - Y[:, 0], x[1] - Y[:, 1])
        same = r < 1e-14
        rs = np.where(same, 1.0, r)
        L = np.where(same, -1 / (2 * np.pi), -j0(k * rs) / (2 * np.pi))
        lim = -(math.log(k / 2) + np.euler_gamma) / (2 * np.pi)
        rem = np.where(same, lim, -0.25 * y0(k * rs) - L * np.log(rs))
        dt = np.abs(TG - t0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(same, np.log(sp), np.log(rs / (h * dt)))
        f = self.sigma[js] * sp * h
        return float(np.dot(WG * f, rem) + np.dot(WG * f * L, math.log(h) + ratio)
                     + np.dot(log_weights(t0) * f, L))

    def _adaptive(self, p, T, chunk=512):
        """Near-field: project each target onto the panel, then integrate on
        subpanels graded dyadically toward the projection."""
        d, k = self.disc, self.k
        i, lo, hi = d.panels[p]
        seg = d.boundary.segments[i]
        h = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        coef = VL_INV @ self.sigma[self._panel_nodes(p)]
        Y = d.X[self._panel_nodes(p)]
        R0 = np.hypot(T[:, None, 0] - Y[None, :, 0], T[:, None, 1] - Y[None, :, 1])
        t = TG[np.argmin(R0, axis=1)]
        for _ in range(8):
            x, d1, d2 = seg.eval3(mid + h * t)
            r = x - T
            g = np.sum(r * d1, axis=1) * h
            H = (np.sum(d1 * d1, axis=1) + np.sum(r * d2, axis=1)) * h * h
            H = np.where(H > 0, H, np.sum(d1 * d1, axis=1) * h * h)
            t = np.clip(t - g / H, -1.0, 1.0)
        x, d1, _ = seg.eval3(mid + h * t)
        dist = np.hypot(*(x - T).T)
        sp = np.hypot(d1[:, 0], d1[:, 1])
        dt = np.maximum(dist / (h * sp), 1e-16)
        out = np.zeros(len(T))
        order = np.argsort(dt)
        for c0 in range(0, len(T), chunk):
            idx = order[c0:c0 + chunk]
            J = int(min(52, max(1, math.ceil(math.log2(1.0 / dt[idx[0]])) + 1)))
            off = 2.0 ** -np.arange(J + 1)
            tc = t[idx][:, None]
            off = np.maximum(off[None, :], 0.5 * dt[idx][:, None])
            br = np.hstack([np.full((len(idx), 1), -1.0), np.clip(tc - off, -1, 1), tc,
                            np.clip(tc + off, -1, 1), np.ones((len(idx), 1))])
            br.sort(axis=1)
            ta, tb = br[:, :-1], br[:, 1:]
            half = 0.5 * (tb - ta)
            tt = (0.5 * (tb + ta))[..., None] + half[..., None] * TG
            flat = tt.reshape(-1)
            xx, dd, _ = seg.eval3(mid + h * flat)
            wl = (half[..., None] * WG).reshape(-1) * h * np.hypot(dd[:, 0], dd[:, 1])
            sv = legval(flat, coef)
            P = np.repeat(T[idx], tt.shape[1] * NQ, axis=0)
            rr = np.maximum(np.hypot(P[:, 0] - xx[:, 0], P[:, 1] - xx[:, 1]), 1e-300)
            vals = -0.25 * y0(k * rr) * sv * wl
            out[idx] = vals.reshape(len(idx), -1).sum(axis=1)
        return out


def _real_basis(V, w):
    """Real orthonormal (in the w-weighted sense) basis of the span of the
    complex null vectors V (columns are densities)."""
    m = V.shape[1]
    sw = np.sqrt(w)[:, None]
    R = np.hstack([V.real, V.imag]) * sw
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    return U[:, :m] / sw


def check_points(disc, per_node=4):
    """Boundary points strictly inside panels (away from panel ends)."""
    m = per_node * NQ
    t = -1 + (2 * np.arange(m) + 1) / m
    P, T, X = [], [], []
    for p, (i, lo, hi) in enumerate(disc.panels):
        u = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        X.append(disc.boundary.segments[i].point(u))
        P.append(np.full(m, p))
        T.append(t)
    return np.vstack(X), np.concatenate(P), np.concatenate(T)


# ---------------------------------------------------------------- data types

@dataclass
class BoundaryTrace:
    s: np.ndarray
    position: np.ndarray
    dpsi_dnu: np.ndarray
    weights: np.ndarray
    normal: np.ndarray
    lam: float
    disc: Discretization = field(repr=False, default=None)
    _nodal: np.ndarray = field(repr=False, default=None)
    domain: object = field(repr=False, default=None)

    def rows(self):
        for j in range(len(self.s)):
            yield (self.s[j], self.position[j, 0], self.position[j, 1], self.dpsi_dnu[j], self.weights[j])

    def at(self, seg_index, u):
        """Interpolated dpsi/dnu at natural parameters u of a segment."""
        return self.disc.interpolate(self._nodal, seg_index, u)

    @property
    def rellich(self):
        xn = np.sum(self.position * self.normal, axis=1)
        return float(np.sum(self.weights * self.dpsi_dnu ** 2 * xn))


@dataclass
class EigenPair:
    lam: float
    k: float
    domain: object = field(repr=False)
    disc: Discretization = field(repr=False)
    sigma: np.ndarray = field(repr=False)       # raw real density, one column per mode
    indicator: float = 0.0
    multiplicity: int = 1
    step: float = 0.0
    level_shift: float = float("nan")
    method: str = "bie"
    index: int = 0

    @property
    def boundary(self):
        return as_boundary(self.domain)

    @cached_property
    def _layers(self):
        return [Layer(self.disc, self.sigma[:, j], self.k) for j in range(self.sigma.shape[1])]

    @cached_property
    def quadratures(self):
        """int psi^2 dA by each boundary-fitted rule, for the raw density."""
        out = {}
        for name, (P, W) in area_rules(self.domain).items():
            out[name] = float(np.sum(W * self._layers[0](P) ** 2))
        return out

    @cached_property
    def scale(self):
        """Factor turning the raw layer into the normalized, ground-state
        positive eigenfunction."""
        nrm = self.quadratures["vertical"]
        sgn = -1.0 if np.sum(self.disc.w * self.sigma[:, 0]) > 0 else 1.0
        return sgn / math.sqrt(nrm)

    @property
    def normalization_defect(self):
        q = self.quadratures
        return abs(q["horizontal"] / q["vertical"] - 1.0)

    @cached_property
    def boundary_residual(self):
        """max |psi| over 4 N check points, relative to the interior RMS."""
        X, P, T = check_points(self.disc)
        vals = self._layers[0](X, on=(P, T)) * self.scale
        rms = 1.0 / math.sqrt(self.boundary.area)
        return float(np.max(np.abs(vals)) / rms)

    @property
    def moler_payne(self):
        """Relative eigenvalue bound sqrt(2|Omega|) max|psi|_bdry / ||psi||."""
        return math.sqrt(2) * self.boundary_residual

    @property
    def error(self):
        parts = [self.lam * self.moler_payne, 2 * self.k * self.step]
        if np.isfinite(self.level_shift):
            parts.append(self.level_shift)
        return float(max(parts))

    def psi(self, points, mode=0):
        return self._layers[mode](np.atleast_2d(points)) * self.scale

    def to_row(self):
        return (self.index, self.lam, self.k, self.error, self.method)


# ---------------------------------------------------------------- operations

def indicator(domain, k, method="bie", **kw):
    _check_k(k)
    if method == "mfs":
        from .mfs import mfs_indicator
        return mfs_indicator(domain, k, **kw)
    return bie_indicator(domain, k, **kw)


def sweep(domain, k_min, k_max, n_scan, level=SCAN_LEVEL):
    """Indicator on n_scan uniform k values (parallel, merged in k order)."""
    ks = np.linspace(k_min, k_max, n_scan)
    disc = _disc(domain, k_max, level)
    with ThreadPoolExecutor(n_workers()) as ex:
        vals = list(ex.map(lambda k: bie_indicator(domain, k, disc), ks))
    return ks, np.array(vals)


def _minima(ks, vals, thresh):
    out = []
    n = len(ks)
    for i in range(n):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < n - 1 else np.inf
        if vals[i] <= left and vals[i] < right and vals[i] < thresh:
            out.append(i)
    return out


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


def solve_eig(domain, k_lo, k_hi, k_guess, level=0, disc=None):
    """Refine one eigenvalue inside [k_lo, k_hi] on a given discretization."""
    disc = disc or _disc(domain, k_hi, level)
    dk = max(1e-3, 0.05 * (k_hi - k_lo))
    k, A, lu, step = refine(disc, k_guess, min(k_guess + dk, k_hi))
    if not (k_lo <= k <= k_hi):
        # secant left the bracket: fall back to golden section on the indicator
        k, step = _golden(lambda kk: bie_indicator(domain, kk, disc), k_lo, k_hi)
        A = disc.matrix(k)
        lu = None
    s, V = smallest_singular(A, lu, p=4)
    return k, s, V, step, disc


def _build_pair(domain, k, s, V, step, disc, index, level_shift=float("nan")):
    mult = max(1, int(np.sum(s < MULT_TOL)))
    sq = np.sqrt(disc.w)
    dens = V[:, :mult] / sq[:, None]
    dens = _real_basis(dens, disc.w)
    return EigenPair(k * k, k, domain, disc, dens, float(s[0]), mult, step, level_shift, "bie", index)


def find_eigs(domain, k_min, k_max, n_scan=100, method="bie", check_level=True, threshold=0.3, **kw):
    """Scan, bracket, refine.  Returns one EigenPair per distinct eigenvalue
    (multiplicity recorded), in increasing order."""
    if not 0 < k_min < k_max:
        raise ValueError("need 0 < k_min < k_max")
    if method == "mfs":
        from .mfs import find_eigs_mfs
        return find_eigs_mfs(domain, k_min, k_max, n_scan, threshold, **kw)
    ks, vals = sweep(domain, k_min, k_max, n_scan)
    dk = ks[1] - ks[0]
    thresh = threshold * np.median(vals)
    mins = _minima(ks, vals, thresh)
    for a, b in zip(mins[:-1], mins[1:]):
        if b - a < 3:
            warnings.warn(f"indicator minima at k={ks[a]:.6g} and {ks[b]:.6g} are closer than "
                          "3 scan steps; re-run with larger n_scan", MissedEigenvalueWarning)
    disc = _disc(domain, k_max, 0)
    fine = _disc(domain, k_max, 1) if check_level else None
    out = []
    for i in mins:
        lo, hi = max(k_min, ks[i] - dk), min(k_max, ks[i] + dk)
        k, s, V, step, _ = solve_eig(domain, lo, hi, ks[i], disc=disc)
        if s[0] > 1e-6 or not (k_min <= k <= k_max):
            continue
        if any(abs(k - p.k) < 1e-8 for p in out):
            continue
        shift = float("nan")
        if fine is not None:
            k2 = refine(fine, k, k + 1e-6)[0]
            shift = abs(k2 * k2 - k * k)
        out.append(_build_pair(domain, k, s, V, step, disc, len(out), shift))
    return out


def ground_state(domain, check_level=True, k_hint=None, level=0):
    """Lowest Dirichlet eigenpair.  The scan starts at the Faber-Krahn bound.
    With k_hint (a nearby k known to be the lowest) the scan is skipped."""
    bd = as_boundary(domain)
    k_fk = 2.404825557695773 * math.sqrt(math.pi / bd.area)
    if k_hint is not None:
        lo, hi = k_hint - 0.05, k_hint + 0.05
        k, s, V, step, disc = solve_eig(domain, lo, hi, k_hint, disc=_disc(domain, hi, level))
        if s[0] < 1e-6:
            return _finish_ground(domain, k, s, V, step, disc, check_level and level < 2)
    width = 0.6 * k_fk
    lo = 0.999 * k_fk
    while True:
        pairs = find_eigs(domain, lo, lo + width, n_scan=40, check_level=check_level)
        if pairs:
            return pairs[0]
        lo += width


def _finish_ground(domain, k, s, V, step, disc, check_level):
    shift = float("nan")
    if check_level:
        fine = _disc(domain, k + 0.05, disc.level + 1)
        k2 = refine(fine, k, k + 1e-6)[0]
        shift = abs(k2 * k2 - k * k)
    return _build_pair(domain, k, s, V, step, disc, 0, shift)


def _project(disc, P):
    """Nearest boundary point: (distance, panel, t)."""
    d2 = np.hypot(disc.X[:, 0] - P[0], disc.X[:, 1] - P[1])
    j = int(np.argmin(d2))
    p = j // NQ
    i, lo, hi = disc.panels[p]
    seg = disc.boundary.segments[i]
    u = disc.u[j]
    for _ in range(40):
        x, d1, dd = seg.eval3(u)
        r = x[0] - P
        g = r @ d1[0]
        H = d1[0] @ d1[0] + r @ dd[0]
        du = -g / H if H > 0 else -g / (d1[0] @ d1[0])
        u = min(max(u + du, seg.u0), seg.u1)
        if abs(du) < 1e-15:
            break
    x = seg.point(u)[0]
    P2, t = disc.panel_of(i, u)
    return float(np.hypot(*(x - P))), int(P2[0]), float(t[0])


def eval_eigenfunction(pair, point, mode=0):
    P = np.asarray(point, float).reshape(-1, 2)
    bd = pair.boundary
    inside = bd.contains(P)
    on_p = np.full(len(P), -1)
    on_t = np.zeros(len(P))
    scale = math.sqrt(bd.area)
    for j in np.nonzero(~inside)[0]:
        dist, p, t = _project(pair.disc, P[j])
        if dist > 1e-10 * scale:
            raise OutsideDomain(f"point {tuple(P[j])} is outside the domain")
        on_p[j], on_t[j] = p, t
    vals = pair._layers[mode](P, on=(on_p, on_t) if (on_p >= 0).any() else None) * pair.scale
    return float(vals[0]) if np.ndim(point) == 1 else vals


def normal_trace(pair, n_nodes=64, mode=0):
    """Normal derivative samples at the Nystrom nodes (the BIE unknown is
    exactly d psi/d nu), with their arc-length weights."""
    if n_nodes < 64:
        raise ValueError("n_nodes must be >= 64")
    disc = pair.disc
    sig = pair.sigma[:, mode] * pair.scale
    if disc.N >= n_nodes:
        X, w, nu, vals = disc.X, disc.w, disc.nu, sig
        seg, u = disc.seg, disc.u
    else:
        m = int(math.ceil(n_nodes / disc.N))
        X, w, nu, vals, seg, u = _subdivide(disc, sig, m)
    bd = disc.boundary
    s = np.empty(len(X))
    for i in np.unique(seg):
        msk = seg == i
        s[msk] = bd.s_of(int(i), u[msk])
    return BoundaryTrace(s, X, vals, w, nu, pair.lam, disc, sig, pair.domain)


def _subdivide(disc, sig, m):
    X, W, NU, V, S, U = [], [], [], [], [], []
    for p, (i, lo, hi) in enumerate(disc.panels):
        seg = disc.boundary.segments[i]
        for c in range(m):
            ta, tb = -1 + 2 * c / m, -1 + 2 * (c + 1) / m
            tt = 0.5 * (tb - ta) * TG + 0.5 * (tb + ta)
            uu = 0.5 * (hi - lo) * tt + 0.5 * (hi + lo)
            x, d1, _ = seg.eval3(uu)
            sp = np.hypot(d1[:, 0], d1[:, 1])
            X.append(x)
            W.append(0.5 * (tb - ta) * 0.5 * (hi - lo) * WG * sp)
            NU.append(np.c_[d1[:, 1], -d1[:, 0]] / sp[:, None])
            V.append(interp_matrix(tt) @ sig[p * NQ:(p + 1) * NQ])
            S.append(np.full(NQ, i))
            U.append(uu)
    return (np.vstack(X), np.concatenate(W), np.vstack(NU), np.concatenate(V),
            np.concatenate(S), np.concatenate(U))
