"""Second-kind boundary integral formulation of the Dirichlet problem.

An eigenfunction is the single layer psi = S[sigma] with sigma = d psi/d nu;
sigma solves (K' - I/2) sigma = 0, whose null space is nontrivial exactly at
interior Dirichlet eigenvalues (the exterior Neumann problem it encodes is
uniquely solvable for real k).  Nystrom discretization on graded
Gauss-Legendre panels, with product integration of the log singularity on
the self panel and on panels adjacent across smooth junctions.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import hankel1, j1, y1

from .quadrature import NQ, TG, WG, interp_matrix, log_weights

# (corner levels, bump end levels, panels per bump, hmax scale)
LEVELS = {-1: (4, 1, 2, 2.5), 0: (8, 4, 4, 1.0), 1: (10, 5, 6, 0.75), 2: (12, 6, 8, 0.55)}


def _dedupe(br, tol=1e-12):
    br = np.sort(np.asarray(br, float))
    keep = [br[0]]
    for x in br[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.array(keep)


def _speed(seg, u):
    d = seg.d1(np.atleast_1d(u))
    return np.hypot(d[:, 0], d[:, 1])


def _segment_edges(seg, start_corner, end_corner, hmax, corner0, nlev_c, nlev_e, nb):
    u0, u1 = seg.u0, seg.u1
    br = [u0, u1]
    bumps = getattr(seg, "bumps", ())
    br += [e for bm in bumps for e in bm.support]

    def add(pts, spacing):
        # graded points never crowd an existing break: slivers spoil the
        # near-field accuracy of the neighbouring panels
        for x in pts:
            if u0 < x < u1 and min(abs(x - y) for y in br) > 0.3 * spacing:
                br.append(x)

    for flag, ue, sgn in ((start_corner, u0, 1.0), (end_corner, u1, -1.0)):
        if flag:
            sp = _speed(seg, ue)[0]
            L0 = min(corner0, 0.25 * (u1 - u0) * sp) / sp
            for l in range(nlev_c + 1):
                add([ue + sgn * L0 * 2.0 ** -l], L0 * 2.0 ** -l)
    for bm in bumps:
        lo, hi = bm.support
        pw = (hi - lo) / nb
        add(lo + pw * np.arange(1, nb), pw)
        for l in range(1, nlev_e + 1):
            for xe in (lo, hi):
                add([xe + pw * 0.5 ** l, xe - pw * 0.5 ** l], pw * 0.5 ** l)
    br = _dedupe([u for u in br if u0 <= u <= u1])
    out = [br[0]]
    for lo, hi in zip(br[:-1], br[1:]):
        um = np.linspace(lo, hi, 9)
        length = (hi - lo) * np.max(_speed(seg, um))
        n = max(1, int(math.ceil(length / hmax - 1e-9)))
        out += list(lo + (hi - lo) * np.arange(1, n + 1) / n)
    return _dedupe(out)


def _balance(segs, pan, ratio=3.0):
    """Split panels until neighbours differ in length by at most ratio."""
    def length(p):
        i, lo, hi = p
        return (hi - lo) * float(np.mean(_speed(segs[i], np.linspace(lo, hi, 5))))
    while True:
        L = np.array([length(p) for p in pan])
        n = len(pan)
        big = [j for j in range(n)
               if L[j] > ratio * min(L[j - 1], L[(j + 1) % n]) * (1 + 1e-9)]
        if not big:
            return pan
        out = []
        for j, (i, lo, hi) in enumerate(pan):
            if j in big:
                m = 0.5 * (lo + hi)
                out += [(i, lo, m), (i, m, hi)]
            else:
                out.append((i, lo, hi))
        pan = out


class Discretization:
    """Panels, nodes and the k-independent geometry of the Nystrom matrix."""

    def __init__(self, boundary, k_max=4.0, level=0):
        self.boundary = boundary
        self.level = level
        nlev_c, nlev_e, nb, hs = LEVELS[level]
        ell = math.sqrt(boundary.area) / 1.8
        hmax = hs * min(0.3 * ell, 2.0 / max(k_max, 1e-3))
        corner0 = 0.25 * ell
        segs = boundary.segments
        ns = len(segs)
        pan = []
        for i, seg in enumerate(segs):
            edges = _segment_edges(seg, boundary.corners[i - 1], boundary.corners[i],
                                   hmax, corner0, nlev_c, nlev_e, nb)
            for lo, hi in zip(edges[:-1], edges[1:]):
                pan.append((i, lo, hi))
        pan = _balance(segs, pan)
        self.panels = pan
        self.npan = len(pan)
        X, D, DD, U = [], [], [], []
        for i, lo, hi in pan:
            u = 0.5 * (hi - lo) * TG + 0.5 * (hi + lo)
            x, d, dd = segs[i].eval3(u)
            X.append(x)
            D.append(d)
            DD.append(dd)
            U.append(u)
        self.X = np.vstack(X)
        D = np.vstack(D)
        DD = np.vstack(DD)
        self.u = np.concatenate(U)
        self.seg = np.repeat([p[0] for p in pan], NQ)
        self.half = np.array([0.5 * (hi - lo) for _, lo, hi in pan])
        self.sp = np.hypot(D[:, 0], D[:, 1])
        self.nu = np.c_[D[:, 1], -D[:, 0]] / self.sp[:, None]
        self.kappa = (D[:, 0] * DD[:, 1] - D[:, 1] * DD[:, 0]) / self.sp ** 3
        self.w = np.repeat(self.half, NQ) * np.tile(WG, self.npan) * self.sp
        self.N = len(self.X)
        # smooth-neighbour structure, cyclic in panel order
        smooth = []
        for p, (i, lo, hi) in enumerate(pan):
            q = (p + 1) % self.npan
            if pan[q][0] == i and q != 0:
                smooth.append(True)
            elif self.npan == 1:
                smooth.append(False)
            else:
                smooth.append(not boundary.corners[i])
        self.smooth_next = np.array(smooth)
        self.plen = np.add.reduceat(self.w, np.arange(0, self.N, NQ))
        self._geometry()

    # -- geometry ---------------------------------------------------------
    def _geometry(self):
        X = self.X
        dx = X[:, None, 0] - X[None, :, 0]
        dy = X[:, None, 1] - X[None, :, 1]
        r = np.hypot(dx, dy)
        np.fill_diagonal(r, 1.0)
        self.r = r
        n = dx * self.nu[:, None, 0] + dy * self.nu[:, None, 1]
        nr = n / r
        np.fill_diagonal(nr, 0.0)
        self.nr = nr
        self.mask = ~np.eye(self.N, dtype=bool)
        self.corr = []
        for p in range(self.npan):
            for q, t0s in self._near_targets(p):
                M = np.empty((NQ, NQ))
                js = np.arange(p * NQ, (p + 1) * NQ)
                rows = np.arange(q * NQ, (q + 1) * NQ)
                for ia, t0 in enumerate(t0s):
                    M[ia] = self._log_row(p, js, r[rows[ia], js], t0, same_node=(q == p))
                self.corr.append((rows, js, M))

    def panel_end(self, p, end):
        i, lo, hi = self.panels[p]
        seg = self.boundary.segments[i]
        u = hi if end > 0 else lo
        return seg.point(u)[0], _speed(seg, u)[0]

    def _neighbours(self, p):
        out = []
        if self.smooth_next[p]:
            out.append(((p + 1) % self.npan, 1))
        if self.smooth_next[p - 1]:
            out.append(((p - 1) % self.npan, -1))
        return out

    def local_t(self, p, q, xq, uq):
        """Local coordinate on panel p of target points lying on panel q."""
        i, lo, hi = self.panels[p]
        if q == p or (self.panels[q][0] == i and abs(q - p) == 1):
            return (2 * uq - (hi + lo)) / (hi - lo)
        side = 1 if (q - p) % self.npan == 1 else -1
        xe, spe = self.panel_end(p, side)
        dist = np.hypot(xq[:, 0] - xe[0], xq[:, 1] - xe[1])
        return side * (1 + dist / (0.5 * (hi - lo) * spe))

    def _near_targets(self, p):
        yield p, TG.copy()
        for q, _ in self._neighbours(p):
            if q == p:
                continue
            rows = slice(q * NQ, (q + 1) * NQ)
            yield q, self.local_t(p, q, self.X[rows], self.u[rows])

    def _log_row(self, p, js, rr, t0, same_node=False):
        """Weights (times L(x, y_j)) replacing GL for int L log r ds over panel p."""
        h = self.half[p]
        lw = log_weights(t0)
        dt = np.abs(TG - t0)
        same = dt < 1e-13
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(same, np.log(self.sp[js]), np.log(rr / (h * dt)))
            gl = np.where(same, 0.0, np.log(rr))
        return self.sp[js] * (h * lw + h * WG * (math.log(h) + ratio) - h * WG * gl)

    # -- operator ---------------------------------------------------------
    def matrix(self, k):
        """Symmetrized sqrt(w) (K' - I/2) sqrt(w)^-1 at wavenumber k."""
        N = self.N
        kr = k * self.r
        K = np.empty((N, N), complex)
        m = self.mask
        krm = kr[m]
        K[m] = (k / 4) * self.nr[m] * (y1(krm) - 1j * j1(krm))
        np.fill_diagonal(K, -self.kappa / (4 * np.pi))
        A = K * self.w[None, :]
        for rows, js, M in self.corr:
            sub = np.ix_(rows, js)
            A[sub] += k / (2 * np.pi) * j1(kr[sub]) * self.nr[sub] * M
        A[np.diag_indices(N)] -= 0.5
        s = np.sqrt(self.w)
        return A * s[:, None] / s[None, :]

    # -- single layer evaluation -------------------------------------------
    def single_layer(self, sigma, k, targets, on_boundary=None):
        """S[sigma](x) = int (i/4) H0(k|x-y|) sigma(y) ds_y.

        Far panels use the panel rule, near panels are subdivided adaptively
        with sigma interpolated; targets listed in on_boundary as
        (target index, panel, t0) use product integration on their own and
        smooth-neighbour panels.
        """
        T = np.atleast_2d(np.asarray(targets, float))
        nt = len(T)
        out = np.zeros(nt, complex)
        sig = np.asarray(sigma, complex)
        special = {}
        if on_boundary is not None:
            for ti, p, t0 in on_boundary:
                special.setdefault(int(ti), []).append((p, t0))
        for p in range(self.npan):
            js = slice(p * NQ, (p + 1) * NQ)
            Y = self.X[js]
            d = np.hypot(T[:, None, 0] - Y[None, :, 0], T[:, None, 1] - Y[None, :, 1])
            dmin = d.min(axis=1)
            near = dmin < 1.2 * self.plen[p]
            handled = np.zeros(nt, bool)
            for ti, lst in special.items():
                for (pp, t0) in lst:
                    if pp == p or any(q == p for q, _ in self._neighbours(pp)):
                        if pp == p:
                            tl = t0
                        else:
                            tl = self.local_t(p, pp, T[ti:ti + 1], np.array([self._u_of(pp, t0)]))[0]
                        out[ti] += self._product_sl(p, sig[js], k, T[ti], tl)
                        handled[ti] = True
                        break
            far = ~near & ~handled
            if far.any():
                out[far] += (0.25j * hankel1(0, k * d[far])) @ (sig[js] * self.w[js])
            nn = np.nonzero(near & ~handled)[0]
            if len(nn):
                out[nn] += self._adaptive(p, sig[js], k, T[nn])
        return out

    def _u_of(self, p, t):
        i, lo, hi = self.panels[p]
        return 0.5 * (hi - lo) * t + 0.5 * (hi + lo)

    def _product_sl(self, p, sigp, k, x, t0):
        h = self.half[p]
        js = np.arange(p * NQ, (p + 1) * NQ)
        Y = self.X[js]
        r = np.hypot(x[0] - Y[:, 0], x[1] - Y[:, 1])
        dt = np.abs(TG - t0)
        same = r < 1e-14
        rs = np.where(same, 1.0, r)
        L = -j0(k * rs) / (2 * np.pi)
        L = np.where(same, -1 / (2 * np.pi), L)
        with np.errstate(divide="ignore", invalid="ignore"):
            full = np.where(same, 0.0, 0.25j * hankel1(0, k * rs))
            # smooth remainder, with its limit at coincident points
            lim = 0.25j - (np.log(k / 2) + np.euler_gamma) / (2 * np.pi)
            rem = np.where(same, lim, full - L * np.log(rs))
            ratio = np.where(same, np.log(self.sp[js]), np.log(rs / (h * dt)))
        f = sigp * self.sp[js] * h
        return (np.dot(WG * f, rem) + np.dot(WG * f * L, math.log(h) + ratio)
                + np.dot(log_weights(t0) * f, L))

    def _adaptive(self, p, sigp, k, T):
        i, lo, hi = self.panels[p]
        seg = self.boundary.segments[i]
        h = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        out = np.zeros(len(T), complex)
        stack = [(-1.0, 1.0, np.arange(len(T)))]
        while stack:
            ta, tb, idx = stack.pop()
            tt = 0.5 * (tb - ta) * TG + 0.5 * (tb + ta)
            u = mid + h * tt
            x, dd, _ = seg.eval3(u)
            sp = np.hypot(dd[:, 0], dd[:, 1])
            wl = 0.5 * (tb - ta) * h * WG * sp
            sublen = wl.sum()
            P = T[idx]
            dist = np.hypot(P[:, None, 0] - x[None, :, 0], P[:, None, 1] - x[None, :, 1])
            ok = (dist.min(axis=1) > 0.6 * sublen) | (sublen < 1e-13)
            if ok.any():
                sv = interp_matrix(tt) @ sigp
                out[idx[ok]] += (0.25j * hankel1(0, k * dist[ok])) @ (sv * wl)
            if (~ok).any():
                tm = 0.5 * (ta + tb)
                stack.append((ta, tm, idx[~ok]))
                stack.append((tm, tb, idx[~ok]))
        return out

    # -- helpers for traces -------------------------------------------------
    def panel_of(self, i, u):
        """Panel index and local coordinate for natural parameter u on segment i."""
        u = np.atleast_1d(np.asarray(u, float))
        ps = [p for p, pp in enumerate(self.panels) if pp[0] == i]
        los = np.array([self.panels[p][1] for p in ps])
        j = np.clip(np.searchsorted(los, u, side="right") - 1, 0, len(ps) - 1)
        P = np.array(ps)[j]
        lo = np.array([self.panels[p][1] for p in P])
        hi = np.array([self.panels[p][2] for p in P])
        return P, (2 * u - (hi + lo)) / (hi - lo)

    def interpolate(self, values, i, u):
        P, t = self.panel_of(i, u)
        out = np.empty(len(t), np.result_type(values, float))
        for p in np.unique(P):
            m = P == p
            out[m] = interp_matrix(t[m]) @ values[p * NQ:(p + 1) * NQ]
        return out


# ---------------------------------------------------------------- eigen solves

def small_eig(A, v0=None, iters=3):
    lu = lu_factor(A)
    v = np.ones(len(A), complex) if v0 is None else np.asarray(v0, complex)
    v = v / np.linalg.norm(v)
    for _ in range(iters):
        u = lu_solve(lu, v)
        v = u / np.linalg.norm(u)
    return np.vdot(v, A @ v), v, lu


def smallest_singular(A, lu=None, p=4, iters=4, seed=0):
    """Approximate p smallest singular values and right singular vectors
    by inverse subspace iteration on A^H A."""
    if lu is None:
        lu = lu_factor(A)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((len(A), p)) + 1j * rng.standard_normal((len(A), p))
    for _ in range(iters):
        V = lu_solve(lu, lu_solve(lu, V, trans=2))
        V, _ = np.linalg.qr(V)
    _, s, Wh = np.linalg.svd(A @ V, full_matrices=False)
    order = np.argsort(s)
    return s[order], (V @ Wh.conj().T)[:, order]


def refine(disc, k0, k1, tol=1e-13, maxit=25):
    """Secant iteration on the smallest eigenvalue of the Nystrom matrix."""
    mu0, v, _ = small_eig(disc.matrix(k0))
    mu1, v, lu = small_eig(disc.matrix(k1), v0=v)
    A = None
    step = abs(k1 - k0)
    for _ in range(maxit):
        if mu1 == mu0:
            break
        k2 = (k1 - mu1 * (k1 - k0) / (mu1 - mu0)).real
        if not np.isfinite(k2) or abs(k2 - k1) > 10 * abs(k1 - k0) + 0.05:
            k2 = 0.5 * (k0 + k1)
        k0, mu0 = k1, mu1
        k1 = k2
        A = disc.matrix(k1)
        mu1, v, lu = small_eig(A, v0=v)
        step = abs(k1 - k0)
        if step < tol * max(1.0, k1):
            break
    if A is None:
        A = disc.matrix(k1)
        lu = lu_factor(A)
    return k1, A, lu, step
