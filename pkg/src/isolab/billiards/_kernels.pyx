# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ray/boundary kernels.  Same algorithm and operation order as
_pykernels so both backends produce identical trajectories."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, hypot, INFINITY

cdef int NSAMP = 64
cdef double TMIN = 1e-10
cdef double GRAZE = 1e-6
cdef double CORNER = 1e-6


cdef inline double _phi(double t) nogil:
    if t <= -1.0 or t >= 1.0:
        return 0.0
    return exp(1.0 - 1.0 / (1.0 - t * t))


cdef inline double _dphi(double t) nogil:
    cdef double s
    if t <= -1.0 or t >= 1.0:
        return 0.0
    s = 1.0 - t * t
    return exp(1.0 - 1.0 / s) * (-2.0 * t / (s * s))


cdef inline double _fbump(double px, double py, double dx, double dy,
                          double c, double w, double h, double t) nogil:
    return py + t * dy + h * _phi((px + t * dx - c) / w)


cdef double _bump_hit(double px, double py, double dx, double dy, double c, double w,
                      double h, double tlo, double thi) nogil:
    cdef int n = NSAMP, j, it, side
    cdef double step = (thi - tlo) / n
    cdef double fprev = _fbump(px, py, dx, dy, c, w, h, tlo)
    cdef double tprev = tlo, tj, fj, t0, t1, f0, f1, tm, fm
    for j in range(1, n + 1):
        tj = tlo + j * step
        fj = _fbump(px, py, dx, dy, c, w, h, tj)
        if fprev > 0.0 and fj <= 0.0:
            t0 = tprev
            t1 = tj
            f0 = fprev
            f1 = fj
            side = 0
            for it in range(200):
                if t1 - t0 <= 1e-15 * (1.0 + fabs(t1)):
                    break
                tm = (t0 * f1 - t1 * f0) / (f1 - f0)
                if not (t0 < tm and tm < t1):
                    tm = 0.5 * (t0 + t1)
                fm = _fbump(px, py, dx, dy, c, w, h, tm)
                if fm > 0.0:
                    t0 = tm
                    f0 = fm
                    if side == 1:
                        f1 *= 0.5
                    side = 1
                elif fm < 0.0:
                    t1 = tm
                    f1 = fm
                    if side == -1:
                        f0 *= 0.5
                    side = -1
                else:
                    return tm
            return t1
        tprev = tj
        fprev = fj
    return -1.0


cdef void _first_hit(double px, double py, double dx, double dy, double[:] geom, double tmin,
                     double *tout, int *kout, int *iout) nogil:
    cdef double a = geom[0], b = geom[1], xl = geom[2], xr = geom[3]
    cdef double r = geom[4], xc = geom[5], yT = geom[6]
    cdef int nb = <int>geom[7]
    cdef double best = INFINITY
    cdef int kind = -1, idx = -1, i, side, inside
    cdef double A, B, C, D, sq, t, ylim, cx, qx, qy, Bc, Cc, Dc, hx, hy
    cdef double c, w, h, ta, tb, tlo, thi, tmp

    A = dx * dx / (a * a) + dy * dy / (b * b)
    B = 2.0 * (px * dx / (a * a) + py * dy / (b * b))
    C = px * px / (a * a) + py * py / (b * b) - 1.0
    D = B * B - 4.0 * A * C
    if D > 0.0:
        sq = sqrt(D)
        if B >= 0.0:
            t = -2.0 * C / (B + sq)
        else:
            t = (-B + sq) / (2.0 * A)
        ylim = yT if r > 0.0 else 0.0
        if t > tmin and py + t * dy >= ylim - 1e-12:
            best = t
            kind = 2

    if r > 0.0:
        for side in range(3, 5):
            cx = xc if side == 3 else -xc
            qx = px - cx
            qy = py - r
            Bc = 2.0 * (dx * qx + dy * qy)
            Cc = qx * qx + qy * qy - r * r
            Dc = Bc * Bc - 4.0 * Cc
            if Dc > 0.0:
                sq = sqrt(Dc)
                if Bc >= 0.0:
                    t = -2.0 * Cc / (Bc + sq)
                else:
                    t = 0.5 * (-Bc + sq)
                if tmin < t and t < best:
                    hx = px + t * dx
                    hy = py + t * dy
                    if hy <= yT and ((side == 3 and hx >= xc) or (side == 4 and hx <= -xc)):
                        best = t
                        kind = side

    if dy < 0.0:
        t = -py / dy
        if tmin < t and t < best:
            hx = px + t * dx
            if xl <= hx and hx <= xr:
                inside = 0
                for i in range(nb):
                    c = geom[8 + 3 * i]
                    w = geom[9 + 3 * i]
                    if c - w < hx and hx < c + w:
                        inside = 1
                        break
                if not inside:
                    best = t
                    kind = 0

    for i in range(nb):
        c = geom[8 + 3 * i]
        w = geom[9 + 3 * i]
        h = geom[10 + 3 * i]
        if fabs(dx) > 1e-300:
            ta = (c - w - px) / dx
            tb = (c + w - px) / dx
            if ta > tb:
                tmp = ta
                ta = tb
                tb = tmp
        elif c - w < px and px < c + w:
            ta = -INFINITY
            tb = INFINITY
        else:
            continue
        tlo = ta if ta > tmin else tmin
        thi = tb if tb < best else best
        if dy < 0.0:
            tmp = (-1.01 * h - py) / dy
            if tmp < thi:
                thi = tmp
        elif not fabs(dx) > 1e-300:
            continue
        if not tlo < thi:
            continue
        if py + tlo * dy > 0.0 and py + thi * dy > 0.0:
            continue
        t = _bump_hit(px, py, dx, dy, c, w, h, tlo, thi)
        if t > 0.0 and t < best:
            best = t
            kind = 1
            idx = i

    if kind < 0:
        tout[0] = -1.0
        kout[0] = -1
        iout[0] = -1
    else:
        tout[0] = best
        kout[0] = kind
        iout[0] = idx


cdef void _normal_at(double[:] geom, int kind, double hx, double hy, double *nx, double *ny) nogil:
    cdef double a = geom[0], b = geom[1], r = geom[4], xc = geom[5]
    cdef int nb = <int>geom[7], i
    cdef double gp, s, ux, uy, cx
    if kind == 0:
        nx[0] = 0.0
        ny[0] = -1.0
        return
    if kind == 1:
        gp = 0.0
        for i in range(nb):
            gp -= geom[10 + 3 * i] / geom[9 + 3 * i] * _dphi((hx - geom[8 + 3 * i]) / geom[9 + 3 * i])
        s = sqrt(1.0 + gp * gp)
        nx[0] = gp / s
        ny[0] = -1.0 / s
        return
    if kind == 2:
        ux = hx / (a * a)
        uy = hy / (b * b)
    else:
        cx = xc if kind == 3 else -xc
        ux = hx - cx
        uy = hy - r
    s = sqrt(ux * ux + uy * uy)
    nx[0] = ux / s
    ny[0] = uy / s


def first_hit(double px, double py, double dx, double dy, double[:] geom, double tmin=TMIN):
    cdef double t
    cdef int k, i
    _first_hit(px, py, dx, dy, geom, tmin, &t, &k, &i)
    return t, k, i


def normal_at(double[:] geom, int kind, int idx, double hx, double hy):
    cdef double nx, ny
    _normal_at(geom, kind, hx, hy, &nx, &ny)
    return nx, ny


def trace(double px, double py, double dx, double dy, int n, double[:] geom):
    H_ = np.zeros((n, 2))
    Din_ = np.zeros((n, 2))
    Dout_ = np.zeros((n, 2))
    kinds_ = np.full(n, -1, dtype=np.int64)
    idxs_ = np.full(n, -1, dtype=np.int64)
    cdef double[:, :] H = H_
    cdef double[:, :] Din = Din_
    cdef double[:, :] Dout = Dout_
    cdef cnp.int64_t[:] kinds = kinds_
    cdef cnp.int64_t[:] idxs = idxs_
    cdef double a = geom[0], r = geom[4]
    cdef int status = 0, count = 0, j, kind, idx
    cdef double t, hx, hy, nx, ny, dn, ox, oy, s
    with nogil:
        for j in range(n):
            _first_hit(px, py, dx, dy, geom, TMIN, &t, &kind, &idx)
            if kind < 0:
                status = 3
                break
            hx = px + t * dx
            hy = py + t * dy
            if kind == 0:
                hy = 0.0
            H[j, 0] = hx
            H[j, 1] = hy
            Din[j, 0] = dx
            Din[j, 1] = dy
            kinds[j] = kind
            idxs[j] = idx
            count = j + 1
            if r <= 0.0 and (hypot(hx - a, hy) < CORNER * a or hypot(hx + a, hy) < CORNER * a):
                status = 1
                break
            _normal_at(geom, kind, hx, hy, &nx, &ny)
            dn = dx * nx + dy * ny
            if fabs(dn) < GRAZE:
                status = 2
                break
            ox = dx - 2.0 * dn * nx
            oy = dy - 2.0 * dn * ny
            s = sqrt(ox * ox + oy * oy)
            dx = ox / s
            dy = oy / s
            Dout[j, 0] = dx
            Dout[j, 1] = dy
            px = hx
            py = hy
    return H_, Din_, Dout_, kinds_, idxs_, status, count
