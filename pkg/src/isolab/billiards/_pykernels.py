"""Pure-Python ray/boundary kernels (reference and fallback for _kernels.pyx).

geom layout (float64 array):
    [a, b, xl, xr, r, xc, yT, nb, c0, w0, h0, c1, w1, h1, ...]
r = 0 means sharp corners at (+-a, 0).  Hit kinds: 0 flat bottom, 1 bump,
2 elliptic arc, 3 right fillet, 4 left fillet.  Trace status: 0 ok,
1 corner, 2 grazing, 3 no intersection found.
"""
import math

import numpy as np

NSAMP = 64
TMIN = 1e-10
GRAZE = 1e-6
CORNER = 1e-6


def _phi(t):
    if t <= -1.0 or t >= 1.0:
        return 0.0
    return math.exp(1.0 - 1.0 / (1.0 - t * t))


def _dphi(t):
    if t <= -1.0 or t >= 1.0:
        return 0.0
    s = 1.0 - t * t
    return math.exp(1.0 - 1.0 / s) * (-2.0 * t / (s * s))


def _gprime(geom, x):
    nb = int(geom[7])
    out = 0.0
    for i in range(nb):
        c, w, h = geom[8 + 3 * i], geom[9 + 3 * i], geom[10 + 3 * i]
        out -= h / w * _dphi((x - c) / w)
    return out


def _fbump(px, py, dx, dy, c, w, h, t):
    return py + t * dy + h * _phi((px + t * dx - c) / w)


def _bump_hit(px, py, dx, dy, c, w, h, tlo, thi):
    n = NSAMP
    step = (thi - tlo) / n
    fprev = _fbump(px, py, dx, dy, c, w, h, tlo)
    tprev = tlo
    for j in range(1, n + 1):
        tj = tlo + j * step
        fj = _fbump(px, py, dx, dy, c, w, h, tj)
        if fprev > 0.0 and fj <= 0.0:
            # bracket [tprev, tj]; Illinois false position with bisection guard
            t0, t1, f0, f1 = tprev, tj, fprev, fj
            side = 0
            for _ in range(200):
                if t1 - t0 <= 1e-15 * (1.0 + abs(t1)):
                    break
                tm = (t0 * f1 - t1 * f0) / (f1 - f0)
                if not (t0 < tm < t1):
                    tm = 0.5 * (t0 + t1)
                fm = _fbump(px, py, dx, dy, c, w, h, tm)
                if fm > 0.0:
                    t0, f0 = tm, fm
                    if side == 1:
                        f1 *= 0.5
                    side = 1
                elif fm < 0.0:
                    t1, f1 = tm, fm
                    if side == -1:
                        f0 *= 0.5
                    side = -1
                else:
                    return tm
            return t1
        tprev, fprev = tj, fj
    return -1.0


def first_hit(px, py, dx, dy, geom, tmin=TMIN):
    """Smallest t > tmin with p + t d on the boundary: (t, kind, bump index)."""
    a, b, xl, xr, r, xc, yT = (geom[0], geom[1], geom[2], geom[3], geom[4], geom[5], geom[6])
    nb = int(geom[7])
    best, kind, idx = math.inf, -1, -1

    # elliptic arc: larger root of the quadratic
    A = dx * dx / (a * a) + dy * dy / (b * b)
    B = 2.0 * (px * dx / (a * a) + py * dy / (b * b))
    C = px * px / (a * a) + py * py / (b * b) - 1.0
    D = B * B - 4.0 * A * C
    if D > 0.0:
        sq = math.sqrt(D)
        if B >= 0.0:
            t = -2.0 * C / (B + sq)
        else:
            t = (-B + sq) / (2.0 * A)
        ylim = yT if r > 0.0 else 0.0
        if t > tmin and py + t * dy >= ylim - 1e-12:
            best, kind = t, 2

    # fillets: exit root of the circle
    if r > 0.0:
        for side, cx in ((3, xc), (4, -xc)):
            qx, qy = px - cx, py - r
            Bc = 2.0 * (dx * qx + dy * qy)
            Cc = qx * qx + qy * qy - r * r
            Dc = Bc * Bc - 4.0 * Cc
            if Dc > 0.0:
                sq = math.sqrt(Dc)
                if Bc >= 0.0:
                    t = -2.0 * Cc / (Bc + sq)
                else:
                    t = 0.5 * (-Bc + sq)
                if tmin < t < best:
                    hx, hy = px + t * dx, py + t * dy
                    if hy <= yT and ((side == 3 and hx >= xc) or (side == 4 and hx <= -xc)):
                        best, kind = t, side

    # flat bottom
    if dy < 0.0:
        t = -py / dy
        if tmin < t < best:
            hx = px + t * dx
            if xl <= hx <= xr:
                inside = False
                for i in range(nb):
                    c, w = geom[8 + 3 * i], geom[9 + 3 * i]
                    if c - w < hx < c + w:
                        inside = True
                        break
                if not inside:
                    best, kind = t, 0

    # bumps
    for i in range(nb):
        c, w, h = geom[8 + 3 * i], geom[9 + 3 * i], geom[10 + 3 * i]
        if abs(dx) > 1e-300:
            ta = (c - w - px) / dx
            tb = (c + w - px) / dx
            if ta > tb:
                ta, tb = tb, ta
        elif c - w < px < c + w:
            ta, tb = -math.inf, math.inf
        else:
            continue
        tlo = max(ta, tmin)
        thi = min(tb, best)
        if dy < 0.0:
            # below y = -h the ray is certainly outside
            thi = min(thi, (-1.01 * h - py) / dy)
        elif not abs(dx) > 1e-300:
            continue
        if not tlo < thi:
            continue
        if py + tlo * dy > 0.0 and py + thi * dy > 0.0:
            continue
        t = _bump_hit(px, py, dx, dy, c, w, h, tlo, thi)
        if t > 0.0 and t < best:
            best, kind, idx = t, 1, i

    if kind < 0:
        return -1.0, -1, -1
    return best, kind, idx


def normal_at(geom, kind, idx, hx, hy):
    a, b, r, xc = geom[0], geom[1], geom[4], geom[5]
    if kind == 0:
        return 0.0, -1.0
    if kind == 1:
        gp = _gprime(geom, hx)
        s = math.sqrt(1.0 + gp * gp)
        return gp / s, -1.0 / s
    if kind == 2:
        nx, ny = hx / (a * a), hy / (b * b)
        s = math.sqrt(nx * nx + ny * ny)
        return nx / s, ny / s
    cx = xc if kind == 3 else -xc
    nx, ny = hx - cx, hy - r
    s = math.sqrt(nx * nx + ny * ny)
    return nx / s, ny / s


def trace(px, py, dx, dy, n, geom):
    """Follow up to n bounces.  Returns (H, Din, Dout, kinds, idx, status, count)."""
    H = np.zeros((n, 2))
    Din = np.zeros((n, 2))
    Dout = np.zeros((n, 2))
    kinds = np.full(n, -1, dtype=np.int64)
    idxs = np.full(n, -1, dtype=np.int64)
    a, r = geom[0], geom[4]
    status = 0
    count = 0
    for j in range(n):
        t, kind, idx = first_hit(px, py, dx, dy, geom)
        if kind < 0:
            status = 3
            break
        hx, hy = px + t * dx, py + t * dy
        if kind == 0:
            hy = 0.0
        H[j, 0], H[j, 1] = hx, hy
        Din[j, 0], Din[j, 1] = dx, dy
        kinds[j], idxs[j] = kind, idx
        count = j + 1
        if r <= 0.0 and (math.hypot(hx - a, hy) < CORNER * a or math.hypot(hx + a, hy) < CORNER * a):
            status = 1
            break
        nx, ny = normal_at(geom, kind, idx, hx, hy)
        dn = dx * nx + dy * ny
        if abs(dn) < GRAZE:
            status = 2
            break
        ox, oy = dx - 2.0 * dn * nx, dy - 2.0 * dn * ny
        s = math.sqrt(ox * ox + oy * oy)
        dx, dy = ox / s, oy / s
        Dout[j, 0], Dout[j, 1] = dx, dy
        px, py = hx, hy
    return H, Din, Dout, kinds, idxs, status, count
