"""Billiard flow in a mushroom domain: stepping, tracing, confocal caustic
parameter and the M/B dichotomy experiment."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import GrazingOrCorner
from ..geometry import DomainSpec
from ._backend import kernels

MU_TOL = 1e-9
ZONES = ("arc", "flat-focal", "flat-outer", "bump-M", "bump-B", "corner-region")
STATUS = {0: "ok", 1: "corner", 2: "grazing", 3: "miss"}


def n_workers():
    try:
        return max(1, int(os.environ.get("ISOLAB_THREADS", "1")))
    except ValueError:
        return 1


def geom_array(domain: DomainSpec):
    a, b = domain.ellipse.a, domain.ellipse.b
    r = domain.corner_rounding
    bumps = domain.bumps
    if r > 0:
        xc, _, _, yT = domain.fillet
    else:
        xc, yT = a, 0.0
    out = [a, b, -xc, xc, r, xc, yT, float(len(bumps))]
    for bm in bumps:
        out += [bm.center, bm.half_width, bm.depth]
    return np.array(out, dtype=np.float64)


def _focal_mask(domain):
    focal = set(domain.focal_bumps)
    return np.array([bm in focal for bm in domain.bumps], dtype=bool)


@dataclass(frozen=True)
class Ray:
    origin: tuple
    direction: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        n = math.hypot(d[0], d[1])
        if n == 0:
            raise ValueError("zero direction")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "direction", (float(d[0] / n), float(d[1] / n)))


def caustic_parameter(ellipse, chord):
    """mu = (a^2 u^2 + b^2 v^2 - w^2) / (u^2 + v^2) for the line ux + vy = w
    through the chord.  Accepts a single chord ((x0,y0),(x1,y1)) or arrays
    of endpoints with shape (n, 2) each."""
    p, q = chord
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    d = q - p
    u, v = d[..., 1], -d[..., 0]
    w = u * p[..., 0] + v * p[..., 1]
    a2, b2 = ellipse.a ** 2, ellipse.b ** 2
    mu = (a2 * u * u + b2 * v * v - w * w) / (u * u + v * v)
    return float(mu) if np.ndim(mu) == 0 else mu


def mu_from_direction(ellipse, p, d):
    p = np.asarray(p, float)
    d = np.asarray(d, float)
    u, v = d[..., 1], -d[..., 0]
    w = u * p[..., 0] + v * p[..., 1]
    return (ellipse.a ** 2 * u * u + ellipse.b ** 2 * v * v - w * w) / (u * u + v * v)


def classify_mu(mu, b, tol=MU_TOL):
    if mu > b * b + tol:
        return "FocalCrossing"
    if mu < b * b - tol:
        return "Outer"
    return "Separatrix"


def zone_tags(domain, kinds, idxs, H):
    c = domain.ellipse.c
    focal = _focal_mask(domain)
    tags = np.empty(len(kinds), dtype=object)
    for j, (k, i) in enumerate(zip(kinds, idxs)):
        if k == 2:
            tags[j] = "arc"
        elif k == 0:
            tags[j] = "flat-focal" if abs(H[j, 0]) < c else "flat-outer"
        elif k == 1:
            tags[j] = "bump-M" if focal[i] else "bump-B"
        else:
            tags[j] = "corner-region"
    return tags


def _hit_s(domain, kinds, H):
    """Arc-length parameter of bounce points."""
    bd = domain.boundary
    a, b = domain.ellipse.a, domain.ellipse.b
    s = np.empty(len(kinds))
    segkind = {0: 0, 1: 0}
    if domain.corner_rounding > 0:
        segkind.update({3: 1, 2: 2, 4: 3})
    else:
        segkind.update({2: 1})
    for k in np.unique(kinds):
        m = kinds == k
        i = segkind[int(k)]
        seg = bd.segments[i]
        if k in (0, 1):
            u = H[m, 0]
        elif k == 2:
            u = np.arctan2(H[m, 1] / b, H[m, 0] / a)
        else:
            ang = np.arctan2(H[m, 1] - seg.center[1], H[m, 0] - seg.center[0])
            u = np.where(ang < seg.u0 - 1e-12, ang + 2 * np.pi, ang)
        s[m] = bd.s_of(i, np.clip(u, seg.u0, seg.u1))
    return s


@dataclass
class BounceRecord:
    s: float
    position: np.ndarray
    incoming: np.ndarray
    outgoing: np.ndarray
    kind: str
    zone: str


@dataclass
class Trajectory:
    domain: DomainSpec = field(repr=False)
    origin: np.ndarray
    positions: np.ndarray
    incoming: np.ndarray
    outgoing: np.ndarray
    kinds: np.ndarray
    bump_index: np.ndarray
    status: str

    @property
    def abandoned(self):
        return self.status != "ok"

    def __len__(self):
        return len(self.positions)

    @property
    def zones(self):
        tags = zone_tags(self.domain, self.kinds, self.bump_index, self.positions)
        if self.status == "corner" and len(tags):
            tags[-1] = "corner-region"
        return tags

    @property
    def s(self):
        return _hit_s(self.domain, self.kinds, self.positions)

    @property
    def mu(self):
        """Caustic parameter of the chord ending at each bounce (base ellipse)."""
        starts = np.vstack([self.origin[None, :], self.positions[:-1]])
        return mu_from_direction(self.domain.ellipse, starts, self.incoming)

    def upper_chords(self):
        """Mask of chords with both endpoints in the closed upper half plane."""
        starts = np.vstack([self.origin[None, :], self.positions[:-1]])
        return (starts[:, 1] >= 0) & (self.positions[:, 1] >= 0)

    def rows(self):
        zones = self.zones
        s = self.s
        mu = self.mu
        for j in range(len(self)):
            yield (j, s[j], self.positions[j, 0], self.positions[j, 1],
                   self.outgoing[j, 0], self.outgoing[j, 1], mu[j], zones[j])


def _run(domain, origin, direction, n, geom=None):
    if geom is None:
        geom = geom_array(domain)
    H, Din, Dout, kinds, idxs, status, count = kernels.trace(
        float(origin[0]), float(origin[1]), float(direction[0]), float(direction[1]), int(n), geom)
    tr = Trajectory(domain, np.asarray(origin, float), H[:count], Din[:count], Dout[:count],
                    kinds[:count], idxs[:count], STATUS[status])
    return tr


def trace(domain, ray, n_bounces, strict=False):
    """Follow a ray for n_bounces reflections.  Abandoned trajectories
    (corner, grazing) come back flagged; strict=True raises instead."""
    if n_bounces < 1:
        raise ValueError("n_bounces must be >= 1")
    tr = _run(domain, ray.origin, ray.direction, n_bounces)
    if strict and tr.abandoned:
        raise GrazingOrCorner(f"trajectory abandoned ({tr.status}) after {len(tr)} bounces", partial=tr)
    return tr


def step(domain, ray):
    tr = _run(domain, ray.origin, ray.direction, 1)
    if tr.abandoned:
        raise GrazingOrCorner(f"hit rejected: {tr.status}", partial=tr)
    k = {0: "flat", 1: "bump", 2: "arc", 3: "fillet", 4: "fillet"}[int(tr.kinds[0])]
    return BounceRecord(float(tr.s[0]), tr.positions[0], tr.incoming[0], tr.outgoing[0], k, tr.zones[0])


def random_rays(domain, n, seed):
    """One ray per work item, each from its own child of SeedSequence(seed)."""
    children = np.random.SeedSequence(seed).spawn(n)
    out = []
    bd = domain.boundary
    for ss in children:
        rng = np.random.default_rng(ss)
        p = bd.sample_interior(1, rng)[0]
        th = rng.uniform(0, 2 * np.pi)
        out.append(Ray((p[0], p[1]), (math.cos(th), math.sin(th))))
    return out


@dataclass
class DichotomyReport:
    verdict: str
    n_traj: int
    n_bounces: int
    seed: int
    violations: int
    abandoned: int
    zone_inconsistencies: int
    visits: dict
    per_domain: list

    def to_dict(self):
        return {"verdict": self.verdict, "n_traj": self.n_traj, "n_bounces": self.n_bounces,
                "seed": self.seed, "violations": self.violations, "abandoned": self.abandoned,
                "zone_inconsistencies": self.zone_inconsistencies, "visits": self.visits,
                "per_domain": self.per_domain}


def zone_consistency(tr, tol=MU_TOL):
    """Count flat-bottom bounces whose incoming chord class disagrees with |x| vs c."""
    c, b = tr.domain.ellipse.c, tr.domain.ellipse.b
    flat = tr.kinds == 0
    if not flat.any():
        return 0
    mu = tr.mu[flat]
    x = np.abs(tr.positions[flat, 0])
    bad = ((mu > b * b + tol) & ~(x < c)) | ((mu < b * b - tol) & ~(x > c))
    return int(bad.sum())


def _one(domain, geom, ray, n_bounces):
    tr = _run(domain, ray.origin, ray.direction, n_bounces, geom)
    return tr


def dichotomy_check(pair_or_domains, n_traj, n_bounces, seed):
    """Launch n_traj random trajectories in each domain and look for any
    that visits both a focal (M) bump and an outer (B) bump."""
    if hasattr(pair_or_domains, "omega1"):
        domains = [pair_or_domains.omega1, pair_or_domains.omega2]
    elif isinstance(pair_or_domains, DomainSpec):
        domains = [pair_or_domains]
    else:
        domains = list(pair_or_domains)
    per = []
    tot_v = tot_a = tot_z = 0
    visits = {}
    for di, dom in enumerate(domains):
        geom = geom_array(dom)
        rays = random_rays(dom, n_traj, [seed, di]) if n_traj else []
        with ThreadPoolExecutor(n_workers()) as ex:
            trs = list(ex.map(lambda r: _one(dom, geom, r, n_bounces), rays))
        v = a = z = 0
        bad = []
        for j, tr in enumerate(trs):
            if tr.abandoned:
                a += 1
                continue
            zs = set(tr.zones)
            key = "+".join(sorted(zs))
            visits[key] = visits.get(key, 0) + 1
            if "bump-M" in zs and "bump-B" in zs:
                v += 1
                bad.append(j)
            z += zone_consistency(tr)
        per.append({"domain": di + 1, "violations": v, "abandoned": a, "zone_inconsistencies": z,
                    "violating_trajectories": bad})
        tot_v += v
        tot_a += a
        tot_z += z
    verdict = "PASS" if tot_v == 0 and tot_z == 0 else "FAIL"
    return DichotomyReport(verdict, n_traj, n_bounces, seed, tot_v, tot_a, tot_z,
                           dict(sorted(visits.items())), per)
