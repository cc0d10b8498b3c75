"""First variation of the ground-state eigenvalue under a bottom deformation.

The bottom point (x, 0) moves to (x, eps f(x)) with f <= 0.  The outward
normal there is (0, -1), so the normal displacement is -eps f >= 0 and

    d lambda_0 / d eps = int (d psi_0 / d nu)^2 f ds  <= 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..billiards.dynamics import n_workers
from ..errors import SupportViolation
from ..geometry import BumpSpec, DomainSpec, build_domain, mirror_bumps, profile, zone_of
from ..spectral import ground_state, normal_trace

MIN_NODES = 64
GAUSS_N = 16


@dataclass(frozen=True)
class PerturbationSpec:
    """f(x) = sum of the bump profiles (each -depth * phi), amplitude eps."""
    bumps: tuple = ()
    eps: float = 1e-3

    def __post_init__(self):
        bs = (self.bumps,) if isinstance(self.bumps, BumpSpec) else tuple(self.bumps)
        object.__setattr__(self, "bumps", tuple(sorted(bs)))
        if not self.eps >= 0:
            raise ValueError("eps must be nonnegative")

    @classmethod
    def unit(cls, bumps, eps=1e-3):
        """Shape of `bumps` rescaled so that min f = -1."""
        bs = (bumps,) if isinstance(bumps, BumpSpec) else tuple(bumps)
        if not bs:
            return cls((), eps)
        x = np.linspace(min(b.support[0] for b in bs), max(b.support[1] for b in bs), 4001)
        x = np.union1d(x, [b.center for b in bs])
        depth = -float(np.min(profile(bs, x)[0]))
        return cls(tuple(b.scaled(1.0 / depth) for b in bs), eps)

    def __call__(self, x):
        return profile(self.bumps, x)[0]

    @property
    def is_zero(self):
        return not self.bumps

    def reflect(self):
        return PerturbationSpec(mirror_bumps(self.bumps), self.eps)

    def amplitude(self, eps=None):
        """Bumps of the deformed bottom eps * f."""
        e = self.eps if eps is None else eps
        return tuple(b.scaled(e) for b in self.bumps) if e > 0 else ()

    def to_dict(self):
        return {"eps": self.eps, "bumps": [dict(center=b.center, half_width=b.half_width, depth=b.depth)
                                           for b in self.bumps]}


@dataclass(frozen=True)
class SegmentPair:
    x1: float
    x2: float

    def __post_init__(self):
        if not 0 < self.x1 < self.x2:
            raise ValueError("need 0 < x1 < x2")

    @property
    def J(self):
        return (self.x1, self.x2)

    @property
    def dual(self):
        return (-self.x2, -self.x1)

    def check(self, ellipse):
        if self.x2 >= ellipse.c:
            raise SupportViolation(f"segment {self.J} leaves the focal segment (c = {ellipse.c:.6g})")


def check_support(domain, f):
    """f must sit in the focal zone, away from every bump of the domain."""
    if not isinstance(domain, DomainSpec):
        raise SupportViolation("bump-shaped profiles need a mushroom domain")
    for bm in f.bumps:
        if zone_of(bm, domain.ellipse, domain.clearance) != "focal":
            raise SupportViolation(f"perturbation bump {bm} is not inside the focal zone "
                                   f"with clearance {domain.clearance:.6g}")
        for ob in domain.bumps:
            if bm.support[0] < ob.support[1] and ob.support[0] < bm.support[1]:
                raise SupportViolation(f"perturbation bump {bm} overlaps domain bump {ob}: "
                                       "the bottom is not flat there")


def _bottom_nodes(trace, bm, refine=1):
    """Gauss nodes over a bump support, split at the trace's own panel ends and
    graded geometrically toward the support ends, where phi has its essential
    singularity."""
    lo, hi = bm.support
    tb = np.r_[-1.0, 1.0, 0.0, [sg * (1 - 2.0 ** -l) for l in range(1, 13) for sg in (-1, 1)]]
    br = set(bm.center + bm.half_width * tb)
    br |= {e for (i, a, b) in trace.disc.panels if i == 0 for e in (a, b) if lo < e < hi}
    edges = np.array(sorted(br))
    m = max(1, math.ceil(MIN_NODES / (GAUSS_N * (len(edges) - 1))))
    if refine > 1:
        m *= refine
    t, w = leggauss(GAUSS_N)
    X, W = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        for j in range(m):
            u0 = a + (b - a) * j / m
            u1 = a + (b - a) * (j + 1) / m
            X.append(0.5 * (u1 + u0) + 0.5 * (u1 - u0) * t)
            W.append(0.5 * (u1 - u0) * w)
    return np.concatenate(X), np.concatenate(W)


def hadamard_rate(trace, f, refine=1):
    """d lambda_0 / d eps = int (d psi/d nu)^2 f ds.

    f is a PerturbationSpec on the flat focal bottom, or (validation mode) a
    callable of boundary positions returning the profile at the trace nodes.
    """
    if callable(f) and not isinstance(f, PerturbationSpec):
        vals = np.asarray(f(trace.position), float) * np.ones(len(trace.s))
        return float(np.sum(trace.weights * trace.dpsi_dnu ** 2 * vals))
    if f.is_zero:
        return 0.0
    if trace.domain is not None:
        check_support(trace.domain, f)
    seg = trace.disc.boundary.segments[0]
    total = 0.0
    for bm in f.bumps:
        x, w = _bottom_nodes(trace, bm, refine)
        sp = np.hypot(*seg.d1(x).T)
        q = trace.at(0, x) ** 2
        total += float(np.sum(w * sp * q * bm(x)))
    return total


def quadrature_error(trace, f):
    return abs(hadamard_rate(trace, f, refine=2) - hadamard_rate(trace, f))


def evenness_defect(trace, seg, n_samples=64):
    """RMS of q(x) - q(-x) over RMS of q(x) + q(-x) on J, q = (d psi/d nu)^2."""
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16 (a single point can be accidentally even)")
    x = seg.x1 + (np.arange(n_samples) + 0.5) * (seg.x2 - seg.x1) / n_samples
    q = trace.at(0, x) ** 2
    qm = trace.at(0, -x) ** 2
    return float(np.sqrt(np.mean((q - qm) ** 2)) / np.sqrt(np.mean((q + qm) ** 2)))


def evenness_error(trace, fine, seg, n_samples=64):
    """Trace discrepancy between two discretizations, on the defect's scale."""
    x = seg.x1 + (np.arange(n_samples) + 0.5) * (seg.x2 - seg.x1) / n_samples
    xs = np.r_[x, -x]
    q0 = trace.at(0, xs) ** 2
    q1 = fine.at(0, xs) ** 2
    den = np.sqrt(np.mean((q0[:n_samples] + q0[n_samples:]) ** 2))
    return float(2 * np.sqrt(np.mean((q0 - q1) ** 2)) / den)


def base_trace(omega, level=0, k_hint=None):
    pair = ground_state(omega, check_level=False, k_hint=k_hint, level=level)
    return normal_trace(pair), pair


def pair_rates(omega, f, trace=None):
    """(rate of f, rate of the mirrored f) on the bump-free-focal domain omega."""
    if isinstance(omega, DomainSpec) and omega.focal_bumps:
        raise SupportViolation("pair_rates needs a domain without focal bumps")
    trace = trace or base_trace(omega)[0]
    return hadamard_rate(trace, f), hadamard_rate(trace, f.reflect())


@dataclass
class RateCheck:
    rate: float
    slope: float
    deviation: float
    eps: list
    lams: list
    lam0: float
    slopes: list
    richardson: list
    remainder_order: float
    nonlinear: bool
    curvature: float = field(default=0.0)

    def to_dict(self):
        return dict(self.__dict__)


def _extrapolate(eps, s):
    """Value at 0 of the polynomial through (eps_i, s_i) (Neville)."""
    p = list(s)
    n = len(eps)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (eps[i + m] * p[i] - eps[i] * p[i + 1]) / (eps[i + m] - eps[i])
    return p[0]


def perturbed(omega, f, eps):
    return build_domain(omega.ellipse, omega.outer_bumps, omega.focal_bumps + f.amplitude(eps),
                        omega.corner_rounding, omega.clearance)


def fd_rate_check(omega, f, eps_list=None, base=None, nonlinear_tol=0.1):
    """Finite-difference slope of lambda_0(eps) against the boundary integral."""
    b = omega.ellipse.b
    eps_list = sorted(eps_list if eps_list is not None else [1e-3 * b, 5e-4 * b, 2.5e-4 * b], reverse=True)
    if not eps_list or min(eps_list) <= 0:
        raise ValueError("eps_list must hold positive amplitudes")
    base = base or ground_state(omega, check_level=False)
    rate = hadamard_rate(normal_trace(base), f)
    if f.is_zero:
        lams = [base.lam] * len(eps_list)
    else:
        doms = [perturbed(omega, f, e) for e in eps_list]
        solve = lambda d: ground_state(d, check_level=False, k_hint=base.k).lam
        with ThreadPoolExecutor(min(len(doms), n_workers())) as ex:
            lams = list(ex.map(solve, doms))
    lam0 = base.lam
    slopes = [(l - lam0) / e for l, e in zip(lams, eps_list)]
    rich = [slopes[0]]
    for m in range(2, len(eps_list) + 1):
        rich.append(_extrapolate(eps_list[:m], slopes[:m]))
    slope = rich[-1]
    if rate == 0 and slope == 0:
        dev = 0.0
    else:
        dev = abs(slope - rate) / max(abs(rate), abs(slope))
    rem = [l - lam0 - e * rate for l, e in zip(lams, eps_list)]
    order = float("nan")
    if len(rem) > 1 and rem[0] != 0 and rem[1] != 0:
        order = math.log(abs(rem[0] / rem[1])) / math.log(eps_list[0] / eps_list[1])
    curv = abs(rem[0]) / abs(eps_list[0] * rate) if rate else 0.0
    return RateCheck(rate, slope, dev, list(eps_list), lams, lam0, slopes, rich, order,
                     bool(curv > nonlinear_tol), curv)
