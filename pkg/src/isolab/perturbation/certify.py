"""Nonisospectrality certificate for a mushroom pair, and the genericity scan."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..billiards.dynamics import n_workers
from ..billiards.orbits import compare_spectra, pair_length_spectra
from ..errors import Inconclusive
from ..geometry import BumpSpec, MushroomPair, build_domain
from ..spectral import ground_state, normal_trace
from .hadamard import PerturbationSpec, hadamard_rate, quadrature_error

SAFETY = 5.0


def _verdict(gap, err, safety):
    """True above safety*err, False at or below err, None in between."""
    if gap > safety * err:
        return True
    if gap <= err:
        return False
    return None


@dataclass
class RateEstimate:
    d1: float
    d2: float
    error: float
    parts: dict = field(default_factory=dict)


def rate_estimate(trace, f, fine=None, rel_floor=0.0):
    """Pair rates with an error bar: quadrature refinement, discretization
    level change (when a finer trace is given) and a relative floor."""
    fr = f.reflect()
    d1, d2 = hadamard_rate(trace, f), hadamard_rate(trace, fr)
    parts = {"quadrature": quadrature_error(trace, f) + quadrature_error(trace, fr),
             "floor": rel_floor * max(abs(d1), abs(d2))}
    if fine is not None:
        parts["level"] = abs(hadamard_rate(fine, f) - d1) + abs(hadamard_rate(fine, fr) - d2)
    return RateEstimate(d1, d2, float(sum(parts.values())), parts)


@dataclass
class Certificate:
    lam1: float
    lam2: float
    bar1: float
    bar2: float
    d1: float
    d2: float
    rate_error: float
    evenness_defect: float
    lengths: dict
    lengths_match: bool
    spectra_differ: object
    rates_differ: object
    thresholds: dict
    inputs: dict
    timing: dict = field(default_factory=dict)

    @property
    def gap(self):
        return abs(self.lam1 - self.lam2)

    @property
    def inconclusive(self):
        return self.spectra_differ is None or self.rates_differ is None

    @property
    def status(self):
        if self.inconclusive:
            return "INCONCLUSIVE"
        if self.lengths_match and self.spectra_differ and self.rates_differ:
            return "NONISOSPECTRAL"
        return "NOT-SEPARATED"

    def to_dict(self, timing=True):
        d = asdict(self)
        if not timing:
            d.pop("timing")
        d["gap"] = self.gap
        d["status"] = self.status
        return d


def _small_pair(pair, f, eps):
    om = pair.omega1
    M = f.amplitude(eps)
    base = build_domain(om.ellipse, om.outer_bumps, (), om.corner_rounding, om.clearance)
    o1 = build_domain(om.ellipse, om.outer_bumps, M, om.corner_rounding, om.clearance)
    o2 = build_domain(om.ellipse, om.outer_bumps, f.reflect().amplitude(eps), om.corner_rounding, om.clearance)
    return base, o1, o2


def certify(pair, eps=None, L_max=None, n_max=6, n_starts=200, seed=0, safety_factor=SAFETY,
            match_tol=1e-8, segment=None, strict=False):
    """Length-spectrum match, ground-state gap and Hadamard rates for a pair.

    f is the focal bump shape of the pair normalized to unit depth.  With eps
    given, the certified pair is Omega + eps f and Omega + eps f~ (the pair's
    own M is used only for its shape); with eps None the pair is taken as is.
    """
    from .hadamard import SegmentPair, evenness_defect
    t0 = time.perf_counter()
    timing = {}
    ell = pair.ellipse
    L_max = 3 * ell.a if L_max is None else L_max
    f = PerturbationSpec.unit(pair.omega1.focal_bumps, eps if eps is not None else 1e-3 * ell.b)
    base, o1, o2 = _small_pair(pair, f, eps) if eps is not None else (
        build_domain(ell, pair.omega1.outer_bumps, (), pair.omega1.corner_rounding, pair.omega1.clearance),
        pair.omega1, pair.omega2)

    cpair = MushroomPair(o1, o2, pair.b_dual, pair.m_self_dual) if eps is not None else pair

    def lengths():
        t = time.perf_counter()
        S1, S2 = pair_length_spectra(cpair, L_max, n_max, n_starts, seed)
        timing["lengths"] = time.perf_counter() - t
        return S1, compare_spectra(S1, S2, match_tol)

    def eig(d):
        t = time.perf_counter()
        p = ground_state(d)
        timing.setdefault("eigenvalues", []).append(time.perf_counter() - t)
        return p

    # the orbit search is mostly interpreter work, the eigen solves mostly
    # LAPACK, so they overlap well
    with ThreadPoolExecutor(3) as ex:
        fl = ex.submit(lengths)
        fe = [ex.submit(eig, d) for d in (o1, o2)]
        p1, p2 = [q.result() for q in fe]
        t1 = time.perf_counter()
        # a small-amplitude pair is a perturbation of the base: its ground
        # state seeds the base solve
        hint = p1.k if eps is not None else None
        gb = ground_state(base, check_level=False, k_hint=hint)
        ff = ex.submit(ground_state, base, False, gb.k, 1)
        tr = normal_trace(gb)
        fine = normal_trace(ff.result())
        timing["rates"] = time.perf_counter() - t1
        S1, rep = fl.result()
    est = rate_estimate(tr, f, fine, rel_floor=gb.moler_payne)
    seg = segment or SegmentPair(0.1 * ell.c, 0.9 * ell.c)
    defect = evenness_defect(tr, seg)

    bars = p1.error + p2.error
    gap = abs(p1.lam - p2.lam)
    cert = Certificate(
        lam1=float(p1.lam), lam2=float(p2.lam), bar1=float(p1.error), bar2=float(p2.error),
        d1=float(est.d1), d2=float(est.d2), rate_error=float(est.error), evenness_defect=float(defect),
        lengths=rep.to_dict(), lengths_match=rep.verdict == "PASS",
        spectra_differ=_verdict(gap, bars, safety_factor),
        rates_differ=_verdict(abs(est.d1 - est.d2), est.error, safety_factor),
        thresholds={"safety_factor": safety_factor, "spectra": safety_factor * bars,
                    "rates": safety_factor * est.error, "match_tol": match_tol},
        inputs={"omega1": o1.to_dict(), "omega2": o2.to_dict(), "f": f.to_dict(),
                "eps": eps, "caps": S1.caps, "segment": [seg.x1, seg.x2],
                "rate_error_parts": est.parts},
        timing=timing)
    timing["total"] = time.perf_counter() - t0
    if strict and cert.inconclusive:
        raise Inconclusive(f"error bars overlap the gap: {cert.to_dict(False)}")
    return cert


# ---------------------------------------------------------------- genericity

def sample_bumps(ellipse, n, seed, clearance=None, w_range=(0.02, 0.5), h_range=(0.01, 0.3)):
    """Random admissible M bumps: centre uniform in the left focal half-zone,
    width and depth log-uniform."""
    c = ellipse.c
    delta = 0.005 * ellipse.a if clearance is None else clearance
    out = []
    for ss in np.random.SeedSequence(seed).spawn(n):
        rng = np.random.default_rng(ss)
        x = rng.uniform(-c + delta + w_range[0], 0.0)
        wmax = min(w_range[1], x + c - delta)
        w = math.exp(rng.uniform(math.log(w_range[0]), math.log(wmax)))
        h = ellipse.b * math.exp(rng.uniform(*np.log(h_range)))
        out.append(BumpSpec(x, w, h))
    return out


def genericity_scan(omega, n_samples=100, seed=0, trace=None, fine=None, safety_factor=SAFETY, rel_floor=None):
    """|d1 - d2| for random M bumps against per-sample rate error bars."""
    rep = {"n_samples": n_samples, "seed": seed, "safety_factor": safety_factor,
           "samples": [], "fraction": float("nan")}
    if n_samples == 0:
        return rep
    if trace is None:
        gp = ground_state(omega, check_level=False)
        trace = normal_trace(gp)
        rel_floor = gp.moler_payne if rel_floor is None else rel_floor
    floor = 1e-13 if rel_floor is None else rel_floor
    bumps = sample_bumps(omega.ellipse, n_samples, seed, omega.clearance)

    def one(bm):
        est = rate_estimate(trace, PerturbationSpec((bm,)), fine, rel_floor=floor)
        diff = abs(est.d1 - est.d2)
        return {"center": bm.center, "half_width": bm.half_width, "depth": bm.depth,
                "d1": est.d1, "d2": est.d2, "diff": diff, "error": est.error,
                "separated": bool(diff > safety_factor * est.error)}

    with ThreadPoolExecutor(n_workers()) as ex:
        rep["samples"] = list(ex.map(one, bumps))
    sep = [s["separated"] for s in rep["samples"]]
    rep["fraction"] = float(np.mean(sep))
    rel = np.array([s["diff"] / max(abs(s["d1"]), abs(s["d2"])) for s in rep["samples"]])
    rep["rel_diff_quantiles"] = {str(q): float(np.quantile(rel, q)) for q in (0.0, 0.1, 0.5, 0.9, 1.0)}
    return rep
