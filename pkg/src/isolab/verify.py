"""The acceptance suite as library code, shared by `isolab verify-all` and
tests/test_acceptance.py.  Each criterion returns a Result whose `data` is a
deterministic payload (no timings)."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jn_zeros

from .billiards import dichotomy_check, random_rays, trace
from .billiards.orbits import compare_spectra, mirror_gradient, pair_length_spectra
from .geometry import BumpSpec, build_domain, build_ellipse, disk, make_pair, running_example
from .perturbation import (PerturbationSpec, SegmentPair, certify, evenness_defect, evenness_error,
                           fd_rate_check, genericity_scan, hadamard_rate)
from .spectral import fd_oracle, find_eigs, ground_state, normal_trace


@dataclass
class Result:
    id: int
    name: str
    passed: bool
    value: object
    threshold: object
    detail: str = ""
    soft: bool = False
    data: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def line(self):
        tag = "PASS" if self.passed else ("WARN" if self.soft else "FAIL")
        return f"[{tag}] criterion {self.id:2d} {self.name}: {self.detail} ({self.runtime:.1f} s)"


def _control_pair(pair):
    B1 = pair.omega1.outer_bumps[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_pair(pair.ellipse, B1, B1.mirrored(), pair.omega1.focal_bumps)


class Context:
    """Shared inputs and memoized base-domain solves for one suite run."""

    def __init__(self, seed=0, pair=None):
        self.seed = int(seed)
        self.pair = pair or running_example()
        om = self.pair.omega1
        self.base = build_domain(om.ellipse, om.outer_bumps, (), om.corner_rounding, om.clearance)
        self.f = PerturbationSpec.unit(om.focal_bumps, 1e-3 * om.ellipse.b)
        self._gs = {}

    def ground(self, domain, level=0):
        key = (domain, level)
        if key not in self._gs:
            hint = self._gs[(domain, 0)].k if level and (domain, 0) in self._gs else None
            if hint is None and level:
                hint = self.ground(domain, 0).k
            self._gs[key] = ground_state(domain, check_level=False, k_hint=hint, level=level)
        return self._gs[key]

    def trace(self, domain, level=0):
        return normal_trace(self.ground(domain, level))


CRITERIA = {}


def criterion(num, name, soft=False):
    def deco(fn):
        def run(ctx):
            t0 = time.perf_counter()
            r = fn(ctx)
            r.id, r.name, r.soft = num, name, soft
            r.runtime = time.perf_counter() - t0
            return r
        CRITERIA[num] = run
        return run
    return deco


@criterion(1, "disk spectral oracle")
def c1(ctx):
    t0 = time.perf_counter()
    pairs = find_eigs(disk(), 2.0, 6.0, n_scan=80)
    bars = [p.error for p in pairs][:4]
    dt = time.perf_counter() - t0
    ref = sorted([jn_zeros(0, 2)[0] ** 2, jn_zeros(1, 1)[0] ** 2, jn_zeros(2, 1)[0] ** 2, jn_zeros(0, 2)[1] ** 2])
    lams = [p.lam for p in pairs][:4]
    if len(lams) < 4:
        return Result(0, "", False, None, 1e-6, f"found only {len(lams)} eigenvalues")
    err = max(abs(l - r) / r for l, r in zip(lams, ref))
    ok = err <= 1e-6 and dt <= 60
    return Result(0, "", ok, err, 1e-6, f"max rel err {err:.2e} (<= 1e-6), solve with error bars {dt:.1f} s (<= 60 s)",
                  data={"lambda": lams, "reference": ref, "multiplicity": [p.multiplicity for p in pairs][:4],
                        "error_bar": bars})


@criterion(2, "cross-method band (MFS vs FD)")
def c2(ctx):
    t0 = time.perf_counter()
    om = ctx.pair.omega1
    k_fk = 2.404825557695773 * math.sqrt(math.pi / om.boundary.area)
    mfs = find_eigs(om, 0.999 * k_fk, 1.6 * k_fk, n_scan=40, method="mfs")
    bar = mfs[0].error if mfs else None
    lam_fd = fd_oracle(om, om.ellipse.a / 400, n_eigs=1)[0]
    dt = time.perf_counter() - t0
    if not mfs:
        return Result(0, "", False, None, 0.03, "MFS found no eigenvalue")
    lam = mfs[0].lam
    rel = abs(lam - lam_fd) / lam
    ok = rel <= 0.03 and dt <= 300
    return Result(0, "", ok, rel, 0.03, f"MFS {lam:.8f} vs FD {lam_fd:.8f}: rel {rel:.2e} (<= 3%), {dt:.1f} s (<= 300 s)",
                  data={"lambda_mfs": lam, "lambda_fd": lam_fd, "mfs_error_bar": bar,
                        "n_src": mfs[0].basis.n_src, "h": om.ellipse.a / 400})


@criterion(3, "integrable billiard conservation")
def c3(ctx):
    ell = build_domain(build_ellipse(2.0, 1.0))
    drifts, abandoned = [], 0
    for ray in random_rays(ell, 100, ctx.seed):
        tr = trace(ell, ray, 1000)
        if tr.abandoned:
            abandoned += 1
            continue
        mu = tr.mu
        drifts.append(float(np.max(np.abs(mu - mu[0]))))
    worst = max(drifts)
    return Result(0, "", worst <= 1e-9, worst, 1e-9,
                  f"max mu drift {worst:.2e} (<= 1e-9) over {len(drifts)} trajectories, {abandoned} abandoned",
                  data={"drift": drifts, "abandoned": abandoned})


@criterion(4, "geodesic dichotomy")
def c4(ctx):
    rep = dichotomy_check(ctx.pair, 1000, 500, ctx.seed)
    ok = rep.violations == 0 and rep.zone_inconsistencies == 0
    return Result(0, "", ok, rep.violations, 0,
                  f"{rep.violations} M+B visitors, {rep.zone_inconsistencies} zone inconsistencies, "
                  f"{rep.abandoned} abandoned", data=rep.to_dict())


@criterion(5, "length-spectrum equality")
def c5(ctx):
    pr = ctx.pair
    S1, S2 = pair_length_spectra(pr, 3 * pr.ellipse.a, 6, 200, ctx.seed)
    rep = compare_spectra(S1, S2)
    grads = [mirror_gradient(o, pr.omega2) for o in S1.orbits if o.crossing == "FocalCrossing"]
    g = max(grads, default=0.0)
    ok = rep.verdict == "PASS" and rep.max_gap <= 1e-8 and g <= 1e-9
    return Result(0, "", ok, rep.max_gap, 1e-8,
                  f"{rep.verdict}, {len(rep.matched)} matched, max gap {rep.max_gap:.1e} (<= 1e-8), "
                  f"{len(grads)} focal-crossing mirrors with max gradient {g:.1e} (<= 1e-9)",
                  data={"omega1": S1.to_dict(), "omega2": S2.to_dict(), "match": rep.to_dict(),
                        "mirror_gradients": grads})


@criterion(6, "Hadamard formula")
def c6(ctx):
    rc = fd_rate_check(ctx.base, ctx.f, base=ctx.ground(ctx.base))
    dp = find_eigs(disk(), 2.0, 2.6, n_scan=20)[0]
    r = hadamard_rate(normal_trace(dp), lambda X: -np.ones(len(X)))
    rel = abs(r / (-2 * dp.lam) - 1)
    ok = rc.deviation <= 0.01 and rel <= 1e-4
    return Result(0, "", ok, rc.deviation, 0.01,
                  f"FD slope deviation {rc.deviation:.2e} (<= 1%), remainder order {rc.remainder_order:.3f}; "
                  f"disk dlam/dR rel err {rel:.1e} (<= 1e-4)",
                  data={"fd": _plain(rc.to_dict()), "disk_rate": r, "disk_lambda": dp.lam})


@criterion(7, "nonisospectrality certificate")
def c7(ctx):
    t0 = time.perf_counter()
    eps = 1e-3 * ctx.pair.ellipse.b
    run = certify(ctx.pair, eps=eps, seed=ctx.seed)
    ctl = certify(_control_pair(ctx.pair), eps=eps, seed=ctx.seed)
    dt = time.perf_counter() - t0
    bars = run.bar1 + run.bar2
    ok_run = run.spectra_differ is True and run.gap > 5 * bars and run.rates_differ is True and run.lengths_match
    ok_ctl = ctl.spectra_differ is False and ctl.gap <= ctl.bar1 + ctl.bar2
    ok = ok_run and ok_ctl and dt <= 600
    return Result(0, "", ok, run.gap / bars if bars else math.inf, 5,
                  f"running gap {run.gap:.3e} vs 5 x bars {5 * bars:.1e}, rates_differ={run.rates_differ}; "
                  f"control gap {ctl.gap:.1e} vs bars {ctl.bar1 + ctl.bar2:.1e}; {dt:.0f} s (<= 600 s)",
                  data={"running": run.to_dict(timing=False), "control": ctl.to_dict(timing=False)})


@criterion(8, "evenness signal")
def c8(ctx):
    ell = ctx.pair.ellipse
    seg = SegmentPair(0.1 * ell.c, 0.9 * ell.c)
    g0 = ctx.ground(ctx.base)
    tr, fine = ctx.trace(ctx.base), ctx.trace(ctx.base, 1)
    d = evenness_defect(tr, seg)
    err = evenness_error(tr, fine, seg) + 2 * g0.moler_payne
    B1 = ctx.base.outer_bumps[0]
    sym = build_domain(ell, (B1, B1.mirrored()), (), ctx.base.corner_rounding, ctx.base.clearance)
    ds = evenness_defect(ctx.trace(sym), seg)
    ok = d > 10 * err and ds <= 1e-6
    return Result(0, "", ok, d / err, 10, f"defect {d:.3e} vs 10 x error {10 * err:.1e}; symmetric control {ds:.1e} (<= 1e-6)",
                  data={"defect": d, "error": err, "symmetric_defect": ds, "segment": [seg.x1, seg.x2]})


@criterion(9, "genericity proxy", soft=True)
def c9(ctx):
    rep = genericity_scan(ctx.base, 100, ctx.seed, trace=ctx.trace(ctx.base), fine=ctx.trace(ctx.base, 1),
                          rel_floor=ctx.ground(ctx.base).moler_payne)
    fr = rep["fraction"]
    return Result(0, "", fr >= 0.9, fr, 0.9, f"fraction separated {fr:.2f} (>= 0.9); rel diff quantiles "
                  + ", ".join(f"{k}:{v:.1e}" for k, v in rep["rel_diff_quantiles"].items()), data=rep)


def _plain(obj):
    """numpy scalars and arrays to Python types, recursively."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def run_suite(seed=0, ids=None, progress=None, pair=None):
    ctx = Context(seed, pair)
    out = []
    for num in sorted(CRITERIA):
        if ids is not None and num not in ids:
            continue
        r = CRITERIA[num](ctx)
        r.data = _plain(r.data)
        out.append(r)
        if progress:
            progress(r)
    return out
