"""Command-line front end.

    isolab <subcommand> --config run.yaml [--out DIR] [--format csv|json] [--seed N]

Exit codes: 0 complete/PASS, 1 error or failed expectation, 2 inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import Inconclusive, IsolabError, OverlapViolation, ParseError, ValidationError, ZoneViolation
from .geometry import BumpSpec, build_domain, build_ellipse, make_pair, zone_of

SUBCOMMANDS = ("pair-make", "billiard-trace", "billiard-lengths", "billiard-dichotomy", "spectrum-eigs",
               "spectrum-trace", "perturb-rates", "perturb-check", "certify", "scan", "verify-all")
RANDOMIZED = {"billiard-trace", "billiard-lengths", "billiard-dichotomy", "certify", "scan", "verify-all"}
SECTIONS = {"name", "domain", "seed", "billiards", "spectrum", "spectral", "perturbation", "output", "expect"}
BUMP_KEYS = {"center", "half_width", "depth"}
TABLE_SECTIONS = ("billiards", "spectrum", "perturbation")


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    path: str
    raw: dict
    pair: object
    domain: object
    seed: object
    out_dir: str
    fmt: str
    billiards: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    perturbation: dict = field(default_factory=dict)
    expect: dict = field(default_factory=dict)

    @property
    def base(self):
        om = self.domain
        return build_domain(om.ellipse, om.outer_bumps, (), om.corner_rounding, om.clearance)


def _node_get(node, key):
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            if k.value == key:
                return v
    return None


def _line(node):
    return node.start_mark.line + 1 if node is not None else 0


def _where(path, node):
    return f"{path}:{_line(node)}"


def _num(path, node, value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{_where(path, node)}: {what} must be a number, got {value!r}")
    return float(value)


def _bumps(path, dnode, d, key):
    lst = d.get(key) or []
    lnode = _node_get(dnode, key)
    if not isinstance(lst, list):
        raise ValidationError(f"{_where(path, lnode)}: {key} must be a list of bumps")
    out = []
    for j, e in enumerate(lst):
        n = lnode.value[j]
        if not isinstance(e, dict) or set(e) != BUMP_KEYS:
            raise ValidationError(f"{_where(path, n)}: {key}[{j}] needs exactly the keys {sorted(BUMP_KEYS)}")
        try:
            bm = BumpSpec(*(_num(path, _node_get(n, k), e[k], f"{key}[{j}].{k}") for k in ("center", "half_width", "depth")))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{_where(path, n)}: {key}[{j}]: {exc}") from None
        out.append((bm, n))
    return out


def parse_config(path, seed=None, subcommand=None, out_dir=None, fmt=None):
    """Read and validate a YAML run configuration.  Geometry is checked
    eagerly; errors carry file:line of the offending entry."""
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"{path}: no such file")
    text = p.read_text()
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ParseError(f"{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}:1: top level must be a mapping")
    for k in raw:
        if k not in SECTIONS:
            raise ValidationError(f"{_where(path, _node_get(root, k))}: unknown section {k!r}")
    dnode = _node_get(root, "domain")
    d = raw.get("domain")
    if not isinstance(d, dict):
        raise ValidationError(f"{_where(path, dnode)}: a 'domain' mapping is required")
    enode = _node_get(dnode, "ellipse")
    e = d.get("ellipse") or {}
    try:
        ell = build_ellipse(_num(path, _node_get(enode, "a"), e.get("a"), "ellipse.a"),
                            _num(path, _node_get(enode, "b"), e.get("b"), "ellipse.b"))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{_where(path, enode)}: {exc}") from None
    rounding = float(d.get("corner_rounding", 0.0))
    outer = _bumps(path, dnode, d, "outer_bumps")
    focal = _bumps(path, dnode, d, "focal_bumps")
    clearance = 0.005 * ell.a
    for (bm, n), zone in [(o, "outer") for o in outer] + [(f, "focal") for f in focal]:
        z = zone_of(bm, ell, clearance)
        ok = z in ("left-outer", "right-outer") if zone == "outer" else z == "focal"
        if not ok:
            raise ValidationError(f"{_where(path, n)}: bump {bm} is not inside the {zone} zone "
                                  f"(|x| {'>' if zone == 'outer' else '<'} c = {ell.c:.6g}, clearance {clearance:.4g})")
    pair = None
    try:
        domain = build_domain(ell, [b for b, _ in outer], [b for b, _ in focal], rounding)
        if len(outer) == 2 and focal:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                pair = make_pair(ell, outer[0][0], outer[1][0], tuple(b for b, _ in focal), rounding)
    except (ZoneViolation, OverlapViolation, ValueError) as exc:
        raise ValidationError(f"{_where(path, dnode)}: {exc}") from None
    if pair is None and subcommand not in (None, "pair-make", "billiard-trace", "spectrum-eigs", "spectrum-trace"):
        raise ValidationError(f"{_where(path, dnode)}: {subcommand} needs a pair "
                              "(two outer bumps and at least one focal bump)")
    if seed is None:
        seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ValidationError(f"{_where(path, _node_get(root, 'seed'))}: seed must be a nonnegative integer")
    if seed is None:
        # block-level seeds are accepted; they must agree
        blk = {(raw.get(s) or {}).get("seed") for s in ("billiards", "perturbation") if isinstance(raw.get(s), dict)}
        blk.discard(None)
        if len(blk) > 1:
            raise ValidationError(f"{path}: billiards.seed and perturbation.seed differ; set one top-level seed")
        seed = blk.pop() if blk else None
    wants_random = subcommand in RANDOMIZED or "scan" in (raw.get("perturbation") or {})
    if seed is None and wants_random:
        what = subcommand or "genericity scan"
        raise ValidationError(f"{path}: {what} is randomized and needs a seed (config 'seed' or --seed)")
    for sec in TABLE_SECTIONS + ("spectral", "expect", "output"):
        if sec in raw and not isinstance(raw[sec], dict):
            raise ValidationError(f"{_where(path, _node_get(root, sec))}: section {sec!r} must be a mapping")
    if "spectral" in raw and "spectrum" in raw:
        raise ValidationError(f"{_where(path, _node_get(root, 'spectral'))}: give either 'spectrum' or 'spectral', not both")
    spec = dict(raw.get("spectrum") or raw.get("spectral") or {})
    pert = dict(raw.get("perturbation") or {})
    if "epsilon" in pert:
        if "eps" in pert:
            raise ValidationError(f"{_where(path, _node_get(root, 'perturbation'))}: give either 'eps' or 'epsilon'")
        pert["eps"] = pert.pop("epsilon")
    outp = raw.get("output") or {}
    fmt = fmt or outp.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ValidationError(f"{_where(path, _node_get(root, 'output'))}: format must be csv or json")
    out = out_dir or outp.get("dir") or "isolab-out"
    if not os.path.isabs(out) and out_dir is None:
        out = str(p.parent / out)
    return RunConfig(str(p), raw, pair, domain, seed, out, fmt, dict(raw.get("billiards") or {}),
                     spec, pert, dict(raw.get("expect") or {}))


# ---------------------------------------------------------------- output

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


@dataclass
class RunReport:
    subcommand: str
    config: dict
    seed: object
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    certificate: dict = None
    timing: dict = field(default_factory=dict)
    version: str = __version__
    exit_status: int = 0
    notes: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def table(self, name, columns, rows):
        self.tables[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def payload(self):
        return {"subcommand": self.subcommand, "seed": self.seed, "results": self.results,
                "certificate": self.certificate}

    def to_dict(self):
        return {"tool": "isolab", "version": self.version, "subcommand": self.subcommand,
                "config": self.config, "seed": self.seed, "results": self.results,
                "certificate": self.certificate, "timing": self.timing, "exit_status": self.exit_status,
                "notes": self.notes, "files": self.files}


def emit_plotdata(report, out_dir, fmt="csv"):
    """One file per nonempty table; empty tables are noted in the report."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, t in sorted(report.tables.items()):
            if not t["rows"]:
                report.notes.append(f"table {name} is empty; no file written")
                continue
            if fmt == "csv":
                fn = out / f"{name}.csv"
                with open(fn, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(t["columns"])
                    for r in t["rows"]:
                        w.writerow([_cell(v) for v in r])
            else:
                fn = out / f"{name}.json"
                fn.write_text(dumps(t))
            report.files.append(fn.name)
    except OSError as exc:
        raise IsolabError(f"cannot write plot data to {out}: {exc}") from None
    return report.files


def write_report(report, out_dir, fmt):
    emit_plotdata(report, out_dir, fmt)
    out = Path(out_dir)
    (out / "data.json").write_text(dumps(report.payload()))
    (out / "report.json").write_text(dumps(report.to_dict()))


# ---------------------------------------------------------------- subcommands

def _boundary_rows(domain, n=4096):
    bd = domain.boundary
    s = np.arange(n) * bd.perimeter / n
    X = bd.evaluate(s)[0]
    return [(s[i], X[i, 0], X[i, 1]) for i in range(n)]


def _pick_domain(cfg, which):
    if which == "base":
        return cfg.base
    if which == "omega1":
        return cfg.domain
    if which == "omega2" and cfg.pair is not None:
        return cfg.pair.omega2
    raise ValidationError(f"unknown or unavailable domain {which!r} (omega1, omega2, base)")


def cmd_pair_make(cfg, rep):
    pr = cfg.pair
    if pr is None:
        rep.results = {"status": "single-domain", "omega": cfg.domain.to_dict(),
                       "area": cfg.domain.boundary.area, "perimeter": cfg.domain.perimeter}
        rep.table("boundary_omega", ("s", "x", "y"), _boundary_rows(cfg.domain))
        return
    rep.results = {"status": pr.status, "b_dual": pr.b_dual, "m_self_dual": pr.m_self_dual,
                   "omega1": pr.omega1.to_dict(), "omega2": pr.omega2.to_dict(),
                   "area": pr.omega1.boundary.area, "perimeter": pr.omega1.perimeter}
    for k, om in (("omega1", pr.omega1), ("omega2", pr.omega2)):
        rep.table(f"boundary_{k}", ("s", "x", "y"), _boundary_rows(om))


def cmd_billiard_trace(cfg, rep):
    from .billiards import random_rays, trace
    n_traj = int(cfg.billiards.get("n_traj", 10))
    n_b = int(cfg.billiards.get("n_bounces", 100))
    dom = _pick_domain(cfg, cfg.billiards.get("domain", "omega1"))
    rows, status = [], []
    for j, ray in enumerate(random_rays(dom, n_traj, cfg.seed)):
        tr = trace(dom, ray, n_b)
        status.append(tr.status)
        rows += [(j,) + r for r in tr.rows()]
    rep.results = {"n_traj": n_traj, "n_bounces": n_b, "status": status}
    rep.table("trajectories", ("traj", "bounce", "s", "x", "y", "dx", "dy", "mu", "zone"), rows)


def cmd_billiard_lengths(cfg, rep):
    from .billiards.orbits import compare_spectra, pair_length_spectra
    b = cfg.billiards
    L_max = float(b.get("L_max", 3 * cfg.pair.ellipse.a))
    S1, S2 = pair_length_spectra(cfg.pair, L_max, int(b.get("n_max", 6)), int(b.get("n_starts", 200)), cfg.seed)
    m = compare_spectra(S1, S2, float(b.get("match_tol", 1e-8)))
    rep.results = {"omega1": S1.to_dict(), "omega2": S2.to_dict(), "match": m.to_dict()}
    for k, S in (("omega1", S1), ("omega2", S2)):
        rep.table(f"lengths_{k}", ("length", "multiplicity", "n", "class"), S.rows())
    if m.verdict != "PASS":
        rep.exit_status = 1


def cmd_billiard_dichotomy(cfg, rep):
    from .billiards import dichotomy_check
    b = cfg.billiards
    r = dichotomy_check(cfg.pair, int(b.get("n_traj", 1000)), int(b.get("n_bounces", 500)), cfg.seed)
    rep.results = r.to_dict()
    if r.verdict != "PASS":
        rep.exit_status = 1


def _k_range(cfg, dom):
    s = cfg.spectrum
    k_fk = 2.404825557695773 * math.sqrt(math.pi / dom.boundary.area)
    return float(s.get("k_min", 0.999 * k_fk)), float(s.get("k_max", 1.6 * k_fk))


def cmd_spectrum_eigs(cfg, rep):
    from .spectral import find_eigs, sweep
    s = cfg.spectrum
    dom = _pick_domain(cfg, s.get("domain", "omega1"))
    k0, k1 = _k_range(cfg, dom)
    n_scan = int(s.get("n_scan", 60))
    method = s.get("method", "bie")
    kw = {k: int(s[k]) for k in ("n_src", "n_col") if method == "mfs" and k in s}
    pairs = find_eigs(dom, k0, k1, n_scan=n_scan, method=method, **kw)
    rep.table("eigenvalues", ("index", "lambda", "k", "error", "method", "multiplicity"),
              [p.to_row() + (getattr(p, "multiplicity", 1),) for p in pairs])
    if method == "bie":
        ks, vals = sweep(dom, k0, k1, n_scan)
        rep.table("indicator_sweep", ("k", "indicator"), zip(ks, vals))
    rep.results = {"k_range": [k0, k1], "n_scan": n_scan, "method": method,
                   "eigenvalues": [{"lambda": p.lam, "error": p.error} for p in pairs]}


def cmd_spectrum_trace(cfg, rep):
    from .spectral import ground_state, normal_trace
    dom = _pick_domain(cfg, cfg.spectrum.get("domain", "base"))
    gp = ground_state(dom)
    tr = normal_trace(gp, int(cfg.spectrum.get("n_nodes", 64)))
    rep.table("normal_trace", ("s", "x", "y", "dpsi_dnu", "weight"), tr.rows())
    rep.results = {"lambda": gp.lam, "error": gp.error, "rellich": tr.rellich,
                   "normalization_defect": gp.normalization_defect}


def _f(cfg):
    from .perturbation import PerturbationSpec
    return PerturbationSpec.unit(cfg.pair.omega1.focal_bumps,
                                 float(cfg.perturbation.get("eps", 1e-3 * cfg.pair.ellipse.b)))


def _segment(cfg):
    from .perturbation import SegmentPair
    c = cfg.pair.ellipse.c
    x1, x2 = cfg.perturbation.get("segment", [0.1 * c, 0.9 * c])
    return SegmentPair(float(x1), float(x2))


def cmd_perturb_rates(cfg, rep):
    from .perturbation import base_trace, evenness_defect, pair_rates, rate_estimate
    tr, gp = base_trace(cfg.base)
    f = _f(cfg)
    d1, d2 = pair_rates(cfg.base, f, tr)
    est = rate_estimate(tr, f, rel_floor=gp.moler_payne)
    seg = _segment(cfg)
    seg.check(cfg.pair.ellipse)
    n = int(cfg.perturbation.get("n_samples", 64))
    rep.results = {"lambda0": gp.lam, "d1": d1, "d2": d2, "rate_error": est.error,
                   "relative_difference": abs(d1 - d2) / max(abs(d1), abs(d2)),
                   "evenness_defect": evenness_defect(tr, seg, n), "segment": [seg.x1, seg.x2],
                   "f": f.to_dict()}
    x = np.linspace(seg.x1, seg.x2, 257)
    q, qm = tr.at(0, x) ** 2, tr.at(0, -x) ** 2
    rep.table("evenness", ("x", "q", "q_mirror"), zip(x, q, qm))


def cmd_perturb_check(cfg, rep):
    from .perturbation import fd_rate_check
    eps = cfg.perturbation.get("eps_list")
    rc = fd_rate_check(cfg.base, _f(cfg), [float(e) for e in eps] if eps else None)
    rep.results = rc.to_dict()
    rep.table("fd_slopes", ("eps", "lambda", "slope", "richardson"),
              zip(rc.eps, rc.lams, rc.slopes, rc.richardson))


def _expect(cfg, rep, got):
    bad = {k: (v, got.get(k)) for k, v in cfg.expect.items() if got.get(k) != v}
    rep.results["expectation"] = {"expected": cfg.expect, "mismatch": bad}
    if bad:
        rep.exit_status = 1


def cmd_certify(cfg, rep):
    from .perturbation import certify
    p = cfg.perturbation
    b = cfg.billiards
    eps = p.get("eps", 1e-3 * cfg.pair.ellipse.b)
    cert = certify(cfg.pair, eps=None if eps is None else float(eps),
                   L_max=float(b.get("L_max", 3 * cfg.pair.ellipse.a)), n_max=int(b.get("n_max", 6)),
                   n_starts=int(b.get("n_starts", 200)), seed=cfg.seed,
                   safety_factor=float(p.get("safety_factor", 5.0)), segment=_segment(cfg))
    rep.certificate = cert.to_dict(timing=False)
    rep.timing.update(cert.timing)
    verdicts = {"lengths_match": cert.lengths_match, "spectra_differ": cert.spectra_differ,
                "rates_differ": cert.rates_differ}
    rep.results = {"status": cert.status, "verdicts": verdicts}
    if cert.inconclusive:
        rep.exit_status = 2
    elif cfg.expect:
        _expect(cfg, rep, verdicts)


def cmd_scan(cfg, rep):
    from .perturbation import genericity_scan
    sc = cfg.perturbation.get("scan") or {}
    r = genericity_scan(cfg.base, int(sc.get("n_samples", 100)), cfg.seed,
                        safety_factor=float(cfg.perturbation.get("safety_factor", 5.0)))
    samples = r.pop("samples")
    rep.results = r
    cols = ("center", "half_width", "depth", "d1", "d2", "diff", "error", "separated")
    rep.table("genericity", cols, [[s[c] for c in cols] for s in samples])
    if r["n_samples"] and r["fraction"] < float(sc.get("min_fraction", 0.9)):
        rep.notes.append(f"fraction {r['fraction']:.3f} below {sc.get('min_fraction', 0.9)} (soft criterion)")


def _payload_files(d):
    return sorted(p.name for p in Path(d).iterdir() if p.name != "report.json")


def cmd_verify_all(cfg, rep, single=False, out_dir=None):
    """Criteria 1-9 in process; criterion 10 repeats the suite in a fresh
    interpreter and compares the payload files byte for byte."""
    from .verify import Result, run_suite
    pay = Path(out_dir) / "payload"
    pay.mkdir(parents=True, exist_ok=True)
    results = run_suite(cfg.seed, pair=cfg.pair, progress=lambda r: print(r.line, flush=True))
    for r in results:
        (pay / f"criterion_{r.id:02d}.json").write_text(dumps(r.data))
    if not single:
        rep_dir = Path(out_dir) / "repeat"
        cmd = [sys.executable, "-m", "isolab", "verify-all", "--single", "--out", str(rep_dir),
               "--seed", str(cfg.seed)]
        if cfg.path:
            cmd += ["--config", cfg.path]
        t0 = time.perf_counter()
        proc = subprocess.run(cmd, capture_output=True, text=True)
        other = rep_dir / "payload"
        f1 = _payload_files(pay)
        f2 = _payload_files(other) if other.is_dir() else []
        diff = [f for f in f1 if f not in f2 or (pay / f).read_bytes() != (other / f).read_bytes()]
        ok = proc.returncode in (0, 1) and f1 == f2 and not diff
        results.append(Result(10, "determinism", ok, len(diff), 0,
                              f"{len(f1)} payload files, {len(diff)} differ between two runs with seed {cfg.seed}",
                              runtime=time.perf_counter() - t0))
        print(results[-1].line, flush=True)
    rep.table("acceptance", ("criterion", "name", "passed", "soft", "value", "threshold", "detail"),
              [(r.id, r.name, r.passed, r.soft, r.value, r.threshold, r.detail) for r in results])
    rep.results = {"criteria": {str(r.id): {"passed": r.passed, "soft": r.soft, "detail": r.detail}
                                for r in results}}
    rep.timing.update({f"criterion_{r.id:02d}": r.runtime for r in results})
    if not all(r.passed or r.soft for r in results):
        rep.exit_status = 1


COMMANDS = {
    "pair-make": cmd_pair_make, "billiard-trace": cmd_billiard_trace,
    "billiard-lengths": cmd_billiard_lengths, "billiard-dichotomy": cmd_billiard_dichotomy,
    "spectrum-eigs": cmd_spectrum_eigs, "spectrum-trace": cmd_spectrum_trace,
    "perturb-rates": cmd_perturb_rates, "perturb-check": cmd_perturb_check, "certify": cmd_certify,
    "scan": cmd_scan,
}


def _default_config(seed):
    from .geometry import running_example
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pr = running_example()
    return RunConfig("", {}, pr, pr.omega1, seed, "isolab-out", "csv")


def run(subcommand, cfg, out_dir=None, single=False):
    """Dispatch one subcommand; returns the RunReport (files written)."""
    if subcommand not in SUBCOMMANDS:
        raise ValidationError(f"unknown subcommand {subcommand!r}")
    out_dir = out_dir or cfg.out_dir
    rep = RunReport(subcommand, cfg.raw, cfg.seed)
    t0 = time.perf_counter()
    if subcommand == "verify-all":
        cmd_verify_all(cfg, rep, single, out_dir)
    else:
        COMMANDS[subcommand](cfg, rep)
    rep.timing["total"] = time.perf_counter() - t0
    write_report(rep, out_dir, cfg.fmt)
    return rep


def main(argv=None):
    ap = argparse.ArgumentParser(prog="isolab", description=__doc__.split("\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--format", choices=("csv", "json"), help="plot-data format")
    ap.add_argument("--seed", type=int, help="seed for randomized experiments")
    ap.add_argument("--single", action="store_true", help=argparse.SUPPRESS)
    a = ap.parse_args(argv)
    try:
        if a.config:
            cfg = parse_config(a.config, seed=a.seed, subcommand=a.subcommand, out_dir=a.out, fmt=a.format)
        elif a.subcommand == "verify-all":
            if a.seed is None:
                raise ValidationError("verify-all is randomized and needs --seed (or a config with a seed)")
            cfg = _default_config(a.seed)
            cfg.fmt = a.format or "csv"
        else:
            raise ValidationError(f"{a.subcommand} needs --config")
        rep = run(a.subcommand, cfg, out_dir=a.out or cfg.out_dir, single=a.single)
    except Inconclusive as exc:
        print(f"isolab: inconclusive: {exc}", file=sys.stderr)
        return 2
    except (IsolabError, ValueError, OSError) as exc:
        print(f"isolab: error: {exc}", file=sys.stderr)
        return 1
    if rep.subcommand == "certify":
        print(f"{rep.results['status']}: {json.dumps(rep.results['verdicts'])}")
    print(f"wrote {a.out or cfg.out_dir} (exit {rep.exit_status})")
    return rep.exit_status


if __name__ == "__main__":
    sys.exit(main())
