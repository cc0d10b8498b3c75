"""Acceptance suite: one test per criterion, backed by a single
`isolab verify-all --seed 0` run (which repeats itself for the determinism
criterion).  Prints one PASS/FAIL line per criterion.

    python3 tests/test_acceptance.py      # lines only
    pytest -v tests/test_acceptance.py    # lines in the terminal summary
"""
import json
import re
import subprocess
import sys
import warnings
from pathlib import Path

import pytest

SEED = 0
IDS = list(range(1, 11))
LINE = re.compile(r"^\[(PASS|FAIL|WARN)\] criterion\s+(\d+) ")


def run_verify_all(out):
    cmd = [sys.executable, "-m", "isolab", "verify-all", "--seed", str(SEED), "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    lines = {int(m.group(2)): ln for ln in proc.stdout.splitlines() if (m := LINE.match(ln))}
    report = out / "report.json"
    crit = json.loads(report.read_text())["results"]["criteria"] if report.exists() else {}
    return proc, lines, crit


@pytest.fixture(scope="module")
def suite(tmp_path_factory, request):
    out = tmp_path_factory.mktemp("verify_all")
    proc, lines, crit = run_verify_all(out)
    request.config.acceptance_lines = [lines.get(i, f"[FAIL] criterion {i:2d}: no result") for i in IDS]
    return {"proc": proc, "lines": lines, "criteria": crit, "out": out}


@pytest.mark.parametrize("num", IDS)
def test_criterion(suite, num):
    c = suite["criteria"].get(str(num))
    assert c is not None, f"criterion {num} did not run:\n{suite['proc'].stderr[-2000:]}"
    if c["passed"]:
        return
    if c["soft"]:
        dist = (suite["out"] / "payload" / f"criterion_{num:02d}.json").read_text()
        warnings.warn(f"soft criterion {num} below target: {c['detail']}\n{dist[:4000]}")
        return
    pytest.fail(suite["lines"].get(num, c["detail"]))


def test_exit_code(suite):
    hard_ok = all(c["passed"] or c["soft"] for c in suite["criteria"].values())
    assert len(suite["criteria"]) == len(IDS)
    assert suite["proc"].returncode == (0 if hard_ok else 1)


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        proc, lines, crit = run_verify_all(Path(d))
        for i in IDS:
            print(lines.get(i, f"[FAIL] criterion {i:2d}: no result"))
        sys.exit(proc.returncode)
