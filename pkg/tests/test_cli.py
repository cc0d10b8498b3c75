import json
import math
from pathlib import Path

import pytest

from isolab import cli
from isolab.errors import ParseError, ValidationError

ROOT = Path(__file__).resolve().parents[1]

MINIMAL = """\
domain:
  ellipse: {a: 2.0, b: 1.0}
  focal_bumps:
    - {center: -0.8, half_width: 0.3, depth: 0.25}
"""

PAIR = """\
seed: 4
domain:
  ellipse: {a: 2.0, b: 1.0}
  outer_bumps:
    - {center: -1.85, half_width: 0.06, depth: 0.05}
    - {center: 1.80, half_width: 0.05, depth: 0.07}
  focal_bumps:
    - {center: -0.8, half_width: 0.3, depth: 0.25}
output: {dir: out, format: json}
"""


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_shipped_configs():
    for name in ("running_example.yaml", "dual_control.yaml"):
        cfg = cli.parse_config(ROOT / "configs" / name, subcommand="certify")
        assert cfg.pair is not None and cfg.seed == 0
        assert set(cfg.expect) == {"lengths_match", "spectra_differ", "rates_differ"}


def test_minimal_config(tmp_path):
    cfg = cli.parse_config(write(tmp_path, MINIMAL))
    assert cfg.pair is None and cfg.seed is None
    assert cfg.domain.focal_bumps[0].center == -0.8
    with pytest.raises(ValidationError, match="needs a pair"):
        cli.parse_config(write(tmp_path, MINIMAL), subcommand="certify", seed=0)


def test_seed_required_for_random(tmp_path):
    p = write(tmp_path, PAIR.replace("seed: 4\n", ""))
    cli.parse_config(p, subcommand="perturb-rates")
    with pytest.raises(ValidationError, match="needs a seed"):
        cli.parse_config(p, subcommand="billiard-dichotomy")
    assert cli.parse_config(p, subcommand="billiard-dichotomy", seed=9).seed == 9
    with pytest.raises(ValidationError, match="needs a seed"):
        cli.parse_config(write(tmp_path, PAIR.replace("seed: 4\n", "") + "perturbation: {scan: {n_samples: 5}}\n"))


def test_parse_error_has_position(tmp_path):
    p = write(tmp_path, "domain:\n  ellipse: {a: 2.0, b: 1.0\n bad\n")
    with pytest.raises(ParseError, match=r"run\.yaml:\d+:\d+"):
        cli.parse_config(p)


def test_zone_error_has_line(tmp_path):
    text = PAIR.replace("center: -0.8, half_width: 0.3", "center: 1.6, half_width: 0.3")
    with pytest.raises(ValidationError, match=r"run\.yaml:8: bump .* focal zone"):
        cli.parse_config(write(tmp_path, text))


def test_unknown_section_and_bad_values(tmp_path):
    with pytest.raises(ValidationError, match="unknown section"):
        cli.parse_config(write(tmp_path, PAIR + "extras: 1\n"))
    with pytest.raises(ValidationError, match="must be a number"):
        cli.parse_config(write(tmp_path, PAIR.replace("a: 2.0", "a: two")))
    with pytest.raises(ValidationError):
        cli.parse_config(write(tmp_path, PAIR.replace("a: 2.0", "a: 0.5")))
    with pytest.raises(ValidationError, match="seed"):
        cli.parse_config(write(tmp_path, PAIR.replace("seed: 4", "seed: -1")))
    with pytest.raises(ParseError):
        cli.parse_config(tmp_path / "missing.yaml")


def test_dumps_canonical():
    s = cli.dumps({"b": 0.1, "a": [1, float("nan")], "c": math.inf})
    assert json.loads(s) == {"a": [1, None], "b": 0.1, "c": None}
    assert s.index('"a"') < s.index('"b"')
    assert cli._cell(0.1) == "0.10000000000000001"
    assert float(cli._cell(1 / 3)) == 1 / 3


def test_emit_plotdata(tmp_path):
    rep = cli.RunReport("scan", {}, 0)
    rep.table("full", ("x", "y"), [(0.1, 2), (0.2, 3)])
    rep.table("empty", ("x",), [])
    files = cli.emit_plotdata(rep, tmp_path / "o", "csv")
    assert files == ["full.csv"]
    assert (tmp_path / "o" / "full.csv").read_text() == "x,y\n0.10000000000000001,2\n0.20000000000000001,3\n"
    assert any("empty" in n for n in rep.notes)


def test_pair_make_end_to_end(tmp_path):
    p = write(tmp_path, PAIR)
    assert cli.main(["pair-make", "--config", str(p)]) == 0
    out = tmp_path / "out"
    data = json.loads((out / "data.json").read_text())
    assert data["results"]["status"] == "ok"
    assert {"boundary_omega1.json", "boundary_omega2.json", "report.json"} <= {f.name for f in out.iterdir()}
    first = (out / "data.json").read_bytes()
    assert cli.main(["pair-make", "--config", str(p), "--format", "csv"]) == 0
    assert (out / "data.json").read_bytes() == first


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["pair-make", "--config", str(tmp_path / "nope.yaml")]) == 1
    assert "error" in capsys.readouterr().err
    assert cli.main(["certify", "--config", str(write(tmp_path, MINIMAL)), "--seed", "0"]) == 1
    assert cli.main(["pair-make"]) == 1
    assert cli.main(["verify-all"]) == 1


def test_schema_aliases(tmp_path):
    text = PAIR.replace("seed: 4\n", "") + "spectral: {n_scan: 30}\nperturbation: {epsilon: 0.002, seed: 5}\n"
    cfg = cli.parse_config(write(tmp_path, text), subcommand="scan")
    assert cfg.spectrum == {"n_scan": 30}
    assert cfg.perturbation["eps"] == 0.002
    assert cfg.seed == 5
    clash = text.replace("spectral:", "spectrum: {}\nspectral:")
    with pytest.raises(ValidationError, match="not both"):
        cli.parse_config(write(tmp_path, clash))
    with pytest.raises(ValidationError, match="differ"):
        cli.parse_config(write(tmp_path, text + "billiards: {seed: 6}\n"))
