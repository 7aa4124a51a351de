import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from peierls_lab import cli
from peierls_lab.config import ConfigError, parse_config
from peierls_lab.suites import REGISTRY, list_suites

ROOT = Path(__file__).resolve().parents[1]

EXPECTED = {
    "greens-dalembert", "support-cones", "resolvent", "master-identity", "jacobi-free-field",
    "jacobi-epsilon", "leibniz", "additivity-locality", "cone-counts", "hyperbolicity-domains",
    "bump-partition",
}

SMALL = """
seed = 7
out = "{out}"
[grid]
nt = 24
nx = 24
[metric]
kind = "minkowski"
[lagrangian]
name = "epsilon"
eps = 0.1
[suites]
select = ["cone-counts", "hyperbolicity-domains", "leibniz"]
[suite.cone-counts]
tuples = 200
[suite.leibniz]
n = 16
triples = 4
"""


def test_registry_contents_and_order():
    names = [n for n, _ in list_suites()]
    assert EXPECTED <= set(names)
    assert names == [n for n, _ in list_suites()]
    assert all(desc for _, desc in list_suites())


def test_list_flag(capsys):
    assert cli.main(["--list"]) == 0
    out = capsys.readouterr().out
    for name in EXPECTED:
        assert name in out


def test_console_entry_point_lists_suites():
    res = subprocess.run([sys.executable, "-m", "peierls_lab", "--list"], capture_output=True, text=True, check=True)
    assert "cone-counts" in res.stdout


def _strip_timings(path):
    env = json.loads(path.read_text())
    env.pop("timings")
    return env


def test_runs_are_reproducible(tmp_path, capsys):
    d = tmp_path / "out"
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL.format(out=d.as_posix()))
    outs = []
    for run in ("a", "b"):
        assert cli.main([str(cfg)]) == 0
        outs.append(d.rename(tmp_path / run))
    capsys.readouterr()
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == sorted(p.name for p in outs[1].iterdir())
    assert len(files) == 3
    for name in files:
        a, b = _strip_timings(outs[0] / name), _strip_timings(outs[1] / name)
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
        assert a["schema_version"] == 1 and a["status"] == "pass"
        assert {"suite", "status", "residuals", "config", "seed"} <= set(a)


def test_seed_flag_changes_suite_seed(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL.format(out=(tmp_path / "o").as_posix()))
    assert cli.main([str(cfg), "--suite", "cone-counts", "--seed", "11", "--out", str(tmp_path / "p")]) == 0
    capsys.readouterr()
    env = json.loads((tmp_path / "p" / "cone-counts.json").read_text())
    assert env["seed"] == cli.suite_seed(11, "cone-counts")
    assert not (tmp_path / "o").exists()


def test_malformed_metric_exits_2_without_output(tmp_path, capsys):
    out = tmp_path / "results"
    cfg = tmp_path / "bad.toml"
    cfg.write_text(SMALL.format(out=out.as_posix()).replace('kind = "minkowski"', 'kind = "conformal"\nomega2 = "-1 - x"'))
    assert cli.main([str(cfg)]) == 2
    assert "metric" in capsys.readouterr().err
    assert not out.exists()


def test_unknown_metric_kind_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(SMALL.format(out=(tmp_path / "r").as_posix()).replace('"minkowski"', '"hyperbolic"'))
    assert cli.main([str(cfg)]) == 2
    assert not (tmp_path / "r").exists()


def test_toml_error_reports_line_and_column():
    with pytest.raises(ConfigError) as info:
        parse_config("seed = 1\n[grid]\nnt = = 3\n")
    assert info.value.line == 3 and info.value.column is not None
    assert "line 3" in str(info.value)


def test_unknown_names_rejected():
    base = SMALL.format(out="x")
    with pytest.raises(ConfigError):
        parse_config(base.replace('name = "epsilon"', 'name = "quartic"'), known_suites=REGISTRY)
    with pytest.raises(ConfigError):
        parse_config(base.replace('"leibniz"]', '"nope"]'), known_suites=REGISTRY)
    with pytest.raises(ConfigError):
        parse_config(base + "\n[extra]\na = 1\n")


def test_unknown_suite_flag_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL.format(out=(tmp_path / "o").as_posix()))
    assert cli.main([str(cfg), "--suite", "nope"]) == 2


def test_missing_config_exits_2(tmp_path, capsys):
    assert cli.main([str(tmp_path / "missing.toml")]) == 2
    assert cli.main([]) == 2


def test_example_config_validates():
    cfg = parse_config((ROOT / "configs" / "example.toml").read_text(), known_suites=REGISTRY)
    assert set(cfg.suites) == set(REGISTRY)


def test_readme_names_only_registered_suites():
    text = (ROOT / "README.md").read_text()
    section = text.split("## Suites", 1)[1].split("\n## ", 1)[0]
    named = set(re.findall(r"^\| `([a-z-]+)` \|", section, flags=re.M))
    assert named == set(REGISTRY)
