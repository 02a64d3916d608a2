import json

import pytest

from sigmag.cli import ConfigError, effective_config, main, parse_config_text
from sigmag.core import read_csv


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def base(tmp_path, **extra):
    lines = {
        "seed": 3,
        "grid": {"horizon": 1.0, "steps": 200},
        "ensemble_size": 200,
        "output_dir": str(tmp_path / "out"),
    }
    lines.update(extra)
    return "\n".join(f"{k} = {json.dumps(v)}" for k, v in lines.items()) + "\n"


def test_parse_hybrid_format():
    text = '# comment\nseed = 4\n\ngrid = {"horizon": 2.0,\n  "steps": 10}\nsuites = []\n'
    cfg = parse_config_text(text)
    assert cfg == {"seed": 4, "grid": {"horizon": 2.0, "steps": 10}, "suites": []}
    assert parse_config_text('{"seed": 1}') == {"seed": 1}


@pytest.mark.parametrize("text", ["seed 4", "seed = [1,", "seed = 1\nseed = 2", "1x = 3"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"suites": ["classify", "nope"]},
    {"grid": {"horizon": 1.0, "steps": 0}},
    {"grid": {"horizon": 1.0, "steps": 10, "dt": 0.1}},
    {"generator": {"generator_id": "xyz"}},
    {"generator": {"generator_id": "reset", "params": {"reset_times": [2.0]}}},
    {"tolerances": {"unknown_tol": 1}},
    {"seed": 1.5},
    {"functional": "nope"},
    {"recovery": {"k": 2, "extra": 1}},
])
def test_config_validation(raw):
    with pytest.raises(ConfigError):
        effective_config(raw)


def test_effective_config_defaults():
    cfg = effective_config({"generator": {"generator_id": "injection"}}, seed_override=9)
    assert cfg["seed"] == 9
    assert cfg["functional"] == "sigma_r"
    assert cfg["generator"]["params"] == {}


def test_classify_sigma_g_passes(tmp_path, capsys):
    cfg = write(tmp_path, base(tmp_path, suites=["classify"],
                               generator={"generator_id": "sigma_g"}))
    assert main(["--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out) == {"classify": "pass"}
    rep = json.loads((tmp_path / "out" / "classify.json").read_text())
    assert rep["schema_version"] == 1
    assert rep["report"]["leakage_sigma_g"] == 0.0
    assert rep["config"]["seed"] == 3


def test_empty_suites(tmp_path, capsys):
    cfg = write(tmp_path, base(tmp_path, suites=[]))
    assert main(["--config", cfg]) == 0
    assert json.loads(capsys.readouterr().out) == {}


def test_negative_control_exit_1(tmp_path):
    cfg = write(tmp_path, base(tmp_path, suites=["characterize"], ensemble_size=2000,
                               generator={"generator_id": "injection"}, functional="sigma",
                               test_functions=["poly2"]))
    assert main(["--config", cfg]) == 1


def test_malformed_config_exit_2(tmp_path, capsys):
    assert main(["--config", write(tmp_path, "suites = [\n")]) == 2
    assert main(["--config", write(tmp_path, "zzz = 1\n")]) == 2
    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["--bogus-flag"]) == 2
    assert "error" in capsys.readouterr().err


def test_dump_rows_and_determinism(tmp_path):
    cfg = write(tmp_path, base(tmp_path, generator={"generator_id": "reset",
                                                     "params": {"reset_times": [0.25, 0.5]}}))
    assert main(["--config", cfg, "--dump", "0", "--dump", "7"]) == 0
    f = tmp_path / "out" / "paths" / "reset_0.csv"
    first = f.read_bytes()
    cols = read_csv(f)
    assert len(cols["t"]) == 201
    for t in (0.25, 0.5):
        assert cols["X_post"][int(round(t * 200))] == 0.0
    assert main(["--config", cfg, "--dump", "0"]) == 0
    assert f.read_bytes() == first
    assert main(["--config", cfg, "--dump", "200"]) == 2


def test_reports_identical_across_threads(tmp_path):
    suites = ["classify", "characterize", "tanaka", "balayage", "multdecomp", "product",
              "recovery", "supremum"]
    cfg = write(tmp_path, base(tmp_path, suites=suites,
                               recovery={"n_outer": 10, "n_inner": 200},
                               supremum={"n_outer": 10, "n_inner": 200}))
    out = tmp_path / "out"
    assert main(["--config", cfg, "--threads", "1"]) == 0
    one = {p.name: p.read_bytes() for p in out.glob("*.json")}
    assert main(["--config", cfg, "--threads", "4"]) == 0
    four = {p.name: p.read_bytes() for p in out.glob("*.json")}
    assert one == four and len(one) == len(suites) + 1


def test_multdecomp_on_signed_generator_fails(tmp_path):
    cfg = write(tmp_path, base(tmp_path, suites=["multdecomp"],
                               generator={"generator_id": "reset"}))
    assert main(["--config", cfg]) == 1
    rep = json.loads((tmp_path / "out" / "multdecomp.json").read_text())
    assert "error" in rep["report"]


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, base(tmp_path, suites=["characterize"],
                               generator={"generator_id": "reset"}, test_functions=["exp"]))
    main(["--config", cfg, "--seed", "1"])
    a = json.loads((tmp_path / "out" / "characterize.json").read_text())
    main(["--config", cfg, "--seed", "2"])
    b = json.loads((tmp_path / "out" / "characterize.json").read_text())
    assert a["config"]["seed"] == 1 and b["config"]["seed"] == 2
    assert a["report"] != b["report"]
