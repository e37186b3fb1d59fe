import json

import pytest

from perpetuity.cli import (
    ConfigError,
    config_hash,
    main,
    parse_config_text,
    serialize_config,
)

BASE = """
# base experiment
joint.A.variant = pointmass
joint.A.value = 0.5
joint.B.variant = exponential
joint.B.rate = 1.0
sim.n_samples = 20000
sim.seed = 11
moments.r = 0.5
tail.b = 1.0
"""


def write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(cmd, cfg_path, out, *extra):
    return main([cmd, "--config", cfg_path, "--out", str(out), "--no-timestamp", *extra])


# -- config format ------------------------------------------------------------

def test_config_round_trip():
    cfg = parse_config_text(BASE)
    again = parse_config_text(serialize_config(cfg))
    assert again == cfg
    assert cfg["joint.A.value"] == "0.5"


def test_config_rejects_duplicates_and_blank_keys():
    with pytest.raises(ConfigError):
        parse_config_text("a.b = 1\na.b = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text(" = 3\n")


def test_unknown_key_is_named(tmp_path, capsys):
    path = write(tmp_path, "joint.A.disttribution = beta\n")
    code = main(["simulate", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 2
    assert "joint.A.disttribution" in capsys.readouterr().err


def test_config_hash_ignores_stream_count():
    cfg = parse_config_text(BASE)
    h1 = config_hash(cfg, 11)
    cfg2 = dict(cfg)
    cfg2["sim.n_streams"] = "8"
    assert config_hash(cfg2, 11) == h1
    assert config_hash(cfg, 12) != h1


# -- exit codes ---------------------------------------------------------------

def test_simulate_success_and_outputs(tmp_path):
    path = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert run("simulate", path, out) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_samples"] == 20000
    header = (out / "samples.csv").read_text().splitlines()[0]
    assert "config_hash=" in header and "master_seed=11" in header


def test_simulate_divergent_coefficient_exits_3(tmp_path, capsys):
    path = write(tmp_path, BASE.replace("joint.A.value = 0.5", "joint.A.value = 1.5"))
    assert run("simulate", path, tmp_path / "o") == 3
    assert "diverges" in capsys.readouterr().err


def test_moments_verdict_written(tmp_path):
    path = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert run("moments", path, out) == 0
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["verdict"] == "Finite"


def test_moments_strict_inconclusive_exits_4(tmp_path):
    text = """
joint.A.variant = atoms
joint.A.values = 0.5,-0.5
joint.A.weights = 0.5,0.5
joint.B.variant = exp_difference
joint.B.left.weights = 1.0
joint.B.left.rates = 1.0
joint.B.right.weights = 1.0
joint.B.right.rates = 2.0
moments.r = 0.3
"""
    path = write(tmp_path, text)
    assert run("moments", path, tmp_path / "a") == 0
    assert run("moments", path, tmp_path / "b", "--strict") == 4


def test_tail_no_applicable_route_exits_5(tmp_path, capsys):
    text = """
joint.A.variant = uniform
joint.A.lo = 0.0
joint.A.hi = 0.5
joint.B.variant = uniform
joint.B.lo = 0.0
joint.B.hi = 1.0
tail.b = 1.0
"""
    path = write(tmp_path, text)
    assert run("tail", path, tmp_path / "o") == 5
    assert capsys.readouterr().err  # nearest-miss explanations on stderr


def test_tail_prediction_written(tmp_path):
    path = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert run("tail", path, out) == 0
    pred = json.loads((out / "prediction.json").read_text())
    assert pred["constant"] == pytest.approx(3.4627466194550636, rel=1e-9)


def test_validate_default_passes(tmp_path):
    assert main(["validate", "E1", "--out", str(tmp_path / "v"), "--no-timestamp"]) == 0
    report = json.loads((tmp_path / "v" / "validation.json").read_text())
    assert report["passed"] is True


def test_validate_unknown_case_exits_2(tmp_path, capsys):
    assert main(["validate", "E9", "--out", str(tmp_path / "v")]) == 2
    assert "E9" in capsys.readouterr().err


def test_validate_failure_exits_6(tmp_path):
    # deep anchors are unresolvable at this sample size for a fixed bad seed
    assert main(["validate", "E1", "--seed", "42", "--out", str(tmp_path / "v")]) == 6


def test_charfn_output(tmp_path):
    text = """
joint.A.variant = beta
joint.A.p = 1.0
joint.A.q = 1.0
joint.B.variant = exp_difference
joint.B.left.weights = 1.0
joint.B.left.rates = 2.0
joint.B.right.weights = 1.0
joint.B.right.rates = 1.0
charfn.t_grid = 0.5,1,2
"""
    path = write(tmp_path, text)
    out = tmp_path / "cf"
    assert run("charfn", path, out) == 0
    lines = (out / "charfn.csv").read_text().splitlines()
    assert lines[0] == "t,re,im"
    assert len(lines) == 4


def test_charfn_rejects_pointmass_coefficient(tmp_path):
    path = write(tmp_path, BASE)
    assert run("charfn", path, tmp_path / "o") == 2


def test_json_reports_are_byte_stable(tmp_path):
    path = write(tmp_path, BASE)
    run("moments", path, tmp_path / "a")
    run("moments", path, tmp_path / "b")
    assert (tmp_path / "a" / "verdict.json").read_bytes() == (tmp_path / "b" / "verdict.json").read_bytes()


def test_sample_csv_identical_across_stream_counts(tmp_path):
    blobs = []
    for streams in (1, 4, 8):
        path = write(tmp_path, BASE + f"sim.n_streams = {streams}\n", f"cfg{streams}.txt")
        out = tmp_path / f"out{streams}"
        assert run("simulate", path, out) == 0
        blobs.append((out / "samples.csv").read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]
