import json

import numpy as np
import pytest

from finitegap import Potential
from finitegap.cli import dumps17, main, parse_complex, parse_line
from finitegap.errors import InputError

from ._support import TWO_PI, circle, closed_perturbed_circle


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, q in {"circle": circle(), "vac": Potential.zero(TWO_PI), "pc": closed_perturbed_circle()}.items():
        p = tmp_path / f"{name}.json"
        p.write_text(q.dumps())
        paths[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text('{"T": 6.28, "modes": [')
    paths["bad"] = str(bad)
    paths["dir"] = tmp_path
    return paths


def test_dumps17():
    assert dumps17({"a": 0.1, "b": 1 + 2j, "c": float("nan")}) == '{"a": 0.10000000000000001, "b": [1, 2], "c": null}\n'


def test_parsers():
    assert parse_complex("0.3+1i") == 0.3 + 1j
    assert np.allclose(parse_line("1,1j"), [1, 1j])
    with pytest.raises(InputError):
        parse_line("1")
    with pytest.raises(InputError):
        parse_line("0,0")


def test_analyze_circle(files, capsys):
    assert main(["analyze", files["circle"], "--k-max", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    lam = {row[0]: complex(row[1], row[2]) for row in out["lambda_k"]}
    assert abs(lam[1] - 1j) < 1e-8 and abs(lam[-2] + np.sqrt(2)) < 1e-10
    assert out["closure"]["semisimple"] and out["closure"]["n"] == 2 and out["closure"]["j0"] == 1


def test_analyze_vacuum_not_closed(files, capsys):
    assert main(["analyze", files["vac"], "--k-max", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert not out["closure"]["semisimple"]
    assert abs(out["closure"]["m_residual"] - 22.14069263) < 1e-6


def test_bad_json_is_input_error(files, capsys):
    assert main(["analyze", files["bad"]]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_usage_error_exit_one(capsys):
    assert_exit = pytest.raises(SystemExit)
    with assert_exit as info:
        main(["close"])
    assert info.value.code == 1


def test_close_rejects_open_input(files, capsys):
    assert main(["close", files["vac"], "-n", "2"]) == 2
    assert "error [closing-check]: input fails closing condition" in capsys.readouterr().err


def test_close_needs_n(files, capsys):
    assert main(["close", files["circle"]]) == 1


def test_close_from_config_and_deterministic(files):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({"n": 4}))
    a, b, c = (str(files["dir"] / f"{x}.json") for x in "abc")
    assert main(["close", files["pc"], "--config", str(cfg), "-o", a]) == 0
    assert main(["close", files["pc"], "--config", str(cfg), "-o", b]) == 0
    assert main(["close", files["pc"], "--config", str(cfg), "--threads", "3", "-o", c]) == 0
    ta, tb, tc = (open(p).read() for p in (a, b, c))
    assert ta == tb == tc
    out = json.loads(ta)
    assert out["provenance"]["closure"]["semisimple"] and out["provenance"]["n"] == 4
    q = Potential.from_dict(out)
    assert q.T == TWO_PI


def test_unknown_config_key(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["analyze", files["circle"], "--config", str(cfg)]) == 1


def test_reconstruct_csv(files, capsys):
    out = str(files["dir"] / "curve.csv")
    assert main(["reconstruct", files["circle"], "--samples", "64", "--both", "-o", out]) == 0
    rows = open(out).read().splitlines()
    assert rows[0] == "t,x0,x1,x2,x3,b1,b2,b3" and len(rows) == 66
    assert "endpoint gap" in capsys.readouterr().err


def test_reconstruct_json_and_sample_check(files):
    out = str(files["dir"] / "curve.json")
    assert main(["reconstruct", files["circle"], "--samples", "16", "--ball", "-o", out]) == 0
    data = json.load(open(out))
    assert data["columns"] == ["t", "b1", "b2", "b3"] and data["endpoint_gap"] < 1e-7
    assert main(["reconstruct", files["circle"], "--samples", "4"]) == 1


def test_dress_soliton(files, capsys):
    assert main(["dress", files["vac"], "--lambda-star", "1j", "--line", "1,1"]) == 0
    cap = capsys.readouterr()
    out = json.loads(cap.out)
    assert "warning" in out and "warning" in cap.err
    smp = out["provenance"]["samples"]
    t, re = np.array(smp["t"]), np.array(smp["re"])
    assert np.max(np.abs(re + 2 / np.cosh(t))) < 1e-8
    assert np.max(np.abs(smp["im"])) < 1e-12


def test_dress_trivial_line(files, capsys):
    assert main(["dress", files["vac"], "--lambda-star", "i", "--line", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "warning" not in out
    assert np.max(np.abs(Potential.from_dict(out).coeffs)) < 1e-14


def test_dress_real_pole_rejected(files):
    assert main(["dress", files["vac"], "--lambda-star", "0.5", "--line", "1,1"]) == 1
