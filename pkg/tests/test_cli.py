import json
import subprocess
import sys

import jsonschema
import pytest

import oracles
from shrinker_lab.cli import RunConfig, ConfigError, parse_resolutions, run
from shrinker_lab.report import dumps, load_schema

SCHEMA = load_schema()


def invoke(tmp_path, *args):
    out = tmp_path / "report.out"
    code, report = run([*args, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    if report is not None:
        jsonschema.validate(report, SCHEMA)
        jsonschema.validate(json.loads(dumps(report)), SCHEMA)
    return code, report, text


def test_verify_clifford(tmp_path):
    code, rep, text = invoke(tmp_path, "verify", "--model", "clifford:n=2", "--res", "64")
    assert code == 0 and rep["status"] == "ok"
    for key, chk in rep["sections"]["checks"].items():
        if key != "eigenfields":
            assert chk["value"] <= 1e-7, key
    assert len(rep["sections"]["identities"]["residuals"]["1"]) == 10
    assert json.loads(text)["schema"] == "shrinker-lab/1"


def test_verify_invalid_window(tmp_path, capsys):
    code, rep, _ = invoke(tmp_path, "verify", "--model", "al:p=1,q=2")
    assert code == 2 and rep is None
    assert "InvalidWindow" in capsys.readouterr().err


def test_verify_unparseable_model(tmp_path):
    assert invoke(tmp_path, "verify", "--model", "sphere")[0] == 2


def test_verify_convergence_table_fd4(tmp_path):
    code, rep, _ = invoke(tmp_path, "verify", "--model", "circle", "--res", "8,16,32", "--backend", "fd4")
    table = rep["resolution_table"]
    errs = [row["shrinker_residual"] for row in table]
    assert errs[0] > errs[1] > errs[2]
    assert all(row["shrinker_residual_order"] >= 3.9 for row in table[1:])
    # fd4 at 32 nodes leaves a 6e-5 residual, which fails the verification gates
    assert code == 3 and rep["status"] == "fail"


def test_verify_convergence_table_spectral_flags_roundoff(tmp_path):
    code, rep, _ = invoke(tmp_path, "verify", "--model", "circle", "--res", "8,16,32")
    assert code == 0
    assert all(row["shrinker_residual_at_roundoff"] for row in rep["resolution_table"])


def test_spectrum_csv_clifford(tmp_path):
    code, _, text = invoke(tmp_path, "spectrum", "--model", "clifford:n=2", "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "index,value,residual,cluster_id"
    rows = [line.split(",") for line in lines[1:]]
    c0 = [float(r[1]) for r in rows if r[3] == "0"]
    c1 = [float(r[1]) for r in rows if r[3] == "1"]
    assert len(c0) == 4 and all(abs(v - 0.5) < 1e-3 for v in c0)
    assert len(c1) == 4 and all(abs(v - 1.0) < 1e-3 for v in c1)


def test_spectrum_json_circle(tmp_path):
    code, rep, _ = invoke(tmp_path, "spectrum", "--model", "circle", "--eigs", "4")
    clusters = rep["sections"]["spectrum"]["clusters"]
    assert [(c["size"], round(c["mean"], 6)) for c in clusters] == [(2, 0.5), (2, 2.0)]
    assert rep["sections"]["spectrum"]["eigenspace_match"][0]["max_angle"] <= 1e-3
    assert "values" in rep["sections"]["spectrum"]["richardson"]


@pytest.mark.parametrize("args", [["--eigs", "1"], ["--res", "abc"], ["--format", "xml"],
                                  ["--tol-eig", "-1"], ["--backend", "fd5"]])
def test_config_rejections(tmp_path, args):
    assert invoke(tmp_path, "spectrum", "--model", "circle", *args)[0] == 1


def test_csv_only_for_spectra(tmp_path):
    assert invoke(tmp_path, "verify", "--model", "circle", "--format", "csv")[0] == 1


def test_stability_clifford(tmp_path):
    code, rep, _ = invoke(tmp_path, "stability", "--model", "clifford:n=2")
    s = rep["sections"]
    assert code == 0
    assert s["hamiltonian"]["tag"] == "HamiltonianFStable"
    assert s["lagrangian"]["tag"] == "LagrangianFUnstable"
    assert s["certificate"]["F2_max"] == pytest.approx(-2.3114, abs=1e-4)
    assert s["certificate"]["coefficients"] == pytest.approx([1.0, -1.0], abs=1e-12)
    assert len(s["certificate"]["y_star"]) == 4


def test_stability_circle(tmp_path):
    code, rep, _ = invoke(tmp_path, "stability", "--model", "circle")
    s = rep["sections"]
    assert s["hamiltonian"]["tag"] == "HamiltonianFStable"
    assert s["lagrangian"]["tag"] == "LagrangianFStable"
    assert "skipped" in s["certificate"]


def test_stability_product(tmp_path):
    code, rep, _ = invoke(tmp_path, "stability", "--model", "product(al:p=2,q=3;circle)")
    assert code == 0
    assert rep["sections"]["lagrangian"]["tag"] == "LagrangianFUnstable"
    assert rep["sections"]["certificate"]["F2_max"] < 0
    assert rep["sections"]["certificate"]["u0_samples"]["sup"] > 1e-3


def test_strict_inconclusive(tmp_path):
    args = ["stability", "--model", "clifford:n=2", "--tol-sub", "1e-20"]
    code, rep, _ = invoke(tmp_path, *args)
    assert code == 0 and rep["status"] == "inconclusive"
    code, rep, _ = invoke(tmp_path, *args, "--strict")
    assert code == 3 and rep["status"] == "fail"


@pytest.mark.parametrize("variation,value,h", [("form:1,-1", oracles.CERTIFICATE_T2, 0.0),
                                               ("meanCurvature", 0.0, -1.0),
                                               ("function:cos(t1)", 0.0, 0.0)])
def test_second_variation(tmp_path, variation, value, h):
    code, rep, _ = invoke(tmp_path, "second-variation", "--model", "clifford:n=2", "--variation", variation)
    sec = rep["sections"]["second_variation"]
    assert code == 0
    assert sec["optimized"]["value"] == pytest.approx(value, abs=1e-9)
    assert sec["optimized"]["h"] == pytest.approx(h, abs=1e-9)
    assert set(sec["optimized"]["terms"]) >= {"translation_linear", "dilation_quadratic"}


@pytest.mark.parametrize("variation", ["function:cos(x)", "form:1", "function:cos(t3)", "nonsense"])
def test_second_variation_parse_errors(tmp_path, variation):
    code, _, _ = invoke(tmp_path, "second-variation", "--model", "clifford:n=2", "--variation", variation)
    assert code == 1


@pytest.mark.parametrize("spec,value", [("circle", oracles.CIRCLE_F), ("clifford:n=2", oracles.CLIFFORD_F)])
def test_entropy(tmp_path, spec, value):
    code, rep, _ = invoke(tmp_path, "entropy", "--model", spec)
    e = rep["sections"]["entropy"]
    assert e["value"] == pytest.approx(value, abs=1e-5)
    assert max(abs(v) for v in e["x0"]) <= 1e-4 and e["t0"] == pytest.approx(1.0, abs=1e-4)
    assert e["heuristic"] is True


def test_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    args = ["verify", "--model", "al:p=2,q=3", "--seed", "7"]
    assert invoke(a, *args)[2] == invoke(b, *args)[2]


def test_floats_use_17_digits():
    assert dumps({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}\n'
    assert dumps({"x": float("nan")}) == '{\n  "x": null\n}\n'


def test_parse_resolutions_and_config():
    assert parse_resolutions("64") == [(64,)]
    assert parse_resolutions("8,16,32") == [(8,), (16,), (32,)]
    assert parse_resolutions("128x64") == [(128, 64)]
    with pytest.raises(ConfigError):
        RunConfig("spectrum", "circle", resolutions=[]).validate()


def test_console_entry_point(tmp_path):
    out = tmp_path / "e.json"
    proc = subprocess.run([sys.executable, "-m", "shrinker_lab.cli", "entropy", "--model", "circle",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    jsonschema.validate(json.loads(out.read_text()), SCHEMA)
