import json

import pandas as pd
import pytest

import steinpoly
from steinpoly import cli
from steinpoly.config import TOLERANCES


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


def _load(path):
    return json.loads(path.read_text())


def test_families_poisson(family_file, out):
    argv = ["families", "--family", family_file("poisson"), "--J", "3", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK

    doc = _load(out / "basis.json")
    assert doc["J"] == 3
    assert doc["family"]["kind"] == "poisson"
    assert len(doc["basis"]) == 4
    assert doc["basis"][1]["coeffs"] == ["-1", "1"]
    assert doc["basis"][2]["lambda"] == "-2"
    assert "phi" not in doc


def test_families_normal_has_phi_psi(family_file, out):
    assert cli.main(["families", "--family", family_file("normal"), "--J", "2",
                     "--out", str(out)]) == cli.EXIT_OK
    doc = _load(out / "basis.json")
    assert doc["class"] == "hermite"
    assert doc["phi"] == ["-1"]
    assert doc["basis"][2]["coeffs"] == ["-1", "0", "1"]


def test_families_mvnormal(family_file, out):
    assert cli.main(["families", "--family", family_file("mvnormal"), "--J", "2",
                     "--out", str(out)]) == cli.EXIT_OK
    doc = _load(out / "basis.json")
    assert len(doc["basis"]) == 6
    first = next(entry for entry in doc["basis"] if entry["j"] == [1, 0])
    assert first["terms"] == [{"exponent": [1, 0], "coeff": "2"}]


def test_binomial_truncation_is_capped(out):
    doc = json.dumps({"kind": "binomial", "params": {"N": 3, "p": "1/2"},
                      "z_domain": [0, 5]})
    assert cli.main(["families", "--family", doc, "--J", "6",
                     "--out", str(out)]) == cli.EXIT_OK
    assert _load(out / "basis.json")["J"] == 3


@pytest.mark.parametrize("name, J", [("normal", 4), ("poisson", 4), ("binomial", 4),
                                     ("mvnormal", 2)])
def test_verify_passes(family_file, out, name, J):
    argv = ["verify", "--family", family_file(name), "--J", str(J), "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK

    doc = _load(out / "verify.json")
    assert doc["passed"]
    assert doc["failed"] == 0
    assert doc["residuals"]
    assert "ok" in (out / "steinpoly-verify.log").read_text()


def test_verify_reports_failures(family_file, out, mocker):
    mocker.patch("steinpoly.stein.stein_identity_residual", return_value=1.0)
    argv = ["verify", "--family", family_file("normal"), "--J", "2", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_FAILED

    doc = _load(out / "verify.json")
    assert not doc["passed"]
    failed = [r for r in doc["residuals"] if not r["passed"]]
    assert {r["check"] for r in failed} == {"stein"}
    assert "FAILED" in (out / "steinpoly-verify.log").read_text()


def test_tolerance_overrides_are_restored(family_file, out):
    argv = ["verify", "--family", family_file("normal"), "--J", "2",
            "--tol", "stein=0.5", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    assert TOLERANCES["stein"] == 1e-8
    stein = [r for r in _load(out / "verify.json")["residuals"] if r["check"] == "stein"]
    assert stein and all(r["tolerance"] >= 0.5 for r in stein)
    iterated = [r for r in _load(out / "verify.json")["residuals"]
                if r["check"].startswith("iterated")]
    assert all(r["tolerance"] < 0.5 for r in iterated)


def test_project(family_file, out):
    argv = ["project", "--family", family_file("poisson"), "--J", "3",
            "--z-grid", "0:2:9", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK

    frame = pd.read_csv(out / "projection.csv")
    assert list(frame.columns) == ["j", "z", "mu", "P"]
    assert len(frame) == 4 * 9
    doc = _load(out / "fitted.json")
    assert doc["coordinate"] == "mu"
    assert [fit["j"] for fit in doc["fits"]] == [0, 1, 2, 3]
    assert all(fit["certified"] for fit in doc["fits"])


def test_project_negbin_uses_kappa(family_file, out):
    argv = ["project", "--family", family_file("negbin"), "--J", "2", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK
    assert _load(out / "fitted.json")["coordinate"] == "kappa"


def test_complete(family_file, out):
    argv = ["complete", "--family", family_file("poisson"), "--x-trunc", "21",
            "--z-grid", "0:2:21", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK

    doc = _load(out / "completeness.json")
    assert doc["shape"] == [21, 21]
    assert doc["n"] == 21
    assert doc["min_row_sum"] > 1 - 1e-6
    assert "finite-section" in doc["note"]
    assert doc["normalized"]
    assert 0.0 <= doc["raw_min_sv"] <= doc["raw_max_sv"]
    assert doc["verdict"] == "not numerically injective at scale 21"


def test_simulate_then_estimate(family_file, tmp_path):
    family = family_file("normal")
    sim = tmp_path / "sim"
    assert cli.main(["simulate", "--family", family, "--g-true=1,0.5,-0.3",
                     "--n", "2000", "--seed", "7", "--out", str(sim)]) == cli.EXIT_OK
    data = pd.read_csv(sim / "data.csv")
    assert list(data.columns) == ["y", "x", "z2"]
    assert len(data) == 2000

    est = tmp_path / "est"
    assert cli.main(["estimate", "--family", family, "--data", str(sim / "data.csv"),
                     "--J", "2", "--out", str(est)]) == cli.EXIT_OK
    doc = _load(est / "fit.json")
    assert len(doc["beta"]) == 3
    assert doc["beta"][2] == pytest.approx(-0.3, abs=0.15)
    assert doc["rejected"] == []
    assert doc["diagnostics"]["rank"] == 3

    ghat = pd.read_csv(est / "ghat.csv")
    assert list(ghat.columns) == ["x", "ghat"]
    assert len(ghat) == 101


def test_estimate_lists_rejected_rows(family_file, tmp_path, out):
    path = tmp_path / "data.csv"
    rows = ["y,x,z2"] + [f"{k % 3},{k % 4},{(k % 5) / 4}" for k in range(40)]
    rows.append("1,-2,0.5")
    path.write_text("\n".join(rows) + "\n")
    argv = ["estimate", "--family", family_file("poisson"), "--data", str(path),
            "--J", "1", "--x-grid", "0:4:5", "--out", str(out)]
    assert cli.main(argv) == cli.EXIT_OK

    doc = _load(out / "fit.json")
    assert [r["row"] for r in doc["rejected"]] == [40]
    assert len(pd.read_csv(out / "ghat.csv")) == 5


def test_simulation_is_deterministic(family_file, tmp_path):
    family = family_file("poisson")
    outputs = []
    for name in ("a", "b"):
        target = tmp_path / name
        assert cli.main(["simulate", "--family", family, "--g-true=0,1", "--n", "50",
                         "--seed", "3", "--out", str(target)]) == cli.EXIT_OK
        outputs.append((target / "data.csv").read_bytes())
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus", "--family", "{}"],
        ["verify"],
        ["verify", "--family", "no-such-file.json"],
        ["verify", "--family", '{"kind": "weibull", "params": {}, "z_domain": [0, 1]}'],
        ["estimate", "--family", "FAMILY"],
        ["simulate", "--family", "FAMILY"],
        ["verify", "--family", "FAMILY", "--J", "31"],
        ["verify", "--family", "FAMILY", "--tol", "bogus=1"],
        ["verify", "--family", "FAMILY", "--tol", "stein=-1"],
        ["project", "--family", "FAMILY", "--z-grid", "2:0:5"],
        ["verify", "--family", "FAMILY", "--J", "two"],
    ],
)
def test_usage_errors(family_file, out, argv):
    argv = [family_file("normal") if arg == "FAMILY" else arg for arg in argv]
    assert cli.main(argv + ["--out", str(out)]) == cli.EXIT_USAGE


def test_version(capsys):
    assert cli.main(["--version"]) == cli.EXIT_OK
    assert steinpoly.__version__ in capsys.readouterr().out


def test_verify_family_suite(normal):
    results = cli.verify_family(normal, 3)
    checks = {r.check for r in results}
    assert {"eigen", "sturm_liouville", "orthogonality", "stein", "iterated_2",
            "fit", "degree", "closed_form", "recursion"} <= checks
    assert all(r.passed for r in results)
