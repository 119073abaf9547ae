import io
import json
import subprocess
import sys

import pytest

from btlattice import schemas
from btlattice.cli import dispatch, main
from btlattice.errors import SchemaError
from btlattice.generators import random_fuchsian_system
from btlattice.scalar_series import ConstMatrix, LaurentSeries, SeriesMatrix

Z = LaurentSeries.monomial(1)
ONE = [1, 1, 0, 1]
ZERO = [0, 1, 0, 1]
HALF = [1, 2, 0, 1]


def run(argv, payload=None, monkeypatch=None):
    if payload is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(payload)))
    return dispatch(argv)


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def diag_lattice():
    return SeriesMatrix.diag([LaurentSeries.monomial(-1), Z]).to_json()


def rank_one_system():
    return {"dim": 1, "poles": [ZERO, ONE], "residues": [[[HALF]], [[[3, 2, 0, 1]]]]}


# --- worked examples ---------------------------------------------------------------------


def test_smith_example(tmp_path):
    report, status, _ = dispatch(["smith", write(tmp_path, "m.json", {"M": diag_lattice()})])
    assert status == 0
    assert (report["kappa"], report["d"], report["index"]) == ([-1, 1], 2, 2)
    schemas.validate_report("smith", report)


def test_permlemma_identity(monkeypatch):
    payload = {"P": SeriesMatrix.identity(2).to_json(), "kappa": [0, 2]}
    report, status, _ = run(["permlemma"], payload, monkeypatch)
    assert status == 0
    assert (report["sigma"], report["Pi"], report["Q"]) == ("id", "I", "I")
    schemas.validate_report("permlemma", report)


def test_rank_one_explore_lists_chain(tmp_path):
    path = write(tmp_path, "s.json", rank_one_system())
    report, status, _ = dispatch(["rh", "explore", path, "--depth", "3"])
    assert status == 0
    types = [t[0] for t in report["reached_types"]]
    assert types == list(range(max(types), min(types) - 1, -1))
    schemas.validate_report("explore", report)


# --- every command emits a schema-valid report ---------------------------------------------


def test_reports_validate(tmp_path):
    sysj = random_fuchsian_system(3, 2, 2).to_json()
    spath = write(tmp_path, "sys.json", sysj)
    lat = SeriesMatrix([[1, 0], [LaurentSeries.monomial(-1), Z]]).to_json()
    germ = SeriesMatrix.from_coeffs([ConstMatrix([[0, 1], [0, 0]]), ConstMatrix([[1, 0], [2, -1]])], 0).to_json()
    cases = [
        (["smith"], {"M": lat}, "smith"),
        (["geodesic"], {"M": lat}, "geodesic"),
        (["abacus"], {"kappa": [0, 1, 2]}, "abacus"),
        (["type"], {"lattice": lat}, "type"),
        (["permlemma"], {"P": [[ONE, ONE], [ZERO, ONE]], "kappa": [0, 3]}, "permlemma"),
        (["birkhoff"], {"germ": germ, "N": 5}, "birkhoff"),
        (["loglattices"], {"germ": germ, "flag": [[[ONE], [ZERO]], [[ONE, ZERO], [ZERO, ONE]]], "kappa": [0, 1]}, "loglattices"),
        (["oracle-check", "--count", "5"], None, "oracle_check"),
    ]
    for argv, payload, kind in cases:
        if payload is not None:
            argv = argv + [write(tmp_path, f"{kind}.json", payload)]
        report, status, _ = dispatch(argv)
        assert status == 0, (argv, report)
        schemas.validate_report(kind, report)
    for sub, kind, extra in [
        ("type", "rh_type", []),
        ("modify", "state", ["--pole", "0", "--subspace", "[]"]),
        ("explore", "explore", ["--depth", "1"]),
    ]:
        report, status, _ = dispatch(["rh", sub, spath] + extra)
        assert status == 0
        schemas.validate_report(kind, report)
    for kind, schema in [("system", "system"), ("lattice", "fixture_lattice"), ("gauge", "fixture_gauge")]:
        report, status, _ = dispatch(["gen-fixture", "--kind", kind, "--seed", "4"])
        assert status == 0
        schemas.validate_report(schema, report)


def test_plemelj_command(tmp_path):
    report, _, _ = dispatch(["gen-fixture", "--kind", "plemelj", "--seed", "2"])
    path = write(tmp_path, "p.json", report)
    out, status, _ = dispatch(["rh", "plemelj", path, "--pole", "0"])
    assert status == 0 and out["found"] and out["depth"] == 1
    schemas.validate_report("plemelj", out)


# --- error channels ------------------------------------------------------------------------


def test_domain_error_exit_code(tmp_path):
    germ = SeriesMatrix.from_coeffs([ConstMatrix.diag([0, 1]), ConstMatrix([[0, 1], [1, 0]])], 0).to_json()
    out, status, _ = dispatch(["birkhoff", write(tmp_path, "g.json", {"germ": germ, "N": 4})])
    assert status == 2 and out["error"] == "ResonantResidue"
    schemas.validate_report("error", out)
    J = SeriesMatrix.from_coeffs([ConstMatrix([[0, 1], [0, 0]])], 0).to_json()
    payload = {"germ": J, "flag": [[[ZERO], [ONE]], [[ONE, ZERO], [ZERO, ONE]]], "kappa": [0, 1]}
    out, status, _ = dispatch(["loglattices", write(tmp_path, "l.json", payload)])
    assert status == 2 and out["error"] == "FlagNotStable" and "component" in out["location"]


def test_schema_error_exit_code(tmp_path, monkeypatch):
    out, status, _ = run(["smith"], {"M": 3}, monkeypatch)
    assert status == 3 and out["error"] == "SchemaError"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out, status, _ = dispatch(["smith", str(bad)])
    assert status == 3
    out, status, _ = dispatch(["rh", "modify", write(tmp_path, "s.json", rank_one_system())])
    assert status == 3


def test_budget_error_carries_partial(tmp_path):
    path = write(tmp_path, "s.json", random_fuchsian_system(1, 2, 3).to_json())
    out, status, _ = dispatch(["rh", "explore", path, "--depth", "3", "--max-nodes", "5"])
    assert status == 2 and out["error"] == "BudgetExceeded"
    assert out["partial"]["complete"] is False


def test_validators_raise_schema_error():
    with pytest.raises(SchemaError):
        schemas.validate_input("abacus", {"kappa": "x"})
    assert "report_state" in schemas.names()


# --- replay ------------------------------------------------------------------------------


def test_explore_logs_replay_byte_identical(tmp_path):
    spath = write(tmp_path, "root.json", random_fuchsian_system(9, 2, 2).to_json())
    rep, status, _ = dispatch(["rh", "explore", spath, "--depth", "2"])
    assert status == 0
    for nd in rep["nodes"][1::5]:
        log = write(tmp_path, f"log{nd['id']}.json", {"log": nd["log"]})
        state, status, _ = dispatch(["rh", "modify", spath, "--log", log])
        assert status == 0
        assert json.dumps(state["system"], sort_keys=True) == json.dumps(nd["system"], sort_keys=True)
        assert json.dumps(state["log"], sort_keys=True) == json.dumps(nd["log"], sort_keys=True)
        assert state["type"] == nd["type"]


# --- options and formats -------------------------------------------------------------------


def test_global_options_before_or_after(capsys):
    a, _, _ = dispatch(["--seed", "5", "gen-fixture", "--kind", "lattice"])
    b, _, _ = dispatch(["gen-fixture", "--kind", "lattice", "--seed", "5"])
    c, _, _ = dispatch(["gen-fixture", "--kind", "lattice", "--seed", "6"])
    assert a == b and a != c


def test_text_format(tmp_path, capsys):
    status = main(["smith", write(tmp_path, "m.json", {"M": diag_lattice()}), "--format", "text"])
    out = capsys.readouterr().out
    assert status == 0 and "kappa: [-1, 1]" in out


def test_precision_env_override(tmp_path, monkeypatch):
    germ = SeriesMatrix([[2 * Z]]).to_json()
    path = write(tmp_path, "g.json", {"germ": germ})
    monkeypatch.setenv("BTLATTICE_PRECISION", "7")
    out, _, _ = dispatch(["birkhoff", path])
    assert out["N"] == 7
    out, _, _ = dispatch(["birkhoff", path, "--precision", "5"])
    assert out["N"] == 5


def test_console_script_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "btlattice", "abacus"],
        input=json.dumps({"kappa": [0, 2]}),
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["count"] == 2
