import json

import numpy as np
import pytest
import yaml

from dtnlab.errors import ConfigError, Indeterminate
from dtnlab.harness import cli, scenarios
from dtnlab.harness.config import compile_expression, dump_config, load_config, make_config
from dtnlab.harness.scenarios import Report, convergence_study, run_scenario, run_suite

SMALL_DOUBLED = {"domain": {"cells": [400]}}


def checks(rep):
    return {c.name: c for c in rep.checks}


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        make_config("mormas", {"numeric": {"zero_tol": 1e-9, "tolerance": 1}})
    with pytest.raises(ConfigError):
        make_config("mormas", {"extra": True})
    with pytest.raises(ConfigError):
        make_config("no-such-scenario")


def test_config_round_trip(tmp_path):
    cfg = make_config("doubled-1d", {"numeric": {"seed": 11}})
    path = tmp_path / "cfg.yaml"
    path.write_text(dump_config(cfg))
    assert load_config(path, "doubled-1d") == cfg
    with pytest.raises(ConfigError):
        load_config(path, "mormas")
    path.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(path, "mormas")


def test_expression_potential():
    fn = compile_expression("-50 + 10 * sin(pi * x) * y")
    xy = np.array([[0.5, 2.0], [0.0, 1.0]])
    np.testing.assert_allclose(fn(xy), [-30.0, -50.0])
    np.testing.assert_allclose(compile_expression("3")(xy), [3.0, 3.0])


@pytest.mark.parametrize("text", ["__import__('os')", "x.real", "open('f')", "[x for x in y]", "x +"])
def test_expression_rejects_unsafe_input(text):
    with pytest.raises(ConfigError):
        compile_expression(text)


def test_doubled_report():
    rep = run_scenario(make_config("doubled-1d", SMALL_DOUBLED))
    assert rep.status == "pass"
    assert rep.checks[1].name == "mormas" and (rep.checks[1].lhs, rep.checks[1].rhs) == (1, 1)
    idx = rep.indices
    assert (idx["L^G"]["mor"], idx["L^N1"]["mor"], idx["L^D2"]["mor"]) == (1, 0, 0)


def test_mormas_random_scenario():
    rep = run_scenario(make_config("mormas", {"numeric": {"seed": 3}}))
    assert rep.status == "pass"
    assert "mormas" in checks(rep)


def test_perturb_symmetric_doubling():
    rep = run_scenario(make_config("perturb", {"potential": {"perturbation": 0.0}}))
    c = checks(rep)
    assert rep.status == "pass"
    assert c["perturb_identity"].passed and c["symmetric_D_plus_N"].passed
    assert rep.data["certificate"]["holds"]


def test_every_scenario_runs_small():
    small = {
        "friedlander": {"domain": {"cells": [200]}},
        "dnbracket": {"domain": {"cells": [10, 8]}},
        "homotopy": {"domain": {"cells": [10, 8]}},
        "nodal": {"domain": {"cells": [24, 12]}},
        "periodic": {"domain": {"kind": "torus", "cells": [8], "lengths": [1.0]}, "potential": {"kind": "random"}},
        "robin": {"domain": {"cells": [200]}},
        "lambda-sweep": {"domain": {"cells": [200]}},
    }
    for name, over in small.items():
        rep = run_scenario(make_config(name, over))
        assert rep.status == "pass", (name, [c for c in rep.checks if not c.passed])


def test_reports_are_deterministic():
    cfg = make_config("dnbracket", {"numeric": {"seed": 5}, "domain": {"cells": [9, 7]}})
    a, b = run_scenario(cfg).to_json(), run_scenario(cfg).to_json()
    assert a == b
    assert "wall_time" not in json.loads(a)
    assert "wall_time" in json.loads(run_scenario(cfg, timing=True).to_json())


def test_indeterminate_is_never_pass(monkeypatch):
    calls = []

    def always(ctx, rep):
        calls.append(ctx.cfg.numeric.lam)
        raise Indeterminate("pivot in the gray band")

    monkeypatch.setitem(scenarios.RUNNERS, "friedlander", (always, False))
    rep = run_scenario(make_config("friedlander", {"domain": {"cells": [20]}}))
    assert rep.status == "indeterminate"
    assert len(calls) == scenarios.JITTER_ATTEMPTS + 1
    assert len(set(calls)) == len(calls)
    failing = Report("x", {})
    failing.check("a", 1, 2)
    assert failing.status == "fail"


def test_suite_is_byte_identical():
    a = json.dumps(run_suite(7, 1), sort_keys=True)
    b = json.dumps(run_suite(7, 1), sort_keys=True)
    assert a == b
    agg = json.loads(a)
    assert agg["status"] == "pass" and agg["completed"] == 1
    assert agg["replay_config"] is None


def test_suite_needs_a_case():
    with pytest.raises(ConfigError):
        run_suite(7, 0)


def test_convergence_doubled():
    table = convergence_study("doubled-1d", [16, 32, 64, 128, 256])
    assert table["stabilized_at"] is not None and table["stabilized_at"] <= 64
    assert all(r["value"] == 1 for r in table["rows"] if r["N"] >= 64)


def test_convergence_friedlander():
    table = convergence_study("friedlander", [32, 64, 128])
    assert [r["value"] for r in table["rows"]] == [1, 1, 1]
    assert table["stabilized_at"] == 32
    single = convergence_study("friedlander", [64])
    assert len(single["rows"]) == 1


def test_cli_verify(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"scenario": "doubled-1d", "domain": {"cells": [200]}}))
    out = tmp_path / "out"
    assert cli.main(["verify", "doubled-1d", "--config", str(cfg), "--out", str(out), "--emit-traces"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "pass"
    assert list(out.glob("*.csv"))
    assert "doubled-1d: pass" in capsys.readouterr().out


def test_cli_json_and_errors(tmp_path, capsys):
    assert cli.main(["verify", "friedlander", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "pass"
    bad = tmp_path / "bad.yaml"
    bad.write_text("numeric: {bogus: 1}\n")
    assert cli.main(["verify", "friedlander", "--config", str(bad)]) == 2
    assert cli.main(["suite", "--count", "0"]) == 2
    assert cli.main(["converge", "friedlander", "--N", "32,x"]) == 2
    assert cli.main(["verify", "friedlander", "--emit-traces"]) == 2


def test_cli_converge(capsys):
    assert cli.main(["converge", "friedlander", "--N", "32,64"]) == 0
    assert "stabilized at N = 32" in capsys.readouterr().out


def test_cli_suite_writes_files(tmp_path):
    assert cli.main(["suite", "--seed", "3", "--count", "2", "--out", str(tmp_path)]) == 0
    agg = json.loads((tmp_path / "suite.json").read_text())
    assert agg["count"] == 2 and agg["status"] == "pass"
