import json
import math
import subprocess
import sys

import numpy as np
import pytest

from contractkit import ContractError, Dist
from contractkit import errors as E
from contractkit.cli import main
from contractkit.io import (
    dumps_report, load_channel, load_dist, load_graph, loads_report, named, parse_graph_text, to_plain,
)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ------------------------------------------------------------------ parsing


def test_channel_file(tmp_path):
    ch = load_channel(write(tmp_path, "k.json", [[0.9, 0.1], [0.1, 0.9]]))
    assert ch.rows.tolist() == [[0.9, 0.1], [0.1, 0.9]]


def test_decimal_sum_is_exact(tmp_path):
    # 0.1 + 0.2 + 0.7 is not 1 in binary floating point, but is exactly 1 in decimal
    d = load_dist(write(tmp_path, "mu.json", {"mass": [0.1, 0.2, 0.7], "labels": ["a", "b", "c"]}))
    assert d.mass.sum() == pytest.approx(1.0, abs=1e-16)


def test_bad_row_names_index(tmp_path):
    with pytest.raises(ContractError) as err:
        load_channel(write(tmp_path, "k.json", [[0.5, 0.5], [0.5, 0.49]]))
    assert err.value.code == E.VALIDATION
    assert err.value.index == 1
    assert "row 1" in str(err.value)


def test_negative_mass(tmp_path):
    with pytest.raises(ContractError) as err:
        load_dist(write(tmp_path, "mu.json", [1.2, -0.2]))
    assert err.value.code == E.VALIDATION


def test_json_syntax_error_has_line(tmp_path):
    path = write(tmp_path, "bad.json", "[\n  0.5,\n  0.5,,\n]")
    with pytest.raises(ContractError) as err:
        load_dist(path)
    assert err.value.code == E.PARSE
    assert f"{path}:3" in str(err.value)


def test_missing_file():
    with pytest.raises(ContractError) as err:
        load_dist("/nonexistent/mu.json")
    assert err.value.code == E.PARSE


def test_named_shorthands():
    assert named("bern_half").mass.tolist() == [0.5, 0.5]
    assert named("bsc_0.1").rows.tolist() == [[0.9, 0.1], [0.1, 0.9]]
    assert named("uniform_4").mass.tolist() == [0.25] * 4
    assert np.array_equal(named("identity_3").rows, np.eye(3))
    assert named("nothing") is None
    with pytest.raises(ContractError):
        load_dist("bsc_0.1")


def test_graph_text():
    g = parse_graph_text("# path\n3\n0 1\n1 2  # second edge\n")
    assert g.n == 3 and len(g.edges) == 2


@pytest.mark.parametrize("text,line", [("3\n0 1\n1 x\n", 3), ("3\n0 5\n", 2), ("3\n0 1 2\n", 2)])
def test_graph_errors_carry_line(text, line):
    with pytest.raises(ContractError) as err:
        parse_graph_text(text, "g.txt")
    assert f"g.txt:{line}" in str(err.value)


def test_load_graph_file(tmp_path):
    g = load_graph(write(tmp_path, "g.txt", "4\n0 1\n1 2\n2 3\n"))
    assert g.is_connected()


# ------------------------------------------------------------------ reports


def test_report_round_trip():
    rep = {"a": np.float64(1 / 3), "b": np.array([[0.1, math.pi]]), "flag": np.bool_(True), "n": np.int64(4),
           "inf": math.inf, "d": Dist([0.25, 0.75])}
    text = dumps_report(rep)
    back = loads_report(text)
    assert back == to_plain(rep)
    assert dumps_report(back) == text
    assert back["a"] == float("%.12g" % (1 / 3))
    assert back["inf"] == "inf"


# ---------------------------------------------------------------------- cli


def test_cli_eta_bsc(capsys):
    code, out, _ = run(capsys, "eta", "--phi", "kl", "--mu", "bern_half", "--channel", "bsc_0.2")
    assert code == 0
    rep = json.loads(out)
    assert rep["estimate"] == pytest.approx(0.36, abs=1e-5)
    assert rep["upper_bounds"]["dobrushin"] == pytest.approx(0.6, abs=1e-12)
    assert rep["upper_bounds"]["transport_ub"] == pytest.approx(0.72, abs=1e-12)
    assert rep["lower_bounds"]["s_squared"] == pytest.approx(0.36, abs=1e-12)
    assert set(rep["applicability"]) >= {"dobrushin", "doeblin"}


def test_cli_tv_routes_to_dobrushin(capsys):
    code, out, _ = run(capsys, "eta", "--phi", "tv", "--mu", "bern_half", "--channel", "bsc_0.2")
    assert code == 0 and json.loads(out)["estimate"] == pytest.approx(0.6)


def test_cli_seeded_output_is_deterministic(capsys):
    args = ("eta", "--phi", "hellinger", "--mu", "bern_0.3", "--channel", "bsc_0.15", "--seed", "7")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_cli_mix_time(tmp_path, capsys):
    k = np.full((4, 4), 0.5 / 3)
    np.fill_diagonal(k, 0.5)
    path = write(tmp_path, "k.json", k.tolist())
    code, out, _ = run(capsys, "mix-time", "--phi", "kl", "--mu", "uniform_4", "--kernel", path, "--eps", "1e-3")
    assert code == 0
    rep = json.loads(out)
    eta = rep["eta"]
    assert rep["d_star"] == pytest.approx(math.log(4), abs=1e-11)
    assert rep["t_bound"] == math.ceil(math.log(math.log(4) / 1e-3) / math.log(1 / eta) - 1e-9)
    assert rep["dominated"] and rep["confirmed"]


def test_cli_validation_exit_code(tmp_path, capsys):
    path = write(tmp_path, "k.json", [[0.5, 0.5], [0.6, 0.5]])
    code, out, err = run(capsys, "adjoint", "--mu", "bern_half", "--channel", path)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == E.VALIDATION


def test_cli_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "factor", "--mu", "bern_half", "--kernel", "bsc_0.7")
    assert code == 2 and json.loads(err)["error"] == E.NOT_PSD


def test_cli_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eta", "--mu", "bern_half", "--channel", "bsc_0.2", "--bogus"])
    assert exc.value.code == 2


def test_cli_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert len(rep["checks"]) >= 20


def test_cli_other_verbs(tmp_path, capsys):
    g = write(tmp_path, "g.txt", "3\n0 1\n1 2\n")
    assert run(capsys, "divergence", "--nu", "bern_0.2", "--mu", "bern_half")[0] == 0
    assert run(capsys, "bounds", "--mu", "bern_half", "--channel", "bsc_0.1")[0] == 0
    assert run(capsys, "tensor", "--mu", "bern_half", "--channel", "bsc_0.1")[0] == 0
    assert run(capsys, "sobolev", "--mu", "bern_half", "--kernel", "bsc_0.2")[0] == 0
    code, out, _ = run(capsys, "factor", "--mu", "bern_half", "--kernel", "bsc_0.18", "--bridge")
    assert code == 0 and json.loads(out)["residual"] < 1e-14
    code, out, _ = run(capsys, "fmmc", "--graph", g)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.25, abs=1e-6)
    assert run(capsys, "potts", "--graph", g, "--beta", "0.5")[0] == 0
    assert run(capsys, "info-sup", "--mu", "bern_half", "--channel", "bsc_0.2", "--samples", "20")[0] == 0
    assert run(capsys, "reconstruct", "--graph", g, "--beta", "0.5", "--A", "0", "--B", "2")[0] == 0


def test_console_script_module_entry():
    proc = subprocess.run([sys.executable, "-m", "contractkit.cli", "divergence", "--phi", "chi2",
                           "--nu", "bern_0.2", "--mu", "bern_half"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["divergence"] == pytest.approx(0.36, abs=1e-12)
