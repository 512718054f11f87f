import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nstime import app
from nstime.models import phi_mu

CAPTION_Z = [0.19, 0.61, 1.08, 2.05, 3.04, 4.03, 5.02, 6.02]


def run(capsys, *argv):
    code = app.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- eval -------------------------------------------------------------------


def test_eval_examples(capsys):
    assert run(capsys, "eval", "--model", "exp", "--K", "1", "--t", "0")[:2] == (0, "0\n")
    t = 1 / (2 * 0.61)
    code, out, _ = run(capsys, "eval", "--model", "bessel", "--mu", "1", "--a", "1", "--t", repr(t))
    assert code == 0
    assert float(out) == pytest.approx(phi_mu(1.0, 0.61), rel=1e-11)
    assert len(out.strip().replace(".", "").lstrip("0")) <= 12


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["eval", "--model", "exp", "--K", "2", "--t", "1"], "--K"),
        (["eval", "--model", "exp", "--t", "1"], "--K"),
        (["eval", "--model", "bhit", "--t", "1"], "--a"),
        (["eval", "--model", "bessel", "--a", "1", "--t", "1"], "--mu"),
        (["eval", "--model", "bessel", "--mu", "-1", "--a", "1", "--t", "1"], "--mu"),
        (["eval", "--model", "exp", "--K", "1", "--t", "-1"], "--t"),
        (["eval", "--model", "cubic", "--t", "1"], "--model"),
        (["eval", "--model", "exp", "--K", "abc", "--t", "1"], "--K"),
        (["curve", "--model", "exp", "--K", "1", "--points", "1", "--out", "x.csv"], "--points"),
        (["curve", "--model", "exp", "--K", "1", "--t-min", "2", "--t-max", "1", "--out", "x.csv"], "--t-min"),
        (["table", "--mu-list", "1,-2"], "--mu-list"),
        (["verify", "--model", "exp", "--K", "1", "--t", "1", "--paths", "10"], "--paths"),
        (["verify", "--model", "exp", "--K", "1", "--t", "1", "--dt", "0"], "--dt"),
        (["experiment-kstar", "--k-grid", "0.5,0.2"], "--k-grid"),
        (["quarter-checks", "--seed", "-3"], "--seed"),
    ],
)
def test_flag_errors_exit_2_and_name_flag(capsys, argv, flag, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert flag in err


def test_unknown_subcommand_exit_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2


# --- curve ------------------------------------------------------------------


def test_curve_two_points(capsys, tmp_path):
    out = tmp_path / "c.csv"
    assert run(capsys, "curve", "--model", "exp", "--K", "1", "--t-min", "0", "--t-max", "1", "--points", "2",
               "--out", str(out))[0] == 0
    header, rows, comments = app.read_csv(out)
    assert header == ["t", "m"] and len(rows) == 2 and rows[0][1] == 0.0
    assert not comments


def test_curve_unwritable_exit_3(capsys, tmp_path):
    target = tmp_path / "missing" / "c.csv"
    code, _, err = run(capsys, "curve", "--model", "exp", "--K", "1", "--out", str(target))
    assert code == 3 and "cannot write" in err


def test_curve_preset_figure1(capsys, tmp_path):
    assert run(capsys, "curve", "--preset", "figure1", "--out", str(tmp_path))[0] == 0
    files = sorted(tmp_path.glob("*.csv"))
    assert len(files) == 10
    for f in files:
        _, rows, _ = app.read_csv(f)
        assert all(0.0 <= m <= 0.25 for _, m in rows)
        assert rows[0][1] < 1e-3
        assert all(t1 > t0 for (t0, _), (t1, _) in zip(rows, rows[1:]))


@pytest.mark.parametrize("preset,count", [("figure2", 8), ("figure3", 2)])
def test_curve_other_presets(capsys, tmp_path, preset, count):
    assert run(capsys, "curve", "--preset", preset, "--out", str(tmp_path))[0] == 0
    assert len(list(tmp_path.glob("*.csv"))) == count


# --- table ------------------------------------------------------------------


def test_table_default(capsys):
    code, out, _ = run(capsys, "table")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "mu,z_mu,m_mu,m_prime_mu"
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    assert len(rows) == 8
    for (mu, z, m, mp), zc in zip(rows, CAPTION_Z):
        assert abs(z - zc) <= 0.01
        assert m <= mp
    assert rows[1][3] == pytest.approx(math.exp(-1) / 2, rel=1e-14)


def test_table_solver_failure_exit_4(capsys):
    code, _, err = run(capsys, "table", "--mu-list", "0.5,1e-9")
    assert code == 4 and "mu=1e-09" in err


# --- sup and kstar ----------------------------------------------------------


def test_sup(capsys):
    code, out, _ = run(capsys, "sup", "--model", "exp", "--K", "1")
    assert code == 0 and out.startswith("t_star=")


def test_experiment_kstar(capsys, tmp_path):
    out = tmp_path / "k.csv"
    assert run(capsys, "experiment-kstar", "--out", str(out))[0] == 0
    header, rows, comments = app.read_csv(out)
    assert header == ["K", "t_star", "m_star"] and len(rows) == 10
    assert all(0 < r[2] <= 0.25 for r in rows)
    assert len(comments) == 1 and comments[0].split("=")[1] in ("true", "false")
    assert out.read_text().splitlines()[-1].startswith("# monotone_nondecreasing=")


# --- verify -----------------------------------------------------------------


VERIFY_KEYS = ["model", "K", "a", "mu", "t", "seed", "paths", "dt", "closed_form", "mc_marginal", "se", "z_score",
               "mc_path", "se_path", "z_score_path", "pass"]


def test_verify_exp_deterministic(capsys, tmp_path):
    argv = ["verify", "--model", "exp", "--K", "1", "--t", "1", "--paths", "5000", "--seed", "4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    payload = json.loads(a.read_text())
    assert list(payload) == VERIFY_KEYS
    assert payload["pass"] is True


def test_verify_bhit(capsys):
    code, out, _ = run(capsys, "verify", "--model", "bhit", "--a", "1", "--t", "1", "--paths", "4000")
    payload = json.loads(out)
    assert code == 0 and payload["pass"] and payload["mc_path"] is not None


def test_verify_bessel_without_path(capsys):
    code, out, _ = run(capsys, "verify", "--model", "bessel", "--mu", "0.7", "--a", "1", "--t", "1",
                       "--paths", "4000")
    payload = json.loads(out)
    assert code == 0 and payload["mc_path"] is None


def test_verify_failure_exit_5_still_writes(capsys, tmp_path, monkeypatch):
    real = app.m_of
    monkeypatch.setattr(app, "m_of", lambda model, t: real(model, t) + 0.05)
    out = tmp_path / "v.json"
    code = run(capsys, "verify", "--model", "exp", "--K", "1", "--t", "1", "--paths", "2000", "--out", str(out))[0]
    assert code == 5
    assert json.loads(out.read_text())["pass"] is False


def test_report_lists_outputs_and_checks(capsys, tmp_path):
    rep = tmp_path / "r.json"
    csv = tmp_path / "c.csv"
    run(capsys, "curve", "--model", "bhit", "--a", "1", "--out", str(csv), "--report", str(rep))
    report = json.loads(rep.read_text())
    assert report["command"] == "curve"
    assert report["outputs"] == [str(csv)]
    assert all("measured" in c and "pass" in c for c in report["checks"])


# --- quarter-checks ---------------------------------------------------------


def test_quarter_checks_small(capsys, tmp_path):
    out = tmp_path / "q.json"
    code = run(capsys, "quarter-checks", "--paths", "1000", "--out", str(out))[0]
    payload = json.loads(out.read_text())
    assert code == (0 if payload["pass"] else 5)
    assert payload["per_path_max"] <= 0.25
    assert payload["sup_zz_dt_x100"] <= payload["sup_zz_dt_x10"] <= payload["sup_zz"]


def test_quarter_checks_window_miss_exit_5(capsys, monkeypatch):
    monkeypatch.setattr(app, "QUARTER_WINDOW", (0.2499999999, 0.25))
    assert run(capsys, "quarter-checks", "--paths", "1000", "--dt", "1e-2")[0] == 5


# --- plot and CSV -----------------------------------------------------------


def test_plot_deterministic_and_polylines(capsys, tmp_path):
    run(capsys, "curve", "--preset", "figure1", "--out", str(tmp_path))
    inputs = [str(p) for p in sorted(tmp_path.glob("m_K*.csv"))]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run(capsys, "plot", *inputs, "--out", str(a))[0] == 0
    assert run(capsys, "plot", *inputs, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.count("<polyline") == 10
    assert "m_K0.1" in text


def test_plot_empty_file_gives_axes_only(capsys, tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("x,y\n")
    out = tmp_path / "e.svg"
    assert run(capsys, "plot", str(src), "--out", str(out))[0] == 0
    text = out.read_text()
    assert "<line" in text and "points=\"\"" in text


@pytest.mark.parametrize(
    "content,line",
    [("x,y\n1,2\n3,x\n", 3), ("x,y\n1,2,3\n", 2), ("", 1), ("x,y\n# note\n1,2\n", 3), ("a,b,c\n1,2,3\n", 1)],
)
def test_plot_malformed_exit_3(capsys, tmp_path, content, line):
    src = tmp_path / "bad.csv"
    src.write_text(content)
    code, _, err = run(capsys, "plot", str(src), "--out", str(tmp_path / "o.svg"))
    assert code == 3
    assert f":{line}:" in err


def test_plot_missing_input_exit_3(capsys, tmp_path):
    assert run(capsys, "plot", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.svg"))[0] == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False),
                          st.floats(allow_nan=False, allow_infinity=False)), max_size=20),
       st.lists(st.from_regex(r"[a-z_=]{1,12}", fullmatch=True), max_size=2))
def test_csv_round_trip(rows, comments):
    import tempfile
    from pathlib import Path

    text = app.csv_text(("x", "y"), rows, comments)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "f.csv"
        path.write_bytes(text.encode())
        header, parsed, notes = app.read_csv(path)
    assert app.csv_text(header, parsed, notes) == text
    assert "\r" not in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nstime", "eval", "--model", "exp", "--K", "1", "--t", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout) == pytest.approx(0.126936737507, rel=1e-11)
