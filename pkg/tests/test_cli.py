import csv
import io
import os
import shutil
import subprocess

import numpy as np
import pytest

from tdisagg.cli import main
from tdisagg.frame import parse_csv

TABLE = "index,grain,y,X\n" + "".join(
    f"{2000 + k},{g},{v},{x}\n"
    for k, v in enumerate([1000.0, 1100.0, 1050.0, 1200.0, 1300.0, 1250.0, 1400.0, 1500.0])
    for g, x in zip(range(1, 5), [80.21 + 3 * k, 91.13 + 2 * k, 85.44 + 4 * k, 92.32 + k])
)


@pytest.fixture
def table(tmp_path):
    p = tmp_path / "in.csv"
    p.write_text(TABLE)
    return p


@pytest.fixture
def synth_file(tmp_path):
    p = tmp_path / "synth.csv"
    assert main(["synth", "--n-low", "12", "-m", "4", "-o", str(p)]) == 0
    return p


def test_validate_ok_and_error(table, tmp_path, capsys):
    assert main(["validate", "-i", str(table)]) == 0
    assert "ok" in capsys.readouterr().out
    bad = tmp_path / "bad.csv"
    bad.write_text("index,grain,y,X\n2000,1,1000,1\n2000,2,999,2\n")
    assert main(["validate", "-i", str(bad)]) == 1
    assert "InconsistentGroupTarget" in capsys.readouterr().out


def test_fit_average_chow_lin_opt(table, tmp_path, capsys):
    out = tmp_path / "out.csv"
    assert main(["fit", "-i", str(table), "-o", str(out), "--method", "chow-lin-opt", "--conversion", "average"]) == 0
    text = capsys.readouterr().out
    assert "rho = " in text and "consistent" in text
    rho = float(text.split("rho = ")[1].split()[0])
    assert -0.9 <= rho <= 0.99
    f = parse_csv(out.read_bytes())
    assert "y_hat" in f.extras
    means = f.extras["y_hat"].reshape(-1, 4).mean(axis=1)
    np.testing.assert_allclose(means, f.y_low, rtol=1e-9)


def test_fit_uniform_to_stdout(tmp_path, capsys):
    p = tmp_path / "u.csv"
    p.write_text("index,grain,y,X\n1,1,100,1\n1,2,100,2\n1,3,100,3\n1,4,100,4\n")
    assert main(["fit", "-i", str(p), "--method", "uniform", "--conversion", "sum"]) == 0
    f = parse_csv(capsys.readouterr().out.encode())
    assert f.extras["y_hat"].tolist() == [25.0, 25.0, 25.0, 25.0]


def test_fit_with_adjust_and_plot(synth_file, tmp_path, capsys):
    out, svg = tmp_path / "o.csv", tmp_path / "o.svg"
    argv = ["fit", "-i", str(synth_file), "-o", str(out), "--method", "chow-lin", "--rho", "0.4",
            "--no-intercept", "--adjust", "--plot", str(svg)]
    assert main(argv) == 0
    f = parse_csv(out.read_bytes())
    assert {"y_hat", "y_hat_adjusted", "y_true"} <= set(f.extras)
    assert svg.read_text().count("<polyline") == 2


def test_missing_input_file(capsys):
    assert main(["fit", "-i", "/nonexistent/file.csv"]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_option_is_input_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["fit", "--rho-bounds", "nonsense"])
    assert info.value.code == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "c.csv"
    p.write_text("index,grain,y,X\n1,1,4,1\n1,2,4,1\n2,1,8,1\n2,2,8,1\n")
    assert main(["fit", "-i", str(p), "--method", "chow-lin", "--rho", "0.5"]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_compare_csv_contract(synth_file, capsys):
    assert main(["compare", "-i", str(synth_file), "--methods", "uniform,denton,chow-lin:0.5,ols",
                 "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:4] == ["method", "mae", "rmse", "mse"]
    assert rows[0][4:] == ["mae_hf", "rmse_hf", "mse_hf"]  # y_true present
    body = {r[0]: [float(v) for v in r[1:]] for r in rows[1:]}
    assert body["uniform"][:3] == [0.0, 0.0, 0.0]
    for vals in body.values():
        assert abs(vals[2] - vals[1] ** 2) <= 1e-9 * max(1.0, vals[2])
        assert abs(vals[5] - vals[4] ** 2) <= 1e-9 * max(1.0, vals[5])


def test_compare_table(table, capsys):
    assert main(["compare", "-i", str(table), "--methods", "denton,fernandez"]) == 0
    assert capsys.readouterr().out.splitlines()[0].split() == ["method", "mae", "rmse", "mse"]


def test_ensemble_command(synth_file, tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert main(["ensemble", "-i", str(synth_file), "-o", str(out), "--methods", "ols,fernandez,chow-lin:0.5"]) == 0
    assert "weight" in capsys.readouterr().out
    assert "y_hat" in parse_csv(out.read_bytes()).extras


def test_adjust_command(tmp_path, capsys):
    p = tmp_path / "pred.csv"
    p.write_text("index,grain,y,X,y_hat\n1,1,8,1,-2\n1,2,8,1,5\n1,3,8,1,5\n")
    out = tmp_path / "adj.csv"
    assert main(["adjust", "-i", str(p), "-o", str(out)]) == 0
    f = parse_csv(out.read_bytes())
    assert f.extras["y_hat_adjusted"].tolist() == [0.0, 4.0, 4.0]
    assert "redistribute" in capsys.readouterr().out


def test_retropolate_command(tmp_path, capsys):
    rows = "".join(f"{k},{g},{'' if k == 5 else 2 * (4 * k + 10)},{k + g / 4}\n" for k in range(1, 6) for g in range(1, 5))
    p = tmp_path / "r.csv"
    p.write_text("index,grain,y,X\n" + rows)
    out = tmp_path / "r_out.csv"
    assert main(["retropolate", "-i", str(p), "-o", str(out), "--method", "linear"]) == 0
    f = parse_csv(out.read_bytes())
    assert f.y_low[-1] == pytest.approx(2 * (4 * 5 + 10))


def test_fit_fills_missing_targets(tmp_path, capsys):
    rows = "".join(f"{k},{g},{'' if k == 1 else 8 * k},{k}\n" for k in range(1, 9) for g in range(1, 3))
    p = tmp_path / "gap.csv"
    p.write_text("index,grain,y,X\n" + rows)
    assert main(["fit", "-i", str(p), "-o", str(tmp_path / "o.csv"), "--method", "denton", "--retro", "linear"]) == 0
    assert "imputed" in capsys.readouterr().err


def test_plot_command(tmp_path):
    p = tmp_path / "pred.csv"
    p.write_text("index,grain,y,X,y_hat\n" + "".join(f"{k},{g},10,1,{k + g}\n" for k in (1, 2) for g in range(1, 5)))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert main(["plot", "-i", str(p), "-o", str(a)]) == 0
    assert main(["plot", "-i", str(p), "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().count("<polyline") == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("index,grain,y,X,y_hat\n")
    assert main(["plot", "-i", str(empty), "-o", str(a)]) == 1
    nohat = tmp_path / "nohat.csv"
    nohat.write_text("index,grain,y,X\n1,1,1,1\n")
    assert main(["plot", "-i", str(nohat), "-o", str(a)]) == 1


def test_no_pad_drops_boundary(tmp_path, capsys):
    p = tmp_path / "ragged.csv"
    p.write_text(TABLE + "2008,1,900,90\n2008,2,900,91\n")
    out = tmp_path / "o.csv"
    assert main(["fit", "-i", str(p), "-o", str(out), "--method", "denton", "--no-pad"]) == 0
    assert "dropped" in capsys.readouterr().err
    assert 2008 not in parse_csv(out.read_bytes()).group_keys


def test_synth_seeded(tmp_path):
    a, b, c = (tmp_path / f"{n}.csv" for n in "abc")
    main(["synth", "-o", str(a), "--seed", "7"])
    main(["synth", "-o", str(b), "--seed", "7"])
    main(["synth", "-o", str(c), "--seed", "8"])
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


@pytest.mark.skipif(shutil.which("tdisagg") is None, reason="console script not installed")
def test_console_script(table):
    r = subprocess.run(["tdisagg", "validate", "-i", str(table)], capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run(["tdisagg", "fit", "-i", str(table) + ".missing"], capture_output=True, text=True,
                       env={"TDISAGG_LOG": "debug", "PATH": os.environ["PATH"]})
    assert r.returncode == 1 and r.stderr
