import csv
import io
import math
import os

import numpy as np
import pytest

from bipair import cli
from bipair.specfun import bessel_i


def run(tmp_path, *argv, name="out.csv"):
    path = tmp_path / name
    code = cli.main([*argv, "--out", str(path)])
    return code, path


def table(path):
    text = path.read_text()
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return [{k: float(v) for k, v in r.items()} for r in rows]


def comments(path):
    return [ln for ln in path.read_text().splitlines() if ln.startswith("#")]


def test_qscan_columns_and_header(tmp_path):
    code, path = run(tmp_path, "qscan")
    assert code == 0
    head = comments(path)
    assert head[0].startswith("# bipair 0.1.0 qscan")
    assert "# tail_tol=1e-12" in head and "# steps=7" in head
    rows = table(path)
    assert [r["zeta_abs"] for r in rows] == pytest.approx(np.arange(1, 8) * 0.25)
    assert list(rows[0]) == ["zeta_abs", "q_numeric", "q_closed_eq30", "n1_mean_numeric",
                             "n1_mean_closed_eq28", "cutoff_used"]
    for r in rows:
        assert r["n1_mean_numeric"] == pytest.approx(r["n1_mean_closed_eq28"], rel=1e-10)
        assert r["q_numeric"] == pytest.approx(r["q_closed_eq30"], abs=1e-10)


def test_qscan_is_byte_identical_on_rerun(tmp_path):
    _, path = run(tmp_path, "qscan", "--steps", "4")
    first = path.read_bytes()
    _, path = run(tmp_path, "qscan", "--steps", "4")
    assert path.read_bytes() == first


def test_qscan_general_charges_leave_closed_columns_empty(tmp_path):
    code, path = run(tmp_path, "qscan", "--q1", "1", "--n", "1", "--steps", "2")
    assert code == 0
    assert all(math.isnan(r["q_closed_eq30"]) for r in table(path))


def test_pk_at_two(tmp_path):
    code, path = run(tmp_path, "pk", "--zeta-abs", "2", "--kmax", "30")
    assert code == 0
    rows = table(path)
    p = np.array([r["p_k"] for r in rows])
    k = np.arange(len(p))
    assert math.fsum(p) == pytest.approx(1, abs=1e-10)
    mean = math.fsum(k * p)
    assert mean == pytest.approx(2 * bessel_i(2, 4).real / bessel_i(1, 4).real, rel=1e-10)
    ref = np.array([r["poisson_ref"] for r in rows])
    assert math.fsum(k * ref) == pytest.approx(mean, rel=1e-8)
    fano = float([c for c in comments(path) if c.startswith("# fano=")][0].split("=")[1])
    assert fano < 1


def test_cg_uniform_rows(tmp_path):
    code, path = run(tmp_path, "cg", "--kmax", "6")
    assert code == 0
    for r in table(path):
        expected = 1 / math.sqrt(r["k"] + 1)
        assert r["coefficient_formula"] == pytest.approx(expected, abs=1e-12)
        assert r["coefficient_oracle"] == pytest.approx(expected, abs=1e-12)


def test_cg_general_block(tmp_path):
    code, path = run(tmp_path, "cg", "--q1", "2", "--q2", "1", "--n", "2", "--kmax", "3")
    assert code == 0
    assert max(r["abs_diff"] for r in table(path)) <= 1e-9


def test_overlap(tmp_path):
    code, path = run(tmp_path, "overlap", "--zeta-re", "1.5", "--zeta-im", "0.5", "--q1", "1",
                     "--q2", "2", "--n", "1")
    assert code == 0
    head = dict(c[2:].split("=", 1) for c in comments(path) if "=" in c)
    assert float(head["ratio_spread"]) <= 1e-8
    assert len(table(path)) == 12


def test_verify_passes(tmp_path):
    code, path = run(tmp_path, "verify")
    assert code == 0
    text = path.read_text()
    assert "invariant,value,tolerance,passed,seconds" in text
    assert ",False," not in text


def test_steady_without_drive(tmp_path):
    code, path = run(tmp_path, "steady", "--g", "0", "--n1-cut", "4", "--n2-cut", "4",
                     "--method", "evolve")
    assert code == 0
    rows = table(path)
    assert rows[0]["t"] == 0
    assert all(r["dark_overlap"] == pytest.approx(1, abs=1e-14) for r in rows)


def test_steady_nullspace_reports_decomposition(tmp_path):
    code, path = run(tmp_path, "steady", "--g", "0.15", "--n1-cut", "6", "--n2-cut", "6")
    assert code == 0
    head = comments(path)
    assert any(c.startswith("# dark_weight n=0") for c in head)
    resid = float([c for c in head if c.startswith("# dark_condition_residual=")][0].split("=")[1])
    assert resid <= 1e-8


@pytest.mark.parametrize("argv", [
    ["qscan", "--steps", "0"],
    ["qscan", "--tail-tol", "-1"],
    ["qscan", "--zeta-min", "2", "--zeta-max", "1"],
    ["pk", "--q1", "-1"],
    ["steady", "--method", "euler"],
    ["nosuch"],
])
def test_config_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(argv)
    assert e.value.code == 2


def test_value_error_exit_2(tmp_path):
    code, path = run(tmp_path, "steady", "--kappa", "1", "--dt", "10", "--method", "evolve",
                     "--n1-cut", "3", "--n2-cut", "3")
    assert code == 2
    assert not path.exists()


def test_check_failure_exit_3(tmp_path, monkeypatch):
    monkeypatch.setattr(cli.stats, "mandel_q_numeric", lambda *a, **k: 0.0)
    monkeypatch.setattr(cli, "CHECKS", [("broken", lambda rng: (1.0, 0.5))])
    code, path = run(tmp_path, "verify")
    assert code == 3
    assert "broken,1.0,0.5,False" in path.read_text()


def test_nonconvergence_exit_4_leaves_no_file(tmp_path):
    code, path = run(tmp_path, "steady", "--n1-cut", "4", "--n2-cut", "4", "--method", "evolve",
                     "--max-steps", "10")
    assert code == 4
    assert not path.exists()
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]


def test_stdout_default(capsys):
    assert cli.main(["cg", "--kmax", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# bipair")
    assert "0,0,0,1,1,0," in out
