import json
import math
import shutil
import subprocess

import numpy as np
import pytest

from spincat import cli, pipeline
from spincat.basis import EmptySector
from spincat.fisher import _collective_pair_sizes
from spincat.models import build_fe4, build_mn6_family
from spincat.operators import model_to_json
from spincat.pipeline import (RunConfig, TableRow, grid, plm_sweep,
                              ring_scaling, run_analysis, table1)
from spincat.version import VERSION


def test_analysis_result_internal_consistency(analysis):
    res = analysis("fe4", 5.0, -5.0)
    assert res.model_key == "fe4"
    assert (res.m1, res.m2) == (5.0, -5.0)
    assert res.fisher == pytest.approx(4.0 * res.variance, rel=1e-12)
    assert res.d_fi == pytest.approx(res.variance / 10.0, rel=1e-12)
    assert res.fisher_bound == pytest.approx(400.0)
    assert 0.0 < res.d_fi <= 10.0
    assert res.d_rfi is not None and res.d_rfi > res.d_fi
    assert np.shape(res.field) == (4, 3)
    assert res.energies[0] == pytest.approx(res.energies[1], abs=1e-8)
    assert res.s_squared[0] == pytest.approx(30.0, abs=1e-8)
    for ov in res.overlap_with_collinear:
        assert 0.0 < ov <= 1.0
    st = res.staggered
    assert st["psi1"]["mean"] == pytest.approx(-st["psi2"]["mean"], abs=1e-8)
    assert st["superposition"]["mean"] == pytest.approx(0.0, abs=1e-8)
    assert res.d_lm == res.partition["n_parts"] >= 1
    covered = sorted(s for part in res.partition["parts"] for s in part)
    assert covered == [0, 1, 2, 3]
    for p in res.partition["per_part_probability"]:
        assert p > 1.0 - res.config.delta


def test_json_payload_is_reproducible():
    a = run_analysis(RunConfig(model="fe4", m1=5.0, m2=-5.0))
    b = run_analysis(RunConfig(model="fe4", m1=5.0, m2=-5.0))
    assert a.to_json(include_timings=False) == b.to_json(include_timings=False)
    doc = json.loads(a.to_json())
    assert doc["version"] == VERSION
    assert doc["model"] == "fe4"
    assert doc["config"] == a.config.to_dict()
    assert "timings" in doc
    assert "timings" not in json.loads(a.to_json(include_timings=False))


def test_closed_form_analysis():
    res = run_analysis(RunConfig(model="mn10"))
    assert res.closed_form
    assert res.d_fi == 23.0 and res.d_lm == 10
    assert res.d_rfi is None and res.d_rfi_divergent
    assert res.staggered["psi1"]["mean"] == 23.0
    assert "closed form" in pipeline.render_analysis(res)
    res = run_analysis(RunConfig(model="tb", closed_form=True))
    assert res.d_fi == 6.0 and res.d_lm == 1
    with pytest.raises(ValueError):
        run_analysis(RunConfig(model="fe4", closed_form=True))


def test_equal_sectors_are_rejected():
    with pytest.raises(EmptySector):
        run_analysis(RunConfig(model="fe4", m1=5.0, m2=5.0))


def test_file_model_needs_explicit_sectors(tmp_path, analysis):
    path = tmp_path / "fe4.json"
    path.write_text(model_to_json(build_fe4()) + "\n")
    with pytest.raises(ValueError):
        run_analysis(RunConfig(model=str(path)))
    res = run_analysis(RunConfig(model=str(path), m1=5.0, m2=-5.0))
    assert res.model_key == "fe4"
    assert res.d_fi == pytest.approx(analysis("fe4", 5.0, -5.0).d_fi,
                                     abs=1e-9)


def test_v15_supports_only_the_two_doublets():
    with pytest.raises(ValueError):
        run_analysis(RunConfig(model="v15", m1=1.0, m2=-1.0))
    with pytest.raises(ValueError):
        run_analysis(RunConfig(model="v15", m1=0.5, m2=-1.5))


def test_grid_over_ground_multiplet(tmp_path):
    result = grid(RunConfig(model="fe4"))
    assert result.ms == [m / 2.0 for m in range(-10, 11, 2)]
    n = len(result.ms)
    assert result.d_fi.shape == (n, n) and result.d_rfi.shape == (n, n)
    assert np.all(np.diag(result.d_fi) == 0.0)
    assert np.array_equal(result.d_fi, result.d_fi.T)
    assert np.array_equal(result.d_rfi, result.d_rfi.T)
    off = ~np.eye(n, dtype=bool)
    assert np.all(result.d_fi[off] > 0.0)
    assert result.d_fi[0, n - 1] == pytest.approx(np.max(result.d_fi))

    out = tmp_path / "grid.csv"
    with open(out, "w") as fh:
        pipeline.write_grid_csv(result, fh)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# spincat ")
    assert lines[1].startswith("# config: ")
    assert lines[2] == "M1,M2,D_FI,D_RFI"
    body = lines[3:]
    assert len(body) == n * n
    cell = body[n - 1].split(",")  # first row, last column
    assert float(cell[0]) == -5.0 and float(cell[1]) == 5.0
    assert float(cell[2]) == result.d_fi[0, n - 1]

    with pytest.raises(ValueError):
        grid(RunConfig(model="mn10"))
    path = tmp_path / "fe4.json"
    path.write_text(model_to_json(build_fe4()) + "\n")
    with pytest.raises(ValueError):
        grid(RunConfig(model=str(path)))


def test_single_spin_discrimination_sweep(tmp_path):
    result = plm_sweep(RunConfig(model="fe4"))
    ms = [r[0] for r in result.rows]
    assert ms == sorted(ms, reverse=True)
    assert set(ms) == {5.0, 4.0, 3.0, 2.0, 1.0}
    assert [r[1] for r in result.rows[:4]] == ["s0", "s1", "s2", "s3"]
    for _, _, p in result.rows:
        assert 0.5 - 1e-12 <= p <= 1.0 + 1e-12

    out = tmp_path / "plm.csv"
    with open(out, "w") as fh:
        pipeline.write_plm_csv(result, fh)
    lines = out.read_text().splitlines()
    assert lines[2] == "M,subset_id,P"
    assert len(lines) == 3 + len(result.rows)


def test_ring_scaling_study(ring_result, tmp_path):
    result = ring_result
    assert [r["s_a"] for r in result.rows] == [1.0, 1.5, 2.0, 2.5]
    assert [r["S"] for r in result.rows] == [3.0, 6.0, 9.0, 12.0]
    fi = [r["d_fi"] for r in result.rows]
    rfi = [r["d_rfi"] for r in result.rows]
    assert fi == sorted(fi) and rfi == sorted(rfi)
    assert result.fit_d_fi["slope"] > 0
    assert result.fit_log_d_rfi["slope"] > 0
    assert len(result.d_rfi_ratios) == 3
    ideal = _collective_pair_sizes(build_mn6_family(2.5).cluster)
    assert result.ideal_bound_d_fi == pytest.approx(ideal[0])

    out = tmp_path / "ring.csv"
    with open(out, "w") as fh:
        pipeline.write_ring_csv(result, fh)
    lines = out.read_text().splitlines()
    assert sum(1 for ln in lines if ln.startswith("#")) == 6
    assert lines[6] == "s_A,S,D_FI,D_RFI"
    assert len(lines) == 7 + 4
    first = lines[7].split(",")
    assert float(first[0]) == 1.0 and float(first[2]) == fi[0]


def test_table_command_plumbing(monkeypatch, tmp_path, capsys):
    rows = (
        TableRow("mn10", "mn10", 23.0, -23.0, 23.0, 1e-12, math.inf, 0.0, 10),
        TableRow("tb", "tb", 6.0, -6.0, 6.0, 1e-12, math.inf, 0.0, 1),
        TableRow("tb_bad", "tb", 6.0, -6.0, 5.0, 0.01, math.inf, 0.0, 1),
        TableRow("never_runs", "mn12_set1", 10.0, -10.0, 14.4, 0.01, 45.4,
                 0.03, 8, extended=True),
    )
    monkeypatch.setattr(pipeline, "TABLE1_ROWS", rows)
    result = table1(RunConfig(model=""))
    labels = [r["label"] for r in result.rows]
    assert labels == ["mn10", "tb", "tb_bad"]
    assert result.rows[0]["ok"] and result.rows[1]["ok"]
    assert not result.rows[2]["ok"] and not result.all_ok
    rendered = pipeline.render_table1(result)
    assert "MISMATCH" in rendered and "some rows outside tolerance" in rendered

    out = tmp_path / "table.csv"
    code = cli.main(["table1", "--out", str(out)])
    assert code == cli.EXIT_TOLERANCE
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines[2].startswith("system,M1,M2,policy,")
    assert len(lines) == 3 + 3


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["analyze", "nosuchmodel"]) == 2
    assert cli.main(["analyze", "fe4", "--m1", "5", "--m2", "5"]) == 4
    assert cli.main(["analyze", "fe4", "--max-sector-dim", "1"]) == 4
    assert cli.main(["analyze", "fe4", "--closed-form"]) == 2
    assert cli.main(["export-model", "v15"]) == 2
    assert cli.main(["grid", "mn10"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["analyze", str(bad), "--m1", "1", "--m2", "-1"]) == 3
    assert cli.main(["analyze", "cr7ni", "--tol", "1e-14", "--max-iter", "2",
                     "--dense-threshold", "0"]) == 5
    capsys.readouterr()


def test_cli_analyze_writes_json(tmp_path, capsys):
    out = tmp_path / "fe4.json"
    assert cli.main(["analyze", "fe4", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "D_FI" in printed
    doc = json.loads(out.read_text())
    assert doc["model"] == "fe4"
    assert doc["m1"] == 5.0 and doc["m2"] == -5.0
    assert doc["d_fi"] > 0


def test_cli_export_model_round_trip(tmp_path, capsys):
    out = tmp_path / "model.json"
    assert cli.main(["export-model", "fe4", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["name"] == "fe4"
    assert len(doc["exchange"]) == 3 and len(doc["sites"]) == 4
    capsys.readouterr()


def test_cli_negative_half_integer_sectors(tmp_path, capsys):
    out = tmp_path / "v15.json"
    code = cli.main(["analyze", "v15", "--m1", "1/2", "--m2", "-1/2",
                     "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["m1"] == 0.5 and doc["m2"] == -0.5
    capsys.readouterr()


def test_parse_m_values():
    assert cli.parse_m("2") == 2.0
    assert cli.parse_m("-2") == -2.0
    assert cli.parse_m("3/2") == 1.5
    assert cli.parse_m("-3/2") == -1.5
    assert cli.parse_m("1.5") == 1.5
    assert cli.parse_m("+5") == 5.0
    import argparse
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_m("3/4")
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_m("0.3")


def test_join_m_flags():
    argv = ["analyze", "fe4", "--m1", "5", "--m2", "-1/2", "--seed", "7"]
    joined = cli._join_m_flags(argv)
    assert joined == ["analyze", "fe4", "--m1=5", "--m2=-1/2",
                      "--seed", "7"]


def test_bad_m_flag_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "fe4", "--m1", "0.3"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_console_script_version():
    exe = shutil.which("spincat")
    assert exe, "console script not installed"
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "spincat %s" % VERSION
