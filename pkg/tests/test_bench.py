"""Command-line benchmark: report schema, exit codes, sweeps."""

import csv
import io
import json

import pytest

import spand.bench as bench
from spand.bench import main
from spand.errors import BreakdownError

REPORT_KEYS = {
    "config",
    "tP",
    "tF",
    "tS",
    "nCG",
    "sizeTop",
    "memF",
    "perLevel",
    "residuals",
    "status",
}
CONFIG_KEYS = {
    "gen",
    "matrix",
    "n",
    "rho",
    "seed",
    "eps",
    "variant",
    "levels",
    "skip",
    "backend",
    "tol",
    "maxit",
    "rhs",
}

SPD_2X2 = """%%MatrixMarket matrix coordinate real symmetric
% tiny example
2 2 3
1 1 4.0
2 1 2.0
2 2 3.0
"""

INDEFINITE_2X2 = """%%MatrixMarket matrix coordinate real symmetric
2 2 3
1 1 1.0
2 1 2.0
2 2 1.0
"""

PATH_5 = """%%MatrixMarket matrix coordinate real symmetric
5 5 9
1 1 2.0
2 2 2.0
3 3 2.0
4 4 2.0
5 5 2.0
2 1 -1.0
3 2 -1.0
4 3 -1.0
5 4 -1.0
"""


def run_json(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def run_csv(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out)))


class TestSingleRun:
    def test_report_schema(self, capsys):
        code, report = run_json(capsys, "--gen", "lap2d", "--n", "16", "--eps", "1e-2")
        assert code == 0
        assert set(report) == REPORT_KEYS
        assert set(report["config"]) == CONFIG_KEYS
        assert report["status"] == "ok"
        assert report["nCG"] >= 1
        assert report["sizeTop"] >= 1
        assert report["memF"] >= 1
        assert report["residuals"][-1] <= 1e-12

    def test_config_echo(self, capsys):
        _, report = run_json(
            capsys,
            "--gen", "lap3d", "--n", "8", "--rho", "100", "--seed", "7",
            "--eps", "0.5", "--variant", "ins", "--levels", "2", "--skip", "1",
            "--backend", "graph", "--tol", "1e-8", "--maxit", "40", "--rhs", "random",
        )
        cfg = report["config"]
        assert cfg["gen"] == "lap3d"
        assert cfg["matrix"] is None
        assert cfg["n"] == 8
        assert cfg["rho"] == 100.0
        assert cfg["seed"] == 7
        assert cfg["eps"] == 0.5
        assert cfg["variant"] == "ins"
        assert cfg["levels"] == 2
        assert cfg["skip"] == 1
        assert cfg["backend"] == "graph"
        assert cfg["tol"] == 1e-8
        assert cfg["maxit"] == 40
        assert cfg["rhs"] == "random"

    def test_per_level_records(self, capsys):
        _, report = run_json(
            capsys, "--gen", "lap2d", "--n", "32", "--eps", "1e-2", "--levels", "4"
        )
        per = report["perLevel"]
        assert len(per) == report["config"]["levels"] == 4
        assert [rec["level"] for rec in per] == [4, 3, 2, 1]
        for rec in per:
            assert set(rec) == {"level", "tElim", "tScale", "tSparsify", "tMerge", "cumNnz"}
        nnz = [rec["cumNnz"] for rec in per]
        assert all(a <= b for a, b in zip(nnz, nnz[1:]))
        assert nnz[-1] == report["memF"]

    def test_phase_times_bounded_by_factor_time(self, capsys):
        _, report = run_json(capsys, "--gen", "lap2d", "--n", "64", "--eps", "1e-4")
        phases = sum(
            rec["tElim"] + rec["tScale"] + rec["tSparsify"] + rec["tMerge"]
            for rec in report["perLevel"]
        )
        # merge bookkeeping between the timed phases is the only untimed work
        assert phases <= report["tF"] * 1.05 + 1e-3

    def test_moderate_contrast_iteration_count(self, capsys):
        code, report = run_json(
            capsys,
            "--gen", "lap2d", "--n", "32", "--rho", "1",
            "--eps", "1e-4", "--variant", "orths",
        )
        assert code == 0
        assert report["status"] == "ok"
        assert report["nCG"] <= 15

    def test_matrix_file_exact_mode(self, tmp_path, capsys):
        path = tmp_path / "m.mtx"
        path.write_text(SPD_2X2)
        code, report = run_json(
            capsys,
            "--matrix", str(path), "--eps", "0", "--variant", "orths", "--tol", "1e-12",
        )
        assert code == 0
        assert report["config"]["n"] == 2
        assert report["nCG"] <= 2

    def test_matrix_with_coords_geo(self, tmp_path, capsys):
        mpath = tmp_path / "p.mtx"
        mpath.write_text(PATH_5)
        cpath = tmp_path / "p.xy"
        cpath.write_text("".join(f"{i}.0 0.0\n" for i in range(5)))
        code, report = run_json(
            capsys,
            "--matrix", str(mpath), "--coords", str(cpath),
            "--backend", "geo", "--eps", "0", "--levels", "2",
        )
        assert code == 0
        assert report["config"]["backend"] == "geo"
        assert report["nCG"] <= 2

    def test_out_writes_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["--gen", "lap2d", "--n", "16", "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == ""
        report = json.loads(out.read_text())
        assert report["status"] == "ok"

    def test_deterministic_given_seed(self, capsys):
        argv = ("--gen", "lap2d", "--n", "16", "--rho", "100", "--seed", "3",
                "--eps", "1e-2", "--rhs", "random")
        _, first = run_json(capsys, *argv)
        _, second = run_json(capsys, *argv)
        for key in ("nCG", "sizeTop", "memF", "residuals"):
            assert first[key] == second[key]

    def test_rhs_variants_both_solve(self, capsys):
        for rhs in ("ones", "random"):
            code, report = run_json(
                capsys, "--gen", "lap2d", "--n", "16", "--rhs", rhs
            )
            assert code == 0
            assert report["status"] == "ok"


class TestExitCodes:
    def test_usage_needs_an_input(self, capsys):
        assert main([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_usage_rejects_both_inputs(self, tmp_path, capsys):
        path = tmp_path / "m.mtx"
        path.write_text(SPD_2X2)
        assert main(["--matrix", str(path), "--gen", "lap2d"]) == 1
        capsys.readouterr()

    def test_usage_unknown_flag(self, capsys):
        assert main(["--gen", "lap2d", "--frobnicate"]) == 1
        capsys.readouterr()

    def test_usage_coords_without_matrix(self, capsys):
        assert main(["--gen", "lap2d", "--coords", "c.xy"]) == 1
        capsys.readouterr()

    def test_missing_matrix_file(self, tmp_path, capsys):
        assert main(["--matrix", str(tmp_path / "absent.mtx")]) == 1
        capsys.readouterr()

    def test_skip_exceeding_levels(self, capsys):
        assert main(["--gen", "lap2d", "--n", "16", "--levels", "2", "--skip", "5"]) == 1
        capsys.readouterr()

    def test_breakdown_exits_2(self, tmp_path, capsys):
        path = tmp_path / "ind.mtx"
        path.write_text(INDEFINITE_2X2)
        code = main(["--matrix", str(path), "--eps", "0"])
        report = json.loads(capsys.readouterr().out)
        assert code == 2
        assert report["status"] == "breakdown"
        assert set(report["breakdown"]) == {"level", "cluster", "pivot"}
        assert report["breakdown"]["pivot"] == 1

    def test_nonconvergence_exits_3(self, capsys):
        # needs ~22 iterations at this tolerance; 5 cannot suffice
        code, report = run_json(
            capsys,
            "--gen", "lap2d", "--n", "32", "--rho", "1000", "--eps", "0.9",
            "--levels", "4", "--tol", "1e-12", "--maxit", "5",
        )
        assert code == 3
        assert report["status"] == "noconv"
        assert report["nCG"] == 5


class TestSweep:
    def test_cartesian_rows(self, capsys):
        code, rows = run_csv(
            capsys, "--gen", "lap2d", "--sweep", "n=8,16;eps=0.5,1e-2", "--levels", "1"
        )
        assert code == 0
        assert len(rows) == 4
        assert [(r["n"], r["eps"]) for r in rows] == [
            ("8", "0.5"), ("8", "0.01"), ("16", "0.5"), ("16", "0.01"),
        ]
        assert all(r["status"] == "ok" for r in rows)

    def test_header_matches_contract(self, capsys):
        main(["--sweep", "n=8", "--levels", "1"])
        header = capsys.readouterr().out.splitlines()[0]
        assert header.split(",") == bench._CSV_COLUMNS

    def test_defaults_to_generator(self, capsys):
        # sweeps always generate; omitting --gen falls back to lap2d
        _, rows = run_csv(capsys, "--sweep", "n=8", "--levels", "1")
        assert rows[0]["gen"] == "lap2d"

    def test_unswept_keys_use_flag_values(self, capsys):
        _, rows = run_csv(
            capsys,
            "--sweep", "n=8", "--rho", "100", "--variant", "ins", "--levels", "1",
        )
        assert rows[0]["rho"] == "100.0"
        assert rows[0]["variant"] == "ins"

    def test_scaling_sweep_iterations_stay_flat(self, capsys):
        code, rows = run_csv(
            capsys, "--sweep", "n=16,32,64;eps=1e-4;rho=1;variant=orths", "--gen", "lap2d"
        )
        assert code == 0
        assert len(rows) == 3
        counts = [int(r["nCG"]) for r in rows]
        assert all(r["status"] == "ok" for r in rows)
        # n=16 sits in the near-exact regime (one iteration), so the
        # no-growth bound is meaningful from n=32 up
        assert counts == [1, 3, 3]
        assert max(counts[1:]) < 2 * min(counts[1:])

    def test_empty_spec_header_only(self, capsys):
        code = main(["--sweep", ""])
        out = capsys.readouterr().out
        assert code == 0
        assert out.splitlines() == [",".join(bench._CSV_COLUMNS)]

    def test_out_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(["--sweep", "n=8,16", "--levels", "1", "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == ""
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert [r["n"] for r in rows] == ["8", "16"]

    def test_continues_past_breakdown(self, capsys, monkeypatch):
        real = bench.factorize

        def failing(a, hierarchy, opts, hooks=None):
            if opts.variant == "in":
                raise BreakdownError("forced", pivot=0, level=1, cluster=0)
            return real(a, hierarchy, opts, hooks)

        monkeypatch.setattr(bench, "factorize", failing)
        code, rows = run_csv(
            capsys, "--sweep", "variant=in,orths;n=8", "--levels", "1"
        )
        assert code == 0
        assert [r["status"] for r in rows] == ["breakdown", "ok"]
        assert int(rows[1]["nCG"]) >= 1

    def test_rejects_matrix_input(self, tmp_path, capsys):
        path = tmp_path / "m.mtx"
        path.write_text(SPD_2X2)
        assert main(["--sweep", "n=8", "--matrix", str(path)]) == 1
        capsys.readouterr()

    @pytest.mark.parametrize("spec", ["bogus=3", "n=abc", "eps", "variant=fast"])
    def test_rejects_bad_specs(self, spec, capsys):
        assert main(["--sweep", spec]) == 1
        capsys.readouterr()
