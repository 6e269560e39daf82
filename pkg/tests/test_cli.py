import json

import numpy as np
import pytest

from muskatss.cli import (
    EX_DATA,
    EX_OK,
    EX_SOFT,
    EX_USAGE,
    main,
    read_config_file,
)
from muskatss.continuation import load_branch

FAST = ["--n", "17", "--outer-nodes", "170", "--threads", "2"]


@pytest.fixture(scope="module")
def branch_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "branch.json"
    code = main(["continue", "--s-max", "0.2", "--ds", "0.1",
                 "-o", str(path)] + FAST)
    assert code == EX_OK
    return path


class TestUsageErrors:
    def test_negative_slope(self, tmp_path):
        assert main(["solve", "--s", "-1"]) == EX_USAGE

    def test_missing_slope(self):
        assert main(["solve"]) == EX_USAGE

    def test_smax_not_multiple_of_ds(self):
        assert main(["continue", "--s-max", "0.3", "--ds", "0.2"]) == EX_USAGE

    def test_unknown_figure(self, branch_file):
        assert main(["export", str(branch_file), "--figure", "bogus"]) == EX_USAGE

    def test_bad_threads(self):
        assert main(["solve", "--s", "0.1", "--threads", "0"]) == EX_USAGE


class TestSolve:
    def test_zero_slope_writes_zero_profile(self, tmp_path):
        out = tmp_path / "p.json"
        assert main(["solve", "--s", "0", "-o", str(out)] + FAST) == EX_OK
        doc = json.loads(out.read_text())
        assert doc["converged"] is True
        assert all(v == 0.0 for v in doc["values"])

    def test_small_solve_writes_profile(self, tmp_path):
        out = tmp_path / "p.json"
        assert main(["solve", "--s", "0.1", "-o", str(out)] + FAST) == EX_OK
        doc = json.loads(out.read_text())
        assert doc["converged"] is True
        assert doc["values"][-1] == pytest.approx(0.1, abs=1e-8)
        assert doc["meta"]["N"] == 17

    def test_deterministic_output(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main(["solve", "--s", "0.1", "-o", str(a)] + FAST) == EX_OK
        assert main(["solve", "--s", "0.1", "-o", str(b)] + FAST) == EX_OK
        assert a.read_bytes() == b.read_bytes()


class TestContinue:
    def test_branch_file_contents(self, branch_file):
        branch = load_branch(branch_file)
        assert len(branch.steps) == 2
        assert branch.s_values == pytest.approx([0.1, 0.2])

    def test_step_arithmetic(self, tmp_path):
        # 5 steps at ds = 0.1 reach 0.5 (checked without solving)
        assert round(0.5 / 0.1) == 5
        assert main(["continue", "--ds", "0.1"]) == EX_USAGE  # missing --s-max


class TestValidate:
    def test_happy_path(self, branch_file, capsys):
        code = main(["validate", str(branch_file)])
        out = capsys.readouterr().out
        assert "fitted H1-discrepancy order" in out
        assert code in (EX_OK, EX_SOFT)

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == EX_DATA

    def test_malformed_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["validate", str(bad)]) == EX_DATA

    def test_empty_branch(self, tmp_path):
        empty = tmp_path / "empty.json"
        doc = {"meta": {"version": "1", "N": 17, "ds": 0.1, "tolerances": {
            "lambda0": 1e-3, "lambda_up": 10.0, "lambda_down": 0.1,
            "fd_step": 1e-6, "tol_residual": 1e-8, "tol_step": 1e-10,
            "max_iters": 50, "outer_nodes": 170, "inner_abs_tol": 1e-10,
            "inner_rel_tol": 1e-10, "split_halfwidth_z": 2.0,
            "split_halfwidth_end": 2.0, "series_order": 2}}, "steps": []}
        empty.write_text(json.dumps(doc))
        assert main(["validate", str(empty)]) == EX_DATA

    def test_single_step_soft_failure(self, tmp_path):
        out = tmp_path / "single.json"
        assert main(["continue", "--s-max", "0.1", "--ds", "0.1",
                     "-o", str(out)] + FAST) == EX_OK
        assert main(["validate", str(out)]) == EX_SOFT


class TestExport:
    def test_discrepancy_csv(self, branch_file, tmp_path):
        out = tmp_path / "d.csv"
        code = main(["export", str(branch_file), "--figure", "discrepancy",
                     "--s-list", "0.1", "0.2", "-o", str(out)])
        assert code == EX_OK
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "z,s=0.1,s=0.2"

    def test_default_slope_set_missing(self, branch_file):
        # the reference discrepancy figure uses slopes >= 1, absent here
        assert main(["export", str(branch_file), "--figure", "discrepancy"]) == EX_DATA

    def test_normalized_defaults_present(self, branch_file, tmp_path):
        out = tmp_path / "n.csv"
        code = main(["export", str(branch_file), "--figure", "normalized",
                     "-o", str(out)])
        assert code == EX_OK
        assert out.read_text().startswith("y,s=0.1,s=0.2")

    def test_integrated_with_range(self, branch_file, tmp_path):
        out = tmp_path / "i.csv"
        code = main(["export", str(branch_file), "--figure", "integrated",
                     "--y-range", "-50", "50", "--s-list", "0.1",
                     "--samples", "41", "-o", str(out)])
        assert code == EX_OK
        rows = out.read_text().strip().split("\n")
        assert rows[0] == "y,s=0.1"
        assert len(rows) == 42

    def test_missing_s_value(self, branch_file):
        assert main(["export", str(branch_file), "--figure", "normalized",
                     "--s-list", "0.7"]) == EX_DATA

    def test_deterministic_csv(self, branch_file, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for path in (a, b):
            assert main(["export", str(branch_file), "--figure", "normalized",
                         "--s-list", "0.1", "-o", str(path)]) == EX_OK
        assert a.read_bytes() == b.read_bytes()


class TestConfigFile:
    def test_parse_and_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=17\nouter_nodes=170  # cheap\nmax_iters=40\n")
        parsed = read_config_file(cfg)
        assert parsed == {"n": 17, "outer_nodes": 170, "max_iters": 40}
        out = tmp_path / "p.json"
        # CLI flag overrides the file value for n
        code = main(["solve", "--s", "0", "--config", str(cfg),
                     "--n", "9", "-o", str(out)])
        assert code == EX_OK
        assert json.loads(out.read_text())["meta"]["N"] == 9

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus=1\n")
        assert main(["solve", "--s", "0", "--config", str(cfg)]) == EX_USAGE
