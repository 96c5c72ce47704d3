import json

import numpy as np
import pytest

from bohmqubits import cli, serialization
from bohmqubits.errors import ConfigError


def run(args):
    return cli.main(args)


@pytest.fixture
def config_file(tmp_path):
    cfg = {
        "spec": {"a0": 2.5, "omega_y": "sqrt(3)", "c2": "sqrt(2)/2"},
        "integrator": {"t_end": 3.0, "sample_dt": 0.05},
        "trajectory": {"x0": 1.0, "y0": 1.5},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


class TestExpressionEval:
    def test_accepts_arithmetic(self):
        assert cli.eval_number("sqrt(3)") == pytest.approx(3**0.5)
        assert cli.eval_number("sqrt(2)/2") == pytest.approx(0.5**0.5)
        assert cli.eval_number("-pi") == pytest.approx(-3.14159265358979)
        assert cli.eval_number(2.5) == 2.5
        assert cli.eval_number("1e-3 + 2**-4") == pytest.approx(0.0635)

    @pytest.mark.parametrize("expr", [
        "__import__('os')",
        "().__class__",
        "open('/etc/passwd')",
        "x",
        "'a' * 3",
        "lambda: 1",
    ])
    def test_rejects_code(self, expr):
        with pytest.raises(ConfigError):
            cli.eval_number(expr)


class TestExitCodes:
    def test_missing_config_is_config_error(self, tmp_path):
        assert run(["trajectory", "--config", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path)]) == 2

    def test_invalid_json_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["trajectory", "--config", str(bad),
                    "--out", str(tmp_path)]) == 2

    def test_invalid_spec_is_config_error(self, tmp_path, config_file):
        assert run(["trajectory", "--config", str(config_file),
                    "--set", "spec.a0=-2", "--out", str(tmp_path)]) == 2

    def test_unknown_spec_key_is_config_error(self, tmp_path, config_file):
        assert run(["trajectory", "--config", str(config_file),
                    "--set", "spec.bogus=1", "--out", str(tmp_path)]) == 2

    def test_long_run_needs_flag(self, tmp_path, config_file):
        args = ["trajectory", "--config", str(config_file),
                "--set", "integrator.t_end=1e5", "--out", str(tmp_path)]
        assert run(args) == 2

    def test_success_is_zero(self, tmp_path, config_file):
        assert run(["trajectory", "--config", str(config_file),
                    "--out", str(tmp_path)]) == 0


class TestTrajectoryCommand:
    def test_writes_artifacts_and_manifest(self, tmp_path, config_file):
        out = tmp_path / "run"
        assert run(["trajectory", "--config", str(config_file),
                    "--out", str(out)]) == 0
        for name in ("trajectory.csv", "trajectory.bqtr", "trajectory.pgm",
                     "trajectory.manifest.json"):
            assert (out / name).exists()
        manifest = json.loads((out / "trajectory.manifest.json").read_text())
        assert manifest["config_hash"]
        samples = serialization.read_trajectory_csv(out / "trajectory.csv")
        assert samples.shape == (61, 3)

    def test_set_overrides_config(self, tmp_path, config_file):
        out = tmp_path / "run"
        assert run(["trajectory", "--config", str(config_file),
                    "--set", "integrator.t_end=1.0", "--out", str(out)]) == 0
        samples = serialization.read_trajectory_csv(out / "trajectory.csv")
        assert samples.shape == (21, 3)


class TestGridCommand:
    def test_resume_accumulates_bit_exactly(self, tmp_path, config_file):
        base = ["grid", "--config", str(config_file),
                "--set", "grid.x0=0.1", "--set", "grid.y0=0.4"]
        one = tmp_path / "one"
        two = tmp_path / "two"
        both = tmp_path / "both"
        assert run(base + ["--out", str(one)]) == 0
        assert run(base + ["--set",
                           f"grid.resume_from={one / 'grid.bqgr'}",
                           "--out", str(two)]) == 0
        # same two accumulations in a single process, via merged grids
        assert run(base + ["--out", str(both)]) == 0
        g_two, _ = serialization.load_grid(two / "grid.bqgr")
        g_one, _ = serialization.load_grid(both / "grid.bqgr")
        assert np.array_equal(g_two.counts, 2.0 * g_one.counts)
        assert g_two.total_time == 2.0 * g_one.total_time


class TestNodesCommand:
    def test_reports_counts(self, tmp_path, config_file, capsys):
        out = tmp_path / "nodes"
        assert run(["nodes", "--config", str(config_file),
                    "--set", "nodes.t=1.9", "--out", str(out)]) == 0
        assert (out / "nodes.csv").exists()

    def test_at_infinity_is_reported_not_fatal(self, tmp_path, config_file):
        out = tmp_path / "nodes"
        assert run(["nodes", "--config", str(config_file),
                    "--set", "nodes.t=0.0", "--out", str(out)]) == 0


class TestOtherCommands:
    def test_density(self, tmp_path, config_file):
        out = tmp_path / "dens"
        assert run(["density", "--config", str(config_file),
                    "--out", str(out)]) == 0
        assert (out / "density.ppm").exists()

    def test_overlap(self, tmp_path):
        out = tmp_path / "ov"
        assert run(["overlap", "--set", "overlap.n_f_values=[2,4,12]",
                    "--out", str(out)]) == 0
        lines = (out / "overlap.csv").read_text().strip().splitlines()
        assert lines[0] == "a0,n_f,overlap,coverage"
        assert len(lines) == 1 + 4 * 3

    def test_compare_needs_two_grids(self, tmp_path):
        assert run(["compare", "--set", 'compare.grids=["only.bqgr"]',
                    "--out", str(tmp_path)]) == 2

    def test_compare_identical_grids(self, tmp_path, config_file):
        out = tmp_path / "g"
        assert run(["grid", "--config", str(config_file),
                    "--out", str(out)]) == 0
        path = str(out / "grid.bqgr")
        grids = "compare.grids=" + json.dumps([path, path])
        assert run(["compare", "--set", grids, "--out", str(tmp_path)]) == 0
        matrix = np.loadtxt(tmp_path / "compare.csv", delimiter=",")
        assert matrix.max() == 0.0
