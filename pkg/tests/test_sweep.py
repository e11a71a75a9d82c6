from unittest.mock import patch

import pytest

from core.config import settings
from services import sweep
from services.config_parser import parse_config

SWEEP_CONFIG = """\
[run]
name = visc
[grid]
Nx = 8, Ny = 8, Lx = 4, Ly = 4
[scheme]
dt = 0.01, t_end = 0.02
[initial]
amplitude = 0.05
[sweep]
parameter = alpha, values = 0.2 0.1 0.05
"""


@pytest.fixture()
def sweep_spec():
    return parse_config(SWEEP_CONFIG)


class TestSweepMembers:
    """Test cases for expanding a sweep into runs"""

    def test_one_member_per_value(self, sweep_spec, tmp_path):
        """Each value gets its own run config and directory, in input order"""
        members = sweep.sweep_members(sweep_spec, tmp_path)
        assert [value for value, _, _ in members] == [0.2, 0.1, 0.05]
        assert [d for _, _, d in members] == [str(tmp_path / f"alpha={v:g}") for v in (0.2, 0.1, 0.05)]
        assert members[1][1].run.name == "visc/alpha=0.1"

    def test_requires_sweep_block(self, minimal_config, tmp_path):
        """A run config without [sweep] cannot be expanded"""
        with pytest.raises(ValueError):
            sweep.sweep_members(parse_config(minimal_config), tmp_path)


class TestRunSweep:
    """Test cases for executing sweeps"""

    def test_local_execution(self, sweep_spec, tmp_path):
        """Without Celery every member runs locally and the summary lists them"""
        results = sweep.run_sweep(sweep_spec, tmp_path)
        assert [r["value"] for r in results] == [0.2, 0.1, 0.05]
        assert all(r["passed"] for r in results)
        for v in (0.2, 0.1, 0.05):
            assert (tmp_path / f"alpha={v:g}" / "timeseries.csv").exists()
        summary = (tmp_path / "sweep.txt").read_text()
        assert summary.count("status=") == 3

    @patch("services.runner.simulate")
    @patch("services.sweep._dispatch_celery")
    def test_celery_results_are_used(self, mock_dispatch, mock_simulate, sweep_spec, tmp_path, monkeypatch):
        """With USE_CELERY the worker results are taken as they come back"""
        monkeypatch.setattr(settings, "USE_CELERY", True)
        mock_dispatch.return_value = [
            {"name": f"m{i}", "status": "completed", "steps": 2, "energy": 1.0, "directory": str(tmp_path), "passed": True}
            for i in range(3)
        ]
        results = sweep.run_sweep(sweep_spec, tmp_path)
        mock_dispatch.assert_called_once()
        assert len(mock_dispatch.call_args[0][0]) == 3
        mock_simulate.assert_not_called()
        assert [r["value"] for r in results] == [0.2, 0.1, 0.05]

    @patch("services.sweep._dispatch_celery", return_value=None)
    def test_falls_back_when_dispatch_fails(self, mock_dispatch, sweep_spec, tmp_path, monkeypatch):
        """A failed Celery dispatch falls back to local execution"""
        monkeypatch.setattr(settings, "USE_CELERY", True)
        results = sweep.run_sweep(sweep_spec, tmp_path)
        mock_dispatch.assert_called_once()
        assert all(r["status"] == "completed" for r in results)


class TestSweepTask:
    """Test cases for the Celery sweep task"""

    @patch("services.runner.simulate")
    def test_task_runs_member(self, mock_simulate, sweep_spec, tmp_path):
        """The task rebuilds the run config from JSON and simulates it"""
        from tasks.sweep_tasks import run_sweep_member

        mock_simulate.return_value = {"status": "completed"}
        member = sweep_spec.with_parameter("alpha", 0.1)
        assert run_sweep_member(member.model_dump_json(), str(tmp_path)) == {"status": "completed"}
        spec, out_dir = mock_simulate.call_args[0]
        assert spec.model.alpha == 0.1 and spec.sweep is None
        assert out_dir == str(tmp_path)
