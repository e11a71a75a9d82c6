"""Parameter sweeps: one simulate run per value, each in its own directory."""
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from core.config import settings
from schemas.run_spec import RunSpec
from services import output, reports, runner

logger = logging.getLogger(__name__)


def sweep_members(spec: RunSpec, out_dir: str | Path) -> list[tuple[float, RunSpec, str]]:
    """(value, member spec, member directory) for every sweep value, in input order."""
    if spec.sweep is None:
        raise ValueError("run config has no [sweep] section")
    parameter = spec.sweep.parameter
    members = []
    for value in spec.sweep.values:
        member = spec.with_parameter(parameter, value)
        label = f"{parameter}={value:g}"
        member = member.model_copy(update={"run": member.run.model_copy(update={"name": f"{spec.run.name}/{label}"})})
        members.append((value, member, str(Path(out_dir, label))))
    return members


def _run_member(spec_json: str, out_dir: str) -> dict:
    return runner.simulate(RunSpec.model_validate_json(spec_json), out_dir)


def _dispatch_celery(jobs: list[tuple[str, str]]) -> list[dict] | None:
    try:
        from celery import group

        from core.celery import celery_app  # noqa: F401  (registers the configured app as current)
        from tasks.sweep_tasks import run_sweep_member
    except ImportError as exc:
        logger.warning("Celery unavailable, running sweep locally: %s", exc)
        return None
    try:
        result = group(run_sweep_member.s(spec_json, d) for spec_json, d in jobs).apply_async()
        logger.info("queued %d sweep members to Celery", len(jobs))
        return result.get(timeout=settings.SWEEP_TIMEOUT_SECONDS)
    except Exception as exc:
        # broker down or worker lost: fall back to local execution
        logger.warning("Celery dispatch failed, running sweep locally: %s", exc)
        return None


def run_sweep(spec: RunSpec, out_dir: str | Path) -> list[dict]:
    """Run every sweep member via Celery when enabled, otherwise on a local process pool."""
    members = sweep_members(spec, out_dir)
    jobs = [(member.model_dump_json(), d) for _, member, d in members]
    results = _dispatch_celery(jobs) if settings.USE_CELERY else None
    if results is None:
        if settings.SWEEP_WORKERS > 1:
            with ProcessPoolExecutor(max_workers=settings.SWEEP_WORKERS) as pool:
                results = list(pool.map(_run_member, *zip(*jobs)))
        else:
            results = [_run_member(spec_json, d) for spec_json, d in jobs]
    for (value, _, _), result in zip(members, results):
        result["value"] = value
    output.run_directory(out_dir)
    output.append_report(reports.render_sweep_summary(spec, results), Path(out_dir, "sweep.txt"))
    return results
