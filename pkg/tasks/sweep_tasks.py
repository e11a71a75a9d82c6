import logging

from celery import current_app

from schemas.run_spec import RunSpec
from services import runner

logger = logging.getLogger(__name__)


@current_app.task(bind=True, max_retries=0)
def run_sweep_member(self, spec_json: str, out_dir: str) -> dict:
    """
    Run one member of a parameter sweep on a worker.
    The run config travels as JSON; the member writes only into its own directory.
    """
    spec = RunSpec.model_validate_json(spec_json)
    logger.info("sweep member %s (task %s)", spec.run.name, self.request.id)
    return runner.simulate(spec, out_dir)
