from celery import Celery
from core.config import settings

# Redis is both broker and result store; sweep members return JSON summaries
broker_url = settings.REDIS_URL
backend_url = settings.REDIS_URL

celery_app = Celery(
    "bulk_surface_ch",
    broker=broker_url,
    backend=backend_url,
    include=["tasks.sweep_tasks"]
)

celery_app.conf.update(
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    task_track_started=True,
    task_time_limit=settings.SWEEP_TIMEOUT_SECONDS,
    task_soft_time_limit=max(settings.SWEEP_TIMEOUT_SECONDS - 60, 60),
    # one simulation per worker process at a time
    worker_prefetch_multiplier=1,
    worker_max_tasks_per_child=100,
    task_always_eager=False,
    task_eager_propagates=False,
)
