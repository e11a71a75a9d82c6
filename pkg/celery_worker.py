#!/usr/bin/env python3
"""
Celery worker script for distributed parameter sweeps.
Run this script on every machine that should execute sweep members.
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

if __name__ == "__main__":
    from core.celery import celery_app
    from core.logging import configure_logging

    configure_logging()

    # one simulation per process; numpy threads share the cores
    celery_app.start([
        "worker",
        "--loglevel=info",
        f"--concurrency={os.getenv('SWEEP_WORKERS', '2')}",
        "--without-gossip",
        "--without-mingle",
        "--without-heartbeat",
    ])
