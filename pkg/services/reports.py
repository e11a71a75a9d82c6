"""Structured text reports rendered from templates/reports."""
import os
from typing import Any, Dict, Iterable

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from models.stationary import StationaryResult
from models.trajectory import Trajectory
from schemas.diagnostics import CheckOutcome, ConservationReport, EnergyLawReport, RateFit
from schemas.run_spec import RunSpec
from schemas.stationary import MultiplierCheck, StabilityVerdict

# Jinja2 environment for report templates
_templates_env = Environment(
    loader=FileSystemLoader(searchpath=os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)
_templates_env.filters["g17"] = lambda v: "%.17g" % v
_templates_env.filters["sci"] = lambda v: "%.3e" % v


def render_template(template_path: str, context: Dict[str, Any]) -> str:
    """Render a text template from templates/ directory with provided context."""
    template = _templates_env.get_template(template_path)
    return template.render(**context)


def render_run_summary(
    spec: RunSpec,
    tr: Trajectory,
    conservation: ConservationReport,
    energy_law: EnergyLawReport,
    rate: RateFit | None = None,
) -> str:
    last = tr.records[-1].report
    return render_template(
        "reports/run_summary.txt",
        {
            "spec": spec,
            "status": "converged to equilibrium" if tr.converged else tr.status,
            "steps": tr.steps,
            "halvings": tr.halvings,
            "first": tr.records[0].report,
            "last": last,
            "conservation": conservation,
            "energy_law": energy_law,
            "rate": rate,
        },
    )


def render_stationary_report(
    spec: RunSpec,
    result: StationaryResult,
    check: MultiplierCheck,
    criticality: float,
    verdict: StabilityVerdict | None = None,
) -> str:
    return render_template(
        "reports/stationary.txt",
        {"spec": spec, "r": result, "check": check, "criticality": criticality, "verdict": verdict},
    )


def render_verification_summary(outcomes: Iterable[CheckOutcome]) -> str:
    outcomes = list(outcomes)
    width = max((len(o.name) for o in outcomes), default=4)
    return render_template(
        "reports/verification.txt",
        {
            "outcomes": outcomes,
            "width": width,
            "failed": sum(not o.passed for o in outcomes),
        },
    )


def render_sweep_summary(spec: RunSpec, members: list[dict]) -> str:
    return render_template("reports/sweep.txt", {"spec": spec, "members": members})
