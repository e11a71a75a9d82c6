import logging
from typing import Any

import numpy as np

from core.errors import AssumptionViolation, PotentialError
from models.potential import ConvexSplit, Potential
from schemas.potential import AssumptionCheck, AssumptionReport

logger = logging.getLogger(__name__)

DEFAULT_RANGE = (-5.0, 5.0)
DEFAULT_SAMPLES = 100_000
# relative slack when comparing declared constants with sampled extremes
_SLACK = 1e-12


def quartic_double_well() -> Potential:
    """F(y) = 1/4 (y^2 - 1)^2."""
    return Potential(
        value=lambda y: 0.25 * (np.asarray(y, dtype=float) ** 2 - 1.0) ** 2,
        d1=lambda y: np.asarray(y, dtype=float) ** 3 - np.asarray(y, dtype=float),
        d2=lambda y: 3.0 * np.asarray(y, dtype=float) ** 2 - 1.0,
        lower_bound=0.0,
        curvature_bound=1.0,
        growth_coeff=3.0,
        growth_exp=2.0,
        label="quartic double well 1/4 (y^2-1)^2",
        name="quartic",
    )


def contact_line_surface(gamma: float, theta_s: float, bound_range: float = DEFAULT_RANGE[1]) -> Potential:
    """Surface potential whose sum with 1/2 y^2 is (gamma/2) cos(theta_s) sin(pi y / 2).

    G itself is unbounded below through -1/2 y^2, so ``lower_bound`` is the bound
    on |y| <= bound_range; the energy density 1/2 y^2 + G is bounded for all y.
    """
    if not gamma > 0:
        raise PotentialError(f"gamma must be > 0, got {gamma}")
    a = 0.5 * gamma * np.cos(theta_s)
    w = 0.5 * np.pi
    curvature = 1.0 + abs(a) * w**2
    return Potential(
        value=lambda y: a * np.sin(w * np.asarray(y, dtype=float)) - 0.5 * np.asarray(y, dtype=float) ** 2,
        d1=lambda y: a * w * np.cos(w * np.asarray(y, dtype=float)) - np.asarray(y, dtype=float),
        d2=lambda y: -a * w**2 * np.sin(w * np.asarray(y, dtype=float)) - 1.0,
        lower_bound=abs(a) + 0.5 * bound_range**2,
        curvature_bound=float(curvature),
        growth_coeff=float(curvature),
        growth_exp=0.0,
        label=f"contact line (gamma={gamma:g}, theta_s={theta_s:g})",
        name="contact_line",
        params={"gamma": float(gamma), "theta_s": float(theta_s)},
    )


_REGISTRY = {
    "quartic": quartic_double_well,
    "contact_line": contact_line_surface,
}


def potential_by_name(name: str, params: dict[str, Any] | None = None) -> Potential:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise PotentialError(f"unknown potential '{name}' (known: {', '.join(sorted(_REGISTRY))})")
    try:
        return factory(**(params or {}))
    except TypeError as exc:
        raise PotentialError(f"bad parameters for potential '{name}': {exc}")


def convex_split(P: Potential) -> ConvexSplit:
    return ConvexSplit(base=P)


def _fit_dominance(f_tilde: np.ndarray, g_tilde: np.ndarray) -> tuple[float, float]:
    """Least squares |F~'| ~ rho1 |G~'| + rho2, then rho2 raised to hold pointwise."""
    design = np.column_stack([g_tilde, np.ones_like(g_tilde)])
    (rho1, rho2), *_ = np.linalg.lstsq(design, f_tilde, rcond=None)
    rho1 = max(float(rho1), 0.0)
    rho2 = max(float(rho2), float(np.max(f_tilde - rho1 * g_tilde)), 0.0)
    return rho1, rho2


def _growth_exponents_allowed(kappa: float, dim: int) -> tuple[set[float] | None, set[float] | None]:
    """Admissible (p, q) in the growth condition; None means any exponent."""
    if kappa > 0:
        return (None if dim == 2 else {2.0}), None
    return (None if dim == 2 else {2.0}), {0.0}


def validate_assumptions(
    F: Potential,
    G: Potential,
    range: tuple[float, float] = DEFAULT_RANGE,
    samples: int = DEFAULT_SAMPLES,
    kappa: float = 0.1,
    check_dominance: bool = False,
    dim: int = 2,
    strict: bool = False,
) -> AssumptionReport:
    """Sample-based check of lower bounds, growth and (optionally) G-dominance.

    The bounds are global statements; sampling on ``range`` is evidence, not proof.
    With ``strict`` the first failing check raises AssumptionViolation.
    """
    lo, hi = range
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    if lo > -3.0 or hi < 3.0:
        raise ValueError(f"sample range must contain [-3, 3], got [{lo}, {hi}]")
    y = np.linspace(lo, hi, samples)
    checks: list[AssumptionCheck] = []

    for tag, P in (("F", F), ("G", G)):
        val, d2 = P.value(y), P.d2(y)
        i_val, i_d2 = int(np.argmin(val)), int(np.argmin(d2))
        c_emp = max(0.0, -float(val[i_val]))
        ct_emp = max(0.0, -float(d2[i_d2]))
        ok = c_emp <= P.lower_bound * (1 + _SLACK) + _SLACK and ct_emp <= P.curvature_bound * (1 + _SLACK) + _SLACK
        witness = float(y[i_val]) if c_emp > P.lower_bound * (1 + _SLACK) + _SLACK else float(y[i_d2])
        checks.append(AssumptionCheck(
            assumption="A2", target=tag, passed=ok,
            constants={"C": c_emp, "C_tilde": ct_emp},
            witness=None if ok else witness,
        ))

        envelope = np.abs(d2) / (1.0 + np.abs(y) ** P.growth_exp)
        i_env = int(np.argmax(envelope))
        c_hat = float(envelope[i_env])
        ok = c_hat <= P.growth_coeff * (1 + _SLACK) + _SLACK
        checks.append(AssumptionCheck(
            assumption="A3", target=tag, passed=ok,
            constants={"C_hat": c_hat, "exponent": P.growth_exp},
            witness=None if ok else float(y[i_env]),
        ))

    allowed_p, allowed_q = _growth_exponents_allowed(kappa, dim)
    for tag, P, allowed in (("F", F, allowed_p), ("G", G, allowed_q)):
        if allowed is not None and P.growth_exp not in allowed:
            checks.append(AssumptionCheck(
                assumption="A3", target=tag, passed=False,
                constants={"exponent": P.growth_exp},
                detail=f"kappa={kappa:g}, d={dim} requires exponent in {sorted(allowed)}",
            ))

    if check_dominance:
        split_f, split_g = convex_split(F), convex_split(G)
        f_t, g_t = np.abs(split_f.tilde_d1(y)), np.abs(split_g.tilde_d1(y))
        rho1, rho2 = _fit_dominance(f_t, g_t)
        # the fitted pair must still hold on a doubled range to count as dominance
        y_wide = np.linspace(2 * lo, 2 * hi, samples)
        excess = np.abs(split_f.tilde_d1(y_wide)) - rho1 * np.abs(split_g.tilde_d1(y_wide)) - rho2
        i_ex = int(np.argmax(excess))
        ok = float(excess[i_ex]) <= 1e-9 * (1.0 + rho2)
        checks.append(AssumptionCheck(
            assumption="A4", target="F,G", passed=ok,
            constants={"rho1": rho1, "rho2": rho2},
            witness=None if ok else float(y_wide[i_ex]),
            detail="least-squares fit, verified pointwise (heuristic)",
        ))

    report = AssumptionReport(kappa=kappa, range=(lo, hi), samples=samples, checks=checks)
    for c in report.failures():
        logger.warning("assumption %s fails for %s: %s", c.assumption, c.target, c.detail or c.constants)
        if strict:
            raise AssumptionViolation(f"{c.assumption}({c.target})", c.witness if c.witness is not None else float("nan"),
                                      c.detail or str(c.constants))
    return report
