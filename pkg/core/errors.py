from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class GridError(SimulationError, ValueError):
    pass


class PotentialError(SimulationError, ValueError):
    pass


class AssumptionViolation(SimulationError):
    """A potential fails one of the structural assumptions at a sampled point."""

    def __init__(self, assumption: str, witness: float, detail: str):
        self.assumption = assumption
        self.witness = witness
        super().__init__(f"{assumption} fails at y={witness:.6g}: {detail}")


class ConfigError(SimulationError):
    """Run configuration could not be parsed or validated.

    ``line`` is set for syntax errors, ``key_path`` for semantic ones.
    """

    def __init__(self, message: str, line: Optional[int] = None, key_path: Optional[str] = None):
        self.line = line
        self.key_path = key_path
        where = ""
        if line is not None:
            where = f"line {line}: "
        elif key_path:
            where = f"{key_path}: "
        super().__init__(f"{where}{message}")


class SolverError(SimulationError):
    pass


class StepRejected(SolverError):
    """Energy kept rising after the allowed number of step halvings."""

    def __init__(self, energy_before: float, energy_after: float, dt: float, halvings: int):
        self.energy_before = energy_before
        self.energy_after = energy_after
        self.dt = dt
        self.halvings = halvings
        super().__init__(
            f"energy rose from {energy_before:.17g} to {energy_after:.17g} "
            f"after {halvings} halvings (dt={dt:.3e})"
        )


class StationaryError(SimulationError):
    pass


class MassMismatch(SimulationError, ValueError):
    pass


class OutputError(SimulationError, OSError):
    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"{path}: {detail}")
