from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class AssumptionCheck(BaseModel):
    assumption: str
    target: str
    passed: bool
    constants: Dict[str, float] = Field(default_factory=dict)
    witness: Optional[float] = None
    detail: Optional[str] = None


class AssumptionReport(BaseModel):
    kappa: float
    range: Tuple[float, float]
    samples: int
    checks: List[AssumptionCheck]

    def failures(self) -> List[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]

    def passed(self, assumption: str, target: Optional[str] = None) -> bool:
        relevant = [c for c in self.checks if c.assumption == assumption and (target is None or c.target == target)]
        return bool(relevant) and all(c.passed for c in relevant)

    def constants(self, assumption: str, target: str) -> Dict[str, float]:
        merged: Dict[str, float] = {}
        for c in self.checks:
            if c.assumption == assumption and c.target == target:
                merged.update(c.constants)
        return merged
