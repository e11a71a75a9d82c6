from dataclasses import dataclass, field
from typing import Iterator, List

import numpy as np

from models.state import State
from schemas.solver import EnergyReport


@dataclass(frozen=True)
class TrajectoryRecord:
    time: float
    report: EnergyReport
    dt: float = 0.0


@dataclass
class Trajectory:
    """Energy time series of one run plus optional state snapshots."""

    records: List[TrajectoryRecord] = field(default_factory=list)
    snapshots: List[State] = field(default_factory=list)
    status: str = "running"
    steps: int = 0
    halvings: int = 0
    last_state: State | None = None

    def append(self, report: EnergyReport, dt: float = 0.0) -> None:
        if self.records and not report.t > self.records[-1].time:
            raise ValueError(f"times must increase: {report.t} after {self.records[-1].time}")
        self.records.append(TrajectoryRecord(time=report.t, report=report, dt=dt))

    def add_snapshot(self, state: State) -> None:
        self.snapshots.append(state)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    @property
    def reports(self) -> List[EnergyReport]:
        return [r.report for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r.report, name) for r in self.records])

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_state(self) -> State | None:
        if self.last_state is not None:
            return self.last_state
        return self.snapshots[-1] if self.snapshots else None
