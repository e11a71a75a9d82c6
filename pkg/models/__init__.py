from .grid import Grid, Component, BulkField, TraceField  # noqa: F401
from .potential import Potential, ConvexSplit  # noqa: F401
from .state import State, ChemPotentials  # noqa: F401
from .mode_system import ModeSystem  # noqa: F401
from .trajectory import Trajectory, TrajectoryRecord  # noqa: F401
from .stationary import StationaryResult  # noqa: F401
