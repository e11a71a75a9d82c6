"""Time-series CSV and text snapshot formats.

Values are written with 17 significant digits, so every double survives a
write/read cycle unchanged.
"""
import logging
from pathlib import Path

import numpy as np

from core.errors import OutputError
from models.grid import Grid
from models.state import State
from models.trajectory import Trajectory
from schemas.solver import EnergyReport

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "e_bulk", "e_surf", "e_total", "d_bulk", "d_surf", "d_visc", "m_bulk", "m_bot", "m_top")
CSV_HEADER = ",".join(CSV_COLUMNS)


def _fmt(value: float) -> str:
    return "%.17g" % value


def run_directory(base: str | Path, *parts: str) -> Path:
    path = Path(base, *parts)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(str(path), f"cannot create directory: {exc}")
    return path


def write_text(path: str | Path, text: str, mode: str = "w") -> Path:
    path = Path(path)
    try:
        with path.open(mode, encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(str(path), f"write failed: {exc}")
    return path


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(str(path), f"read failed: {exc}")


def write_timeseries(tr: Trajectory, path: str | Path) -> Path:
    lines = [CSV_HEADER]
    for record in tr:
        lines.append(",".join(_fmt(getattr(record.report, col)) for col in CSV_COLUMNS))
    logger.debug("writing %d time-series rows to %s", len(tr), path)
    return write_text(path, "\n".join(lines) + "\n")


def read_timeseries(path: str | Path) -> Trajectory:
    lines = _read(path).splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise OutputError(str(path), "missing or unexpected CSV header")
    tr = Trajectory(status="loaded")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(CSV_COLUMNS):
            raise OutputError(str(path), f"line {lineno}: expected {len(CSV_COLUMNS)} columns")
        try:
            values = dict(zip(CSV_COLUMNS, (float(f) for f in fields)))
        except ValueError as exc:
            raise OutputError(str(path), f"line {lineno}: {exc}")
        tr.append(EnergyReport(**values))
    return tr


def write_snapshot(s: State, path: str | Path, g: Grid | None = None) -> Path:
    """Header lines ``# key=value`` then one y-row of nodal values per line."""
    ny1, nx = s.phi.shape
    header = [f"# Nx={nx}", f"# Ny={ny1 - 1}"]
    if g is not None:
        header += [f"# Lx={_fmt(g.Lx)}", f"# Ly={_fmt(g.Ly)}"]
    header.append(f"# t={_fmt(s.time)}")
    rows = [" ".join(_fmt(v) for v in row) for row in s.phi]
    return write_text(path, "\n".join(header + rows) + "\n")


def read_snapshot_with_meta(path: str | Path) -> tuple[State, dict[str, float]]:
    meta: dict[str, float] = {}
    rows = []
    for lineno, line in enumerate(_read(path).splitlines(), start=1):
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise OutputError(str(path), f"line {lineno}: malformed header")
            meta[key.strip()] = float(value)
        elif line.strip():
            try:
                rows.append([float(v) for v in line.split()])
            except ValueError as exc:
                raise OutputError(str(path), f"line {lineno}: {exc}")
    for key in ("Nx", "Ny", "t"):
        if key not in meta:
            raise OutputError(str(path), f"missing header '{key}'")
    nx, ny = int(meta["Nx"]), int(meta["Ny"])
    if len(rows) != ny + 1 or any(len(r) != nx for r in rows):
        raise OutputError(str(path), f"expected {ny + 1} rows of {nx} values")
    return State(phi=np.array(rows), time=meta["t"]), meta


def read_snapshot(path: str | Path) -> State:
    state, _ = read_snapshot_with_meta(path)
    return state


def append_report(text: str, path: str | Path) -> Path:
    return write_text(path, text if text.endswith("\n") else text + "\n", mode="a")
