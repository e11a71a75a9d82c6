"""Parser for the ``key = value`` run configuration with ``[section]`` headers.

    [grid]
    Nx = 64
    [model]
    kappa = 0.1
    surface_potential = contact_line
    surface.gamma = 1.0
    [sweep]
    parameter = alpha, values = 0.2 0.1 0.05

Several assignments may share a line when separated by commas. Full-line
comments start with ``#`` or ``;``. Dotted keys fill the parameter tables of
the model block (``bulk.*`` and ``surface.*``).
"""
import logging
import re
from pathlib import Path

from pydantic import ValidationError

from core.errors import ConfigError
from schemas.run_spec import RunSpec

logger = logging.getLogger(__name__)

SECTIONS = ("run", "grid", "model", "scheme", "initial", "stationary", "sweep")

_SECTION = re.compile(r"^\[\s*([A-Za-z_]\w*)\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][\w]*(\.[A-Za-z_]\w*)?$")
# a comma followed by another "key =" starts a new assignment
_SPLIT = re.compile(r",\s*(?=[A-Za-z_][\w.]*\s*=)")


def _assignments(body: str, lineno: int) -> list[tuple[str, str]]:
    out = []
    for part in _SPLIT.split(body):
        if "=" not in part:
            raise ConfigError(f"expected 'key = value', got '{part.strip()}'", line=lineno)
        key, value = (s.strip() for s in part.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key '{key}'", line=lineno)
        if value == "":
            raise ConfigError(f"missing value for '{key}'", line=lineno)
        out.append((key, value))
    return out


def _raw_sections(text: str) -> dict[str, dict]:
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        header = _SECTION.match(line)
        if header:
            current = header.group(1)
            if current not in SECTIONS:
                raise ConfigError(f"unknown section [{current}]", line=lineno)
            if current in sections:
                raise ConfigError(f"section [{current}] appears twice", line=lineno)
            sections[current] = {}
            continue
        if line.startswith("["):
            raise ConfigError(f"malformed section header '{line}'", line=lineno)
        if current is None:
            raise ConfigError("assignment before any [section] header", line=lineno)
        block = sections[current]
        for key, value in _assignments(line, lineno):
            target = block
            if "." in key:
                table, key = key.split(".", 1)
                target = block.setdefault(table, {})
                if not isinstance(target, dict):
                    raise ConfigError(f"'{table}' is not a parameter table", line=lineno)
            if key in target:
                raise ConfigError(f"duplicate key '{key}'", line=lineno)
            target[key] = value
    return sections


def _key_path(loc: tuple) -> str:
    return ".".join(str(part) for part in loc if not str(part).startswith("function-"))


def _message(error: dict) -> str:
    if error["type"] == "extra_forbidden":
        return "unknown key"
    msg = error["msg"]
    return msg[len("Value error, "):] if msg.startswith("Value error, ") else msg


def parse_config(text: str) -> RunSpec:
    """Parse and validate a run configuration.

    Syntax errors carry the line number, semantic errors the key path
    (``model.kappa``).
    """
    sections = _raw_sections(text)
    try:
        spec = RunSpec.model_validate(sections)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(_message(first), key_path=_key_path(first["loc"]) or None)
    logger.debug("parsed run spec '%s' (mode %s)", spec.run.name, spec.mode)
    return spec


def load_config(path: str | Path) -> RunSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config(text)
