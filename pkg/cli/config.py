"""
Run configuration and ``key = value`` config files.
"""
import argparse
import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

VERSION = "satgen-v0.1.0"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    """
    Everything needed to re-execute a run.

    Attributes:
    - subcommand (str): e.g. "gen" or "audit attr".
    - argv (tuple of str): The command line as given.
    - options (dict): Every option value after config-file merging.
    - seed (int): Master seed; all other seeds derive from it.
    - threads (int): Worker processes.
    - version (str): Tool version.
    """
    subcommand: str
    argv: tuple
    options: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    version: str = VERSION

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace, argv) -> "RunConfig":
        options = {k: _plain(v) for k, v in sorted(vars(namespace).items()) if not k.startswith("_")}
        return cls(namespace._command, tuple(argv), options, namespace.seed, namespace.threads)

    def as_header(self) -> dict:
        return {"config": {"subcommand": self.subcommand, **self.options}, "argv": list(self.argv),
                "version": self.version}


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def read_config_file(path) -> dict:
    """
    Parse ``key = value`` lines; ``#`` starts a comment and blank lines are ignored.

    Raises:
    ValueError: On a line without ``=`` or an empty key.
    """
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"{path}:{line_no}: empty key")
        values[key.replace("-", "_")] = value
    return values


def convert_value(action: argparse.Action, text: str):
    """Convert config text with the option's own argparse type."""
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        lowered = text.lower()
        if lowered not in _TRUE | _FALSE:
            raise ValueError(f"option {action.dest}: expected a boolean, got {text!r}")
        return lowered in _TRUE
    if isinstance(action, argparse._CountAction):
        return int(text)
    convert = action.type or str
    try:
        if action.nargs in ("+", "*"):
            return [convert(part) for part in text.replace(",", " ").split()]
        return convert(text)
    except (argparse.ArgumentTypeError, TypeError) as e:
        raise ValueError(f"option {action.dest}: {e}")


def config_defaults(parser: argparse.ArgumentParser, values: dict) -> dict:
    """
    Map config-file values onto the destinations of ``parser``.

    Raises:
    ValueError: On keys the parser does not know.
    """
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help", argparse.SUPPRESS)}
    defaults = {}
    for key, text in values.items():
        if key not in actions:
            raise ValueError(f"unknown config key {key!r}")
        defaults[key] = convert_value(actions[key], text)
    logger.debug("config file sets %s", sorted(defaults))
    return defaults
