"""
Report emission: line-delimited JSON for scalar reports, CSV for tables. Both start with the run
header so a report can be re-executed from itself.
"""
import json
import logging
import math
import sys
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, Enum):
        return value.value
    return value


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)


def write_jsonl(path, header: dict, records):
    """Write the header line followed by one line per record; ``path`` None means standard output."""
    lines = [dumps({"header": header})] + [dumps(r) for r in records]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
        logger.info("wrote report %s (%d records)", path, len(lines) - 1)


def write_csv(path, header: dict, table: pd.DataFrame):
    """Write ``table`` as CSV preceded by a ``# <header json>`` comment line."""
    text = "# " + dumps(header) + "\n" + table.to_csv(index=False, lineterminator="\n")
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
        logger.info("wrote table %s (%d rows)", path, len(table))


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
