"""Helper utilities."""

import csv
import hashlib
import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .exceptions import NumericException

log = logging.getLogger(__name__)


def jsonable(value):
    """
    Convert a value to plain JSON types.

    Numpy scalars and arrays become Python numbers and lists, tuples become lists and
    non-finite floats become ``None`` so that the output is strict JSON.

    :param value: Value to convert.
    :return: Value made of dicts, lists, strings, numbers, booleans and ``None``.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dump_json(value, indent: int | None = 2) -> str:
    """
    Serialize to JSON keeping the insertion order of keys.

    The same input always produces the same text, so reports can be compared byte by byte.
    """
    return json.dumps(jsonable(value), indent=indent, ensure_ascii=False) + "\n"


def canonical_json(value) -> str:
    """Compact JSON with sorted keys, used for hashing."""
    return json.dumps(
        jsonable(value), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def sha256_hexdigest(value) -> str:
    """
    SHA-256 of the canonical JSON of a value.

    :param value: JSON-able value.
    :return: Hex digest.
    """
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.debug(f"Wrote {path}")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """
    Write rows to a CSV file, creating parent directories.

    Floats are written with ``repr`` precision.

    :param path: Output path.
    :param header: Column names.
    :param rows: Row values.
    :return: Path written to.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    log.debug(f"Wrote {path}")
    return path


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def require_finite(value, what: str, state=None):
    """
    Return the value unchanged if it is finite everywhere.

    :param value: Scalar or array.
    :param what: Description used in the error message.
    :param state: State to attach to the exception.
    :raises NumericException: If any entry is NaN or infinite.
    """
    if not np.all(np.isfinite(value)):
        raise NumericException(f"Non-finite {what}", state=state)
    return value


def rms_scaled_tolerance(tol: float, size: int) -> float:
    """
    Per-component tolerance for a batched integration.

    SciPy's embedded error estimate is the RMS over all components, so a batch of ``size``
    components needs a tighter tolerance for every component to stay below ``tol``.
    """
    return tol / math.sqrt(max(size, 1))


def chunked(items: Sequence, size: int) -> list[Sequence]:
    """Split a sequence into consecutive chunks of at most ``size`` items."""
    return [items[i : i + size] for i in range(0, len(items), size)]
