"""Channel documents and command-line flag values."""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from capacity import MaxPower, PowerConstraint, SumPower
from errors import CompoundMimoError, ParseError
from matrix_kernel import ChannelMatrix

logger = logging.getLogger(__name__)

# Sample nominal channel shipped with the project (project root)
DEFAULT_CHANNEL_FILE = Path(__file__).resolve().parent.parent / "channel.json"


def _positive_int(doc: dict[str, Any], field: str) -> int:
    value = doc[field]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"field '{field}' must be a positive integer, got {value!r}")
    return value


def parse_channel_document(doc: Any) -> ChannelMatrix:
    """Build a channel from ``{rows, cols, entries: [[re, im], ...]}`` (row-major)."""
    if not isinstance(doc, dict):
        raise ParseError("channel document must be a JSON object")
    for field in ("rows", "cols", "entries"):
        if field not in doc:
            raise ParseError(f"channel document is missing field '{field}'")

    rows, cols = _positive_int(doc, "rows"), _positive_int(doc, "cols")
    entries = doc["entries"]
    if not isinstance(entries, list) or len(entries) != rows * cols:
        count = len(entries) if isinstance(entries, list) else "non-list"
        raise ParseError(f"field 'entries' must hold rows*cols = {rows * cols} pairs, got {count}")

    values = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(entries):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise ParseError(f"field 'entries[{i}]' must be a [re, im] pair of finite numbers, got {pair!r}")
        try:
            real, imag = float(pair[0]), float(pair[1])
        except OverflowError as exc:
            raise ParseError(f"field 'entries[{i}]' overflows a double: {pair!r}") from exc
        if not (math.isfinite(real) and math.isfinite(imag)):
            raise ParseError(f"field 'entries[{i}]' must be a [re, im] pair of finite numbers, got {pair!r}")
        values[i] = complex(real, imag)
    return ChannelMatrix(rows, cols, values.reshape(rows, cols))


def channel_to_document(channel: ChannelMatrix) -> dict[str, Any]:
    flat = channel.entries.reshape(-1)
    return {
        "rows": channel.rows,
        "cols": channel.cols,
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def load_channel(path: Path) -> ChannelMatrix:
    """Read a channel from a ``.json`` document or a real-only ``.csv``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ParseError(f"--input file not found: {path}") from exc
    except OSError as exc:
        raise ParseError(f"--input {path} cannot be read: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"--input {path.name} is not UTF-8 text") from exc

    suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"--input {path.name} is not valid JSON: {exc}") from exc
        channel = parse_channel_document(doc)
    elif suffix == ".csv":
        try:
            values = np.loadtxt(text.splitlines(), delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"--input {path.name} is not a numeric CSV: {exc}") from exc
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise ParseError(f"--input {path.name} must contain finite numbers")
        channel = ChannelMatrix.from_array(values)
    else:
        raise ParseError(f"--input must end in .json or .csv, got '{path.name}'")

    logger.info(f"Loaded {channel.rows}x{channel.cols} channel from {path.name}")
    return channel


def dump_channel(channel: ChannelMatrix, path: Path) -> None:
    Path(path).write_text(json.dumps(channel_to_document(channel), indent=2))


def random_channel(rows: int, cols: int, seed: int) -> ChannelMatrix:
    """Seeded i.i.d. CN(0, 1) channel."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    return ChannelMatrix.from_array(z)


def parse_dims(text: str) -> tuple[int, int]:
    """``"3x2"`` → (3, 2)."""
    parts = text.lower().split("x")
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError as exc:
        raise ParseError(f"--dims must look like RxT (e.g. 3x2), got '{text}'") from exc
    if rows < 1 or cols < 1:
        raise ParseError(f"--dims entries must be >= 1, got '{text}'")
    return rows, cols


def parse_constraint(text: str) -> PowerConstraint:
    """``sum``, ``sum:BUDGET`` or ``max:CAP``."""
    kind, sep, value = text.partition(":")
    try:
        match kind.strip().lower():
            case "sum" if not sep:
                return SumPower()
            case "sum":
                return SumPower(float(value))
            case "max":
                return MaxPower(float(value))
    except (ValueError, CompoundMimoError) as exc:
        raise ParseError(f"--constraint value must be a positive number, got '{text}'") from exc
    raise ParseError(f"--constraint must be sum:BUDGET or max:CAP, got '{text}'")


def _parse_axis(text: str, name: str) -> tuple[float, ...]:
    fields = text.split(":")
    if len(fields) != 3:
        raise ParseError(f"--grid {name} axis must be lo:hi:steps, got '{text}'")
    try:
        lo, hi, steps = float(fields[0]), float(fields[1]), int(fields[2])
    except ValueError as exc:
        raise ParseError(f"--grid {name} axis must be lo:hi:steps, got '{text}'") from exc
    if steps < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ParseError(f"--grid {name} axis needs finite lo <= hi and steps >= 1, got '{text}'")
    return tuple(float(x) for x in np.linspace(lo, hi, steps))


def parse_grid(text: str) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """``"eps_lo:eps_hi:steps,gamma_lo:gamma_hi:steps"`` → (epsilons, gammas)."""
    axes = text.split(",")
    if len(axes) != 2:
        raise ParseError(f"--grid must have an epsilon axis and a gamma axis, got '{text}'")
    epsilons = _parse_axis(axes[0], "epsilon")
    gammas = _parse_axis(axes[1], "gamma")
    if epsilons[0] < 0:
        raise ParseError(f"--grid epsilon axis must be >= 0, got '{axes[0]}'")
    if gammas[0] <= 0:
        raise ParseError(f"--grid gamma axis must be > 0, got '{axes[1]}'")
    return epsilons, gammas
