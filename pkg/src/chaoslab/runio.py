"""
This module contains the input/output shared by all simulation modules:
the counter-based random stream, CSV and JSON records, binary image frames
and the ordered parallel map.
"""

import csv
import json
import logging
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, fields, is_dataclass
from enum import Enum, IntEnum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, TypeVar, cast

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import NDArray

from chaoslab.errors import InsufficientDataError
from chaoslab.options import thread_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB
UNIT_53 = 2.0**-53

REPORT_FORMAT_VERSION = 1

EMPTY_THRESHOLD = 1e-6
PARASITOID_THRESHOLD = 1e-3
RAMP_DECADES = 3.0

BLUE = (0, 0, 255)
RED = (255, 0, 0)
GREEN = (0, 255, 0)
YELLOW = (255, 255, 0)

# Indexed by [current strategy, previous strategy] with D = 0 and C = 1.
GAME_PALETTE: NDArray[np.uint8] = np.array([[RED, YELLOW], [GREEN, BLUE]], dtype=np.uint8)


class Stream(IntEnum):
    """Stream identifiers keeping the random draws of different purposes apart."""

    LATTICE_INIT = 1
    GAME_INIT = 2
    GAME_WINNER = 3
    GAME_ORDER = 4
    AGGREGATE = 5
    SYNTHETIC = 6


def package_version() -> str:
    """Returns the installed version of chaoslab."""
    try:
        return version("chaoslab")
    except PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


def splitmix64(z: int) -> int:
    """
    Applies one SplitMix64 step to a 64-bit integer.

    Args:
        z (int): The input word, reduced modulo 2**64.

    Returns:
        int: The mixed 64-bit word.
    """
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIER_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIER_2) & MASK64
    return z ^ (z >> 31)


def _splitmix64_array(z: NDArray[np.uint64]) -> NDArray[np.uint64]:
    """Array twin of splitmix64; uint64 arithmetic wraps modulo 2**64."""
    z = z + np.uint64(GOLDEN_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MULTIPLIER_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MULTIPLIER_2)
    return cast(NDArray[np.uint64], z ^ (z >> np.uint64(31)))


def rng_bits(seed: int, key: Sequence[int]) -> int:
    """
    Hashes a seed and a key tuple into a 64-bit word.

    The seed is mixed first, then every key component is xored into the
    running word and mixed again.
    """
    word = splitmix64(seed & MASK64)
    for part in key:
        word = splitmix64(word ^ (int(part) & MASK64))
    return word


def rng_value(seed: int, key: Sequence[int]) -> float:
    """
    Returns the uniform value in [0, 1) attached to (seed, key).

    Args:
        seed (int): Unsigned 64-bit seed.
        key (Sequence[int]): Either (stream, generation, x, y) or (stream, counter).

    Returns:
        float: The top 53 bits of the key hash scaled to [0, 1).
    """
    return (rng_bits(seed, key) >> 11) * UNIT_53


def _values_from_words(words: NDArray[np.uint64]) -> NDArray[np.float64]:
    return (words >> np.uint64(11)).astype(np.float64) * UNIT_53


def rng_grid(
    seed: int, stream: int, generation: int, shape: tuple[int, int]
) -> NDArray[np.float64]:
    """
    Returns a grid whose entry [x, y] equals rng_value(seed, (stream, generation, x, y)).
    """
    prefix = rng_bits(seed, (stream, generation))
    rows, cols = np.indices(shape, dtype=np.uint64)
    words = np.full(shape, prefix, dtype=np.uint64)
    words = _splitmix64_array(words ^ rows)
    words = _splitmix64_array(words ^ cols)
    return _values_from_words(words)


def rng_sequence(seed: int, stream: int, count: int, start: int = 0) -> NDArray[np.float64]:
    """
    Returns rng_value(seed, (stream, counter)) for counter = start, ..., start + count - 1.
    """
    prefix = rng_bits(seed, (stream,))
    counters = np.arange(start, start + count, dtype=np.uint64)
    words = np.full(count, prefix, dtype=np.uint64)
    return _values_from_words(_splitmix64_array(words ^ counters))


def parallel_map(function: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """
    Applies function to every item on a thread pool and returns results in input order.

    The pool size is capped by thread_count(); results never depend on it.
    """
    work = list(items)
    threads = min(thread_count(), len(work))
    if threads <= 1:
        return [function(item) for item in work]

    logger.debug("Mapping %d items over %d threads", len(work), threads)
    results = Parallel(n_jobs=threads, prefer="threads")(delayed(function)(item) for item in work)
    return cast(list[R], list(results))


@dataclass(frozen=True)
class Frame:
    """
    An 8-bit raster image.

    Attributes:
        pixels: Grayscale bytes of shape (height, width) or RGB bytes of
            shape (height, width, 3), row-major.
    """

    pixels: NDArray[np.uint8]

    def __post_init__(self) -> None:
        """
        Validates shape and data type of the pixel array.

        Raises:
            TypeError: If the pixels are not uint8.
            ValueError: If the array is neither grayscale nor RGB.
        """
        if self.pixels.dtype != np.uint8:
            raise TypeError(f"Frame pixels must be uint8. Invalid: {self.pixels.dtype}")
        grayscale = self.pixels.ndim == 2
        rgb = self.pixels.ndim == 3 and self.pixels.shape[2] == 3
        if not (grayscale or rgb):
            raise ValueError(
                f"Frame pixels must be (h, w) or (h, w, 3). Invalid: {self.pixels.shape}"
            )

    @property
    def width(self) -> int:
        """Width in pixels."""
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        """Height in pixels."""
        return int(self.pixels.shape[0])

    @property
    def format(self) -> str:
        """Either pgm (grayscale) or ppm (RGB)."""
        return "pgm" if self.pixels.ndim == 2 else "ppm"

    def to_bytes(self) -> bytes:
        """Returns the binary P5/P6 encoding with maxval 255."""
        magic = "P5" if self.format == "pgm" else "P6"
        header = f"{magic}\n{self.width} {self.height}\n255\n".encode("ascii")
        return header + np.ascontiguousarray(self.pixels).tobytes()


def write_frame(frame: Frame, path: str | Path, fmt: str | None = None) -> Path:
    """
    Writes a frame as binary PGM or PPM.

    Args:
        frame (Frame): The frame to write.
        path (str | Path): Target file.
        fmt (str, optional): pgm or ppm; must match the frame's channels if given.

    Returns:
        Path: The written file.
    """
    if fmt is not None and fmt != frame.format:
        raise ValueError(f"A {frame.format} frame cannot be written as {fmt}.")
    target = Path(path)
    target.write_bytes(frame.to_bytes())
    logger.debug("Wrote %s frame %s", frame.format, target)
    return target


def game_frame(strategies: NDArray[np.uint8], previous: NDArray[np.uint8]) -> Frame:
    """
    Colors a board: C after C blue, D after D red, C after D green, D after C yellow.
    """
    return Frame(GAME_PALETTE[strategies.astype(np.intp), previous.astype(np.intp)])


def _log_ramp(values: NDArray[np.float64], reference: float) -> NDArray[np.float64]:
    """Maps log10(values/reference) from [-3, 3] decades onto [0, 1]."""
    safe = np.maximum(values, np.finfo(np.float64).tiny) / reference
    return cast(
        NDArray[np.float64],
        np.clip((np.log10(safe) + RAMP_DECADES) / (2.0 * RAMP_DECADES), 0.0, 1.0),
    )


def lattice_frame(
    hosts: NDArray[np.float64],
    parasitoids: NDArray[np.float64],
    host_equilibrium: float,
    parasitoid_equilibrium: float,
) -> Frame:
    """
    Shades a host-parasitoid lattice.

    Empty patches are black, patches with hosts but hardly any parasitoids
    get a gray ramp 64..176 by host density, patches with parasitoids get a
    pale ramp 192..255 by parasitoid density. Both ramps are logarithmic
    over three decades either side of the equilibrium.
    """
    host_ramp = np.rint(64.0 + 112.0 * _log_ramp(hosts, host_equilibrium))
    parasitoid_ramp = np.rint(192.0 + 63.0 * _log_ramp(parasitoids, parasitoid_equilibrium))

    empty = hosts < EMPTY_THRESHOLD * host_equilibrium
    hosts_only = parasitoids < PARASITOID_THRESHOLD * parasitoid_equilibrium
    shades = np.where(empty, 0.0, np.where(hosts_only, host_ramp, parasitoid_ramp))
    return Frame(shades.astype(np.uint8))


class RecordFormatting:
    """
    A utility class converting values into lossless CSV cells and
    JSON-compatible structures.
    """

    @classmethod
    def format_cell(cls, value: Any) -> str:
        """
        Formats a single CSV cell.

        Floats use the shortest representation that reads back to the same
        value; None becomes an empty cell.
        """
        if isinstance(value, np.generic):
            value = value.item()
        if value is None:
            return ""
        if isinstance(value, Enum):
            return str(value.value)
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    @classmethod
    def to_record(cls, value: Any) -> Any:
        """
        Converts dataclasses, enums, arrays and paths into JSON-compatible values.

        Non-finite floats become None.
        """
        if is_dataclass(value) and not isinstance(value, type):
            return {f.name: cls.to_record(getattr(value, f.name)) for f in fields(value)}
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, np.ndarray):
            return cls.to_record(value.tolist())
        if isinstance(value, np.generic):
            return cls.to_record(value.item())
        if isinstance(value, float):
            return value if math.isfinite(value) else None
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, Mapping):
            return {str(k): cls.to_record(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [cls.to_record(v) for v in value]
        return value


def to_record(value: Any) -> Any:
    """Shorthand for RecordFormatting.to_record."""
    return RecordFormatting.to_record(value)


def write_csv(records: Sequence[Mapping[str, Any]], path: str | Path) -> Path:
    """
    Writes homogeneous records as CSV with a header row and `\\n` line endings.

    Raises:
        ValueError: If there are no records or their keys differ.
    """
    if not records:
        raise ValueError("There are no records to write.")

    header = list(records[0].keys())
    for record in records:
        if list(record.keys()) != header:
            raise ValueError(f"Records are not homogeneous: {list(record.keys())} != {header}")

    target = Path(path)
    with open(target, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for record in records:
            writer.writerow([RecordFormatting.format_cell(record[key]) for key in header])

    logger.info("Wrote %d records to %s", len(records), target)
    return target


def read_csv(path: str | Path) -> list[dict[str, str]]:
    """Reads a CSV file written by write_csv into a list of string records."""
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def read_series(path: str | Path) -> NDArray[np.float64]:
    """
    Reads the first column of a CSV file as a series of floats.

    A leading row that does not parse as a number is treated as a header.

    Raises:
        InsufficientDataError: If the file holds no values.
        ValueError: If a later row does not parse as a number.
    """
    with open(path, encoding="utf-8", newline="") as f:
        rows = [row for row in csv.reader(f) if row and row[0].strip()]

    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]

    if not rows:
        raise InsufficientDataError(f"'{path}' does not contain any values.")

    try:
        return np.array([float(row[0]) for row in rows], dtype=np.float64)
    except ValueError as e:
        raise ValueError(f"'{path}' contains a non-numeric value: {e}") from e


def build_report(
    kind: str,
    config: Any,
    results: Mapping[str, Any],
    seed: int | None = None,
    argv: Sequence[str] | None = None,
) -> dict[str, Any]:
    """Assembles the JSON-compatible payload of a report."""
    report: dict[str, Any] = {
        "format_version": REPORT_FORMAT_VERSION,
        "artifact_version": package_version(),
        "kind": kind,
        "seed": seed,
        "config": to_record(config),
        "results": to_record(results),
    }
    if argv is not None:
        report["argv"] = list(argv)
    return report


def dump_report(report: Mapping[str, Any]) -> str:
    """Serializes a report with sorted keys; non-finite numbers are rejected."""
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(
    path: str | Path,
    kind: str,
    config: Any,
    results: Mapping[str, Any],
    seed: int | None = None,
    argv: Sequence[str] | None = None,
) -> Path:
    """
    Writes a JSON report echoing the configuration needed to re-run.

    Args:
        path (str | Path): Target file.
        kind (str): The experiment, e.g. "lattice run".
        config (Any): The resolved configuration (dataclasses or mappings).
        results (Mapping[str, Any]): The outcome of the run.
        seed (int, optional): Seed of the random stream.
        argv (Sequence[str], optional): Command line that replays the run.

    Returns:
        Path: The written file.
    """
    target = Path(path)
    report = build_report(kind, config, results, seed, argv)
    target.write_text(dump_report(report), encoding="utf-8")
    logger.info("Wrote report %s", target)
    return target
