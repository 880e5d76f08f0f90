"""
Shared helpers: timestamps, console logging, output files and the error hierarchy.
"""
import csv
import io
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence


# ==================== Helper Functions ====================

def get_timestamp():
    """Get current timestamp in readable format"""
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


def log(message: str):
    print(f"[{get_timestamp()}] {message}")


def warn(message: str):
    print(f"[{get_timestamp()}] ⚠️  {message}")


def log_error(message: str):
    print(f"[{get_timestamp()}] ❌ {message}", file=sys.stderr)


def progress(message: str):
    print(f"[surface] ➔ {message}")


# ==================== Errors ====================

class SurfaceError(Exception):
    """Base error; exit_code is what the CLI returns when it escapes a command"""

    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class NonFiniteEntries(SurfaceError):
    exit_code = 2


class NotHermitian(SurfaceError):
    exit_code = 2


class InvalidSpectrum(SurfaceError):
    exit_code = 2


class NotAProbabilityVector(InvalidSpectrum):
    pass


class OutOfRangeEntropy(SurfaceError):
    exit_code = 2


class OutOfDomain(SurfaceError):
    exit_code = 2


class InvalidArgument(SurfaceError):
    exit_code = 2


class DimensionMismatch(SurfaceError):
    exit_code = 3


class BadParameterCount(DimensionMismatch):
    pass


class BadParameterIndex(DimensionMismatch):
    pass


class UnsupportedDimension(SurfaceError):
    exit_code = 3


class NoConvergence(SurfaceError):
    exit_code = 1


class NegativeDeterminant(SurfaceError):
    """Metric determinant came out clearly negative or complex: a metric bug, not a user error"""
    exit_code = 1


class NoRoot(SurfaceError):
    exit_code = 1


class OutputNotWritable(SurfaceError):
    exit_code = 4


# ==================== Output ====================

def format_float(value) -> str:
    """Shortest round-trip decimal form of a binary64 value"""
    return repr(float(value))


def prepare_output(path) -> Path:
    """Create the parent directory of an output file, mapping OS errors to OutputNotWritable"""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputNotWritable(f"Cannot create output directory {target.parent}: {exc}")
    if target.is_dir():
        raise OutputNotWritable(f"Output path {target} is a directory")
    return target


def write_text(path, text: str) -> Path:
    target = prepare_output(path)
    try:
        target.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputNotWritable(f"Cannot write {target}: {exc}")
    return target


# ==================== Tables ====================

class OutputFormat:
    CSV = "csv"
    JSON = "json"

    ALL = (CSV, JSON)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def json_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Rows as a list of objects; floats keep the same shortest repr the CSV uses"""
    records = [dict(zip(header, row)) for row in rows]
    return json.dumps(records, indent=2, ensure_ascii=False) + "\n"


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], fmt: str = OutputFormat.CSV) -> Path:
    if fmt == OutputFormat.CSV:
        return write_text(path, csv_text(header, rows))
    if fmt == OutputFormat.JSON:
        return write_text(path, json_text(header, rows))
    raise InvalidArgument(f"Unknown output format: {fmt}")
