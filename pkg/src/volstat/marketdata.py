"""
Parsing, validation and calendar alignment of daily price and volatility-index
series read from delimited text files.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateDate,
    EmptyInput,
    EmptyIntersection,
    InputError,
    MalformedRow,
    NegativeLevel,
    NonPositivePrice,
    RowError,
)

TradingDate = dt.date

# Sub-period boundaries (inclusive) used by the named reports.
PERIODS: dict[str, tuple[dt.date, dt.date]] = {
    "1990-2016": (dt.date(1990, 1, 2), dt.date(2016, 12, 30)),
    "1990-2003": (dt.date(1990, 1, 2), dt.date(2003, 9, 19)),
    "2003-2016": (dt.date(2003, 9, 22), dt.date(2016, 12, 30)),
    "2003-2010": (dt.date(2003, 9, 22), dt.date(2010, 8, 30)),
    "2010-2016": (dt.date(2010, 8, 31), dt.date(2016, 12, 30)),
}


class IndexKind(str, enum.Enum):
    VIX = "VIX"
    VXO = "VXO"
    OTHER = "OTHER"


@dataclass(frozen=True)
class CsvFormat:
    """Column mapping for a delimited file.

    ``date_format`` is ``"iso"`` (YYYY-MM-DD) or ``"us"`` (M/D/YYYY).
    ``delimiter=None`` sniffs between comma and tab from the header line.
    Column names are matched exactly first, then case-insensitively.
    """

    date_column: str = "Date"
    value_column: str = "Close"
    date_format: str = "iso"
    delimiter: str | None = None


def _to_dates(dates: Iterable) -> np.ndarray:
    return np.asarray(list(dates) if not isinstance(dates, np.ndarray) else dates,
                      dtype="datetime64[D]")


@dataclass(frozen=True)
class DatedSeries:
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = _to_dates(self.dates)
        values = np.asarray(self.values, dtype=float)
        if dates.shape != values.shape or dates.ndim != 1:
            raise InputError("dates and values must be 1-d and of equal length")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise InputError("dates must be strictly increasing")
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return int(self.values.size)

    def __eq__(self, other):
        return (type(self) is type(other)
                and np.array_equal(self.dates, other.dates)
                and np.array_equal(self.values, other.values)
                and self._extra_eq(other))

    def _extra_eq(self, other):
        return True

    def observations(self) -> list[tuple[dt.date, float]]:
        return [(d.item(), float(v)) for d, v in zip(self.dates, self.values)]

    def between(self, start: dt.date | None = None, end: dt.date | None = None):
        """Restrict to ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return self._subset(mask)

    def _subset(self, mask):
        return replace(self, dates=self.dates[mask], values=self.values[mask])


@dataclass(frozen=True, eq=False)
class PriceSeries(DatedSeries):
    """Dated closing prices; dates strictly increasing, closes > 0."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(~(self.values > 0)):
            raise InputError("closing prices must be strictly positive")


@dataclass(frozen=True, eq=False)
class IndexSeries(DatedSeries):
    """Dated volatility-index levels (percent); levels >= 0."""

    kind: IndexKind = IndexKind.OTHER

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "kind", IndexKind(self.kind))
        if np.any(~(self.values >= 0)):
            raise InputError("index levels must be non-negative")

    def _extra_eq(self, other):
        return self.kind == other.kind


@dataclass(frozen=True)
class AlignedPanel:
    """Inner join of several dated series on their common dates."""

    dates: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != len(self.dates):
                raise InputError(f"column {name!r} length differs from date count")

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def __len__(self):
        return len(self.dates)

    def column(self, name: str) -> DatedSeries:
        return DatedSeries(self.dates, self.columns[name])

    def as_series(self) -> list[tuple[str, DatedSeries]]:
        return [(name, self.column(name)) for name in self.columns]


@dataclass
class ParseResult:
    """Outcome of scanning a file: accepted series plus every rejected row."""

    series: DatedSeries | None
    rejected: list[RowError]
    row_count: int

    @property
    def accepted_count(self) -> int:
        return 0 if self.series is None else len(self.series)


def parse_date(text: str, date_format: str = "iso") -> dt.date:
    text = text.strip()
    if date_format == "iso":
        return dt.date.fromisoformat(text)
    if date_format == "us":
        month, day, year = text.split("/")
        if len(year) != 4:
            raise ValueError(f"expected four-digit year in {text!r}")
        return dt.date(int(year), int(month), int(day))
    raise ValueError(f"unknown date format {date_format!r}")


def format_date(value: dt.date, date_format: str = "iso") -> str:
    if date_format == "iso":
        return value.isoformat()
    return f"{value.month}/{value.day}/{value.year}"


def _decode(raw) -> str:
    if isinstance(raw, (bytes, bytearray)):
        return bytes(raw).decode("utf-8-sig")
    if isinstance(raw, str):
        return raw
    data = raw.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _column_index(header: Sequence[str], name: str) -> int:
    stripped = [h.strip() for h in header]
    if name in stripped:
        return stripped.index(name)
    lowered = [h.lower() for h in stripped]
    if name.lower() in lowered:
        return lowered.index(name.lower())
    raise InputError(f"column {name!r} not found in header {stripped}")


def _scan(raw, fmt: CsvFormat, check) -> tuple[list, list, list[RowError], int]:
    text = _decode(raw)
    lines = text.splitlines()
    # Header is the first non-blank line.
    start = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if start is None:
        raise EmptyInput("input contains no header row")
    delimiter = fmt.delimiter or ("\t" if "\t" in lines[start] else ",")
    reader = csv.reader(io.StringIO("\n".join(lines[start:])), delimiter=delimiter)
    header = next(reader)
    i_date = _column_index(header, fmt.date_column)
    i_val = _column_index(header, fmt.value_column)

    rows: dict[dt.date, tuple[int, float]] = {}
    rejected: list[RowError] = []
    row_count = 0
    for offset, row in enumerate(reader):
        line = start + 2 + offset
        if not row or all(not c.strip() for c in row):
            continue
        row_count += 1
        try:
            date = parse_date(row[i_date], fmt.date_format)
            cell = row[i_val].strip()
            if not cell:
                raise ValueError("missing value")
            value = float(cell)
            if not np.isfinite(value):
                raise ValueError(f"non-finite value {cell!r}")
        except (ValueError, IndexError) as exc:
            rejected.append(MalformedRow(line, str(exc)))
            continue
        err = check(line, value)
        if err is not None:
            rejected.append(err)
            continue
        if date in rows:
            rejected.append(DuplicateDate(line, date))
            continue
        rows[date] = (line, value)
    ordered = sorted(rows)
    return ordered, [rows[d][1] for d in ordered], rejected, row_count


def _price_check(line, value):
    return None if value > 0 else NonPositivePrice(line, f"non-positive price {value}")


def _level_check(line, value):
    return None if value >= 0 else NegativeLevel(line, f"negative level {value}")


def scan_price_csv(raw, fmt: CsvFormat = CsvFormat()) -> ParseResult:
    """Parse without raising on bad rows; every row is accepted or rejected."""
    dates, values, rejected, count = _scan(raw, fmt, _price_check)
    series = PriceSeries(dates, values) if dates else None
    return ParseResult(series, rejected, count)


def scan_index_csv(raw, kind=IndexKind.OTHER, fmt: CsvFormat = CsvFormat()) -> ParseResult:
    dates, values, rejected, count = _scan(raw, fmt, _level_check)
    series = IndexSeries(dates, values, IndexKind(kind)) if dates else None
    return ParseResult(series, rejected, count)


def _finish(result: ParseResult):
    if result.rejected:
        raise result.rejected[0]
    if result.series is None:
        raise EmptyInput("input contains no data rows")
    return result.series


def parse_price_csv(raw, fmt: CsvFormat = CsvFormat()) -> PriceSeries:
    """Parse a delimited price file into a :class:`PriceSeries`.

    Rows may appear in any order; the result is sorted by date. The first
    rejected row is raised (``MalformedRow``, ``NonPositivePrice`` or
    ``DuplicateDate``); use :func:`scan_price_csv` to collect all of them.
    """
    return _finish(scan_price_csv(raw, fmt))


def parse_index_csv(raw, kind=IndexKind.OTHER, fmt: CsvFormat = CsvFormat()) -> IndexSeries:
    return _finish(scan_index_csv(raw, kind, fmt))


def write_series_csv(series: DatedSeries, fmt: CsvFormat = CsvFormat()) -> str:
    """Serialize a series with the given column mapping (inverse of parsing)."""
    delim = fmt.delimiter or ","
    out = [f"{fmt.date_column}{delim}{fmt.value_column}"]
    for d, v in series.observations():
        out.append(f"{format_date(d, fmt.date_format)}{delim}{v!r}")
    return "\n".join(out) + "\n"


def align(series: Sequence[tuple[str, DatedSeries]]) -> AlignedPanel:
    """Inner-join dated series on their common dates, keeping input order."""
    if not series:
        raise InputError("align needs at least one series")
    common = None
    for name, s in series:
        if len(s) == 0:
            raise InputError(f"series {name!r} is empty")
        common = s.dates if common is None else np.intersect1d(common, s.dates)
    if common.size == 0:
        raise EmptyIntersection("series share no common dates")
    columns = {}
    for name, s in series:
        idx = np.searchsorted(s.dates, common)
        columns[name] = np.asarray(s.values)[idx]
    return AlignedPanel(common, columns)
