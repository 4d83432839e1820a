"""
Quote file parsing and the four-step cleaning procedure.

Quote streams are handled column-wise as pandas DataFrames:

- raw frames carry ``day, timestamp_ns, bid_price, ask_price, bid_size, ask_size,
  symbol, line_number``
- event frames (cleaned) carry ``day, timestamp_ns, bid_price, ask_price,
  bid_volume, ask_volume, mid_price, symbol``

``RawQuoteRecord`` / ``QuoteEvent`` give the record-level view of single rows.
"""

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from lob_bench.errors import ChronologyError, IngestError
from lob_bench.pydantic_models import (
    NS_PER_SECOND,
    SESSION_CLOSE_NS,
    SESSION_OPEN_NS,
    CleaningReport,
    ColumnMapping,
    ParseDiagnostic,
    QuoteEvent,
    QuoteSummary,
    RawQuoteRecord,
)

logger = logging.getLogger(__name__)

RAW_COLUMNS = [
    "day",
    "timestamp_ns",
    "bid_price",
    "ask_price",
    "bid_size",
    "ask_size",
    "symbol",
    "line_number",
]
EVENT_COLUMNS = [
    "day",
    "timestamp_ns",
    "bid_price",
    "ask_price",
    "bid_volume",
    "ask_volume",
    "mid_price",
    "symbol",
]

_NUMERIC_FIELDS = ("timestamp_ns", "bid_price", "ask_price", "bid_size", "ask_size")
_SURPLUS = "__surplus__"
_LINE_BREAK = re.compile(r"\r\n|\r|\n")
_OUTLIER_CHUNK = 4096

_JUMP_UPPER = 1.5
_JUMP_LOWER = 0.5
_MAX_SPREAD_OF_MID = 0.25
_MAX_ASK_OVER_BID = 1.5


@dataclass
class ParsedQuotes:
    """Parsed quote lines plus one diagnostic per rejected line."""

    frame: pd.DataFrame
    errors: list[ParseDiagnostic] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frame)

    def records(self) -> list[RawQuoteRecord]:
        return [RawQuoteRecord(**row) for row in self.frame.to_dict("records")]


def empty_raw_frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "day": pd.Series(dtype=np.int64),
            "timestamp_ns": pd.Series(dtype=np.int64),
            "bid_price": pd.Series(dtype=np.float64),
            "ask_price": pd.Series(dtype=np.float64),
            "bid_size": pd.Series(dtype=np.int64),
            "ask_size": pd.Series(dtype=np.int64),
            "symbol": pd.Series(dtype=object),
            "line_number": pd.Series(dtype=np.int64),
        }
    )


def empty_event_frame() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "day": pd.Series(dtype=np.int64),
            "timestamp_ns": pd.Series(dtype=np.int64),
            "bid_price": pd.Series(dtype=np.float64),
            "ask_price": pd.Series(dtype=np.float64),
            "bid_volume": pd.Series(dtype=np.int64),
            "ask_volume": pd.Series(dtype=np.int64),
            "mid_price": pd.Series(dtype=np.float64),
            "symbol": pd.Series(dtype=object),
        }
    )


def parse_taq_timestamp(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Convert HHMMSSxxxxxxxxx integers to nanoseconds since midnight.

    Returns:
        (timestamps_ns, valid) where ``valid`` flags well-formed clock fields.
    """
    values = np.asarray(values, dtype=np.int64)
    hours = values // 10**13
    minutes = (values // 10**11) % 100
    seconds = (values // 10**9) % 100
    fraction = values % 10**9
    valid = (values >= 0) & (hours < 24) & (minutes < 60) & (seconds < 60)
    stamps = ((hours * 60 + minutes) * 60 + seconds) * NS_PER_SECOND + fraction
    return stamps, valid


def format_taq_timestamp(stamps: np.ndarray) -> pd.Series:
    """Inverse of ``parse_taq_timestamp``, zero-padded to 15 digits."""
    stamps = np.asarray(stamps, dtype=np.int64)
    seconds_total = stamps // NS_PER_SECOND
    fraction = stamps % NS_PER_SECOND
    hours = seconds_total // 3600
    minutes = (seconds_total // 60) % 60
    seconds = seconds_total % 60
    encoded = hours * 10**13 + minutes * 10**11 + seconds * 10**9 + fraction
    return pd.Series(encoded).astype(str).str.zfill(15)


def _numeric(column: pd.Series) -> pd.Series:
    return pd.to_numeric(column, errors="coerce")


def _read_typed(path: Path, mapping: ColumnMapping) -> pd.DataFrame | None:
    """
    C-engine read with typed numeric columns, one row per physical line.

    Returns None when a line has surplus fields or a numeric field holds text;
    such files go through ``_read_screened``.
    """
    dtypes = {
        name: np.float64 if name in _NUMERIC_FIELDS else "category" for name in mapping.columns
    }
    try:
        table = pd.read_csv(
            path,
            sep=mapping.delimiter,
            header=None,
            names=[*mapping.columns, _SURPLUS],
            skiprows=1 if mapping.header else 0,
            dtype=dtypes,
            skip_blank_lines=False,
            quoting=csv.QUOTE_NONE,
            engine="c",
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=mapping.columns)
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"Cannot read {path}: {e}") from e
    except ValueError:
        return None
    if not isinstance(table.index, pd.RangeIndex) or table[_SURPLUS].notna().any():
        return None
    return table.drop(columns=_SURPLUS)


def _read_screened(
    path: Path, mapping: ColumnMapping, first_line: int
) -> tuple[pd.DataFrame, dict[int, str]]:
    """
    Line-level read: field counts are checked per line before pandas sees the
    text, so any number of surplus fields becomes a diagnostic for that line.
    """
    n_columns = len(mapping.columns)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"Cannot read {path}: {e}") from e

    lines = _LINE_BREAK.split(text)
    if lines and lines[-1] == "":
        lines.pop()
    if mapping.header:
        lines = lines[1:]
    series = pd.Series(lines, dtype=object)
    numbers = np.arange(first_line, first_line + len(series), dtype=np.int64)

    blank = (series.str.strip() == "").to_numpy(dtype=bool)
    fields = (series.str.count(re.escape(mapping.delimiter)) + 1).to_numpy(dtype=np.int64)
    surplus = ~blank & (fields > n_columns)
    fewer = ~blank & (fields < n_columns)
    well_formed = ~(blank | surplus | fewer)

    arity_errors = {int(n): f"expected {n_columns} fields, found more" for n in numbers[surplus]}
    arity_errors.update(
        {int(n): f"expected {n_columns} fields, found fewer or empty fields" for n in numbers[fewer]}
    )

    if well_formed.any():
        table = pd.read_csv(
            io.StringIO("\n".join(series[well_formed])),
            sep=mapping.delimiter,
            header=None,
            names=mapping.columns,
            dtype=str,
            skip_blank_lines=False,
            quoting=csv.QUOTE_NONE,
            engine="c",
        )
    else:
        table = pd.DataFrame(columns=mapping.columns, dtype=object)
    table.index = pd.Index(numbers[well_formed])
    return table, arity_errors


def parse_quote_file(
    path: str | Path, mapping: ColumnMapping | None = None, day: int = 0
) -> ParsedQuotes:
    """
    Parse one delimited quote file.

    Records are returned in file order. Malformed lines are not dropped silently:
    each produces a ``ParseDiagnostic`` with its 1-based line number.

    Args:
        path: Quote file to read.
        mapping: Column layout; defaults to the six-column TAQ-style layout.
        day: Trading-day index assigned to the records (offset of the file's
            own dates when the mapping declares a date column).

    Raises:
        IngestError: If the file cannot be read.
    """
    mapping = mapping or ColumnMapping()
    path = Path(path)
    n_columns = len(mapping.columns)
    first_line = 2 if mapping.header else 1

    named = _read_typed(path, mapping)
    arity_errors: dict[int, str] = {}
    if named is None:
        logger.debug(f"{path.name}: irregular lines, screening line by line")
        named, arity_errors = _read_screened(path, mapping, first_line)
    else:
        named.index = pd.RangeIndex(first_line, first_line + len(named))
    named = named[~named.isna().all(axis=1)]
    if len(named) == 0:
        errors = [
            ParseDiagnostic(path=str(path), line_number=number, message=arity_errors[number])
            for number in sorted(arity_errors)
        ]
        if errors:
            logger.warning(f"{path.name}: rejected {len(errors)} malformed line(s)")
        return ParsedQuotes(frame=empty_raw_frame(), errors=errors)

    stamp_raw = _numeric(named["timestamp_ns"])
    bid = _numeric(named["bid_price"])
    ask = _numeric(named["ask_price"])
    bid_size = _numeric(named["bid_size"])
    ask_size = _numeric(named["ask_size"])

    missing_field = named[mapping.columns].isna().any(axis=1).to_numpy()
    bad_number = (
        stamp_raw.isna() | bid.isna() | ask.isna() | bid_size.isna() | ask_size.isna()
    ).to_numpy()
    fractional_size = (
        (bid_size.fillna(0) % 1 != 0) | (ask_size.fillna(0) % 1 != 0)
    ).to_numpy()
    stamp_filled = stamp_raw.fillna(0)
    fractional_stamp = ((stamp_filled % 1 != 0) | (stamp_filled.abs() >= 1e18)).to_numpy()

    stamp_values = stamp_filled.to_numpy(dtype=np.float64)
    stamp_values = np.where(fractional_stamp, 0.0, stamp_values).astype(np.int64)
    if mapping.timestamp_format == "taq":
        stamps, stamp_ok = parse_taq_timestamp(stamp_values)
    else:
        stamps, stamp_ok = stamp_values, stamp_values >= 0
    bad_stamp = ~stamp_ok | fractional_stamp

    rejected = missing_field | bad_number | fractional_size | bad_stamp
    line_numbers = named.index.to_numpy(dtype=np.int64)

    messages = dict(arity_errors)
    for position in np.flatnonzero(rejected):
        if missing_field[position]:
            message = f"expected {n_columns} fields, found fewer or empty fields"
        elif bad_number[position]:
            message = "non-numeric price, size or timestamp"
        elif fractional_size[position]:
            message = "share sizes must be whole numbers"
        else:
            message = f"malformed timestamp for format '{mapping.timestamp_format}'"
        messages[int(line_numbers[position])] = message
    errors = [
        ParseDiagnostic(path=str(path), line_number=number, message=messages[number])
        for number in sorted(messages)
    ]

    keep = ~rejected
    if "symbol" in named.columns:
        symbols = named["symbol"].to_numpy(dtype=object)[keep]
    else:
        symbols = np.full(int(keep.sum()), "", dtype=object)

    if mapping.date is not None:
        day_offsets, _ = pd.factorize(named[mapping.date].to_numpy(dtype=object)[keep])
        days = day + day_offsets.astype(np.int64)
    else:
        days = np.full(int(keep.sum()), day, dtype=np.int64)

    frame = pd.DataFrame(
        {
            "day": days,
            "timestamp_ns": stamps[keep],
            "bid_price": bid.to_numpy(dtype=np.float64)[keep],
            "ask_price": ask.to_numpy(dtype=np.float64)[keep],
            "bid_size": bid_size.to_numpy(dtype=np.float64)[keep].astype(np.int64),
            "ask_size": ask_size.to_numpy(dtype=np.float64)[keep].astype(np.int64),
            "symbol": symbols,
            "line_number": line_numbers[keep],
        }
    )

    if errors:
        logger.warning(f"{path.name}: rejected {len(errors)} malformed line(s)")
    logger.debug(f"Parsed {len(frame)} record(s) from {path}")
    return ParsedQuotes(frame=frame, errors=errors)


def parse_quote_files(
    paths: Sequence[str | Path], mapping: ColumnMapping | None = None
) -> ParsedQuotes:
    """
    Parse several daily files of one symbol, in chronological order.

    Without a date column each file is one trading day; with one, days are
    numbered consecutively across files.
    """
    mapping = mapping or ColumnMapping()
    frames: list[pd.DataFrame] = []
    errors: list[ParseDiagnostic] = []
    next_day = 0
    for path in paths:
        parsed = parse_quote_file(path, mapping, day=next_day)
        if len(parsed.frame):
            frames.append(parsed.frame)
            next_day = int(parsed.frame["day"].max()) + 1
        elif mapping.date is None:
            next_day += 1
        errors.extend(parsed.errors)
    frame = pd.concat(frames, ignore_index=True) if frames else empty_raw_frame()
    return ParsedQuotes(frame=frame, errors=errors)


def find_quote_files(
    source_folder: str | Path, file_extensions: Iterable[str] | None = None
) -> list[Path]:
    """
    Recursively find quote files under ``source_folder``, sorted by path.

    Args:
        source_folder: Folder to search (may have subfolders).
        file_extensions: Extensions to accept; defaults to ['.csv', '.txt'].

    Raises:
        IngestError: If the folder does not exist.
    """
    if file_extensions is None:
        file_extensions = [".csv", ".txt"]

    source_path = Path(source_folder)
    if not source_path.exists():
        raise IngestError(f"Source folder does not exist: {source_folder}")

    found: list[Path] = []
    for ext in file_extensions:
        files = list(source_path.rglob(f"*{ext}"))
        found.extend(files)
        logger.debug(f"Found {len(files)} {ext} file(s) in {source_folder}")
    return sorted(found)


def as_raw_frame(events: pd.DataFrame) -> pd.DataFrame:
    """View cleaned events as raw records (for re-cleaning)."""
    raw = events.rename(columns={"bid_volume": "bid_size", "ask_volume": "ask_size"})
    raw = raw.drop(columns=["mid_price"])
    raw["line_number"] = np.arange(1, len(raw) + 1, dtype=np.int64)
    return raw[RAW_COLUMNS]


def _check_chronology(day: np.ndarray, stamps: np.ndarray) -> None:
    if len(stamps) < 2:
        return
    day_step = np.diff(day)
    stamp_step = np.diff(stamps)
    backwards = (day_step < 0) | ((day_step == 0) & (stamp_step < 0))
    if backwards.any():
        index = int(np.flatnonzero(backwards)[0]) + 1
        raise ChronologyError(index)


def _apply_outlier_rules(
    day: np.ndarray, mid: np.ndarray, wide: np.ndarray, candidates: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rule (iv): price-jump check against the previous surviving mid of the same
    day, then the wide-spread check.

    Survivors set the reference for the next record, so the candidates are
    scanned in chunks: up to the first dropped record every candidate survives
    and its predecessor is the reference; the scan restarts after each drop.
    """
    n = len(mid)
    keep = np.zeros(n, dtype=bool)
    jump = np.zeros(n, dtype=bool)
    wide_drop = np.zeros(n, dtype=bool)

    positions = np.flatnonzero(candidates)
    cand_day = day[positions]
    cand_mid = mid[positions]
    cand_wide = wide[positions]
    total = len(positions)

    reference = np.nan
    reference_day = None
    start = 0
    size = _OUTLIER_CHUNK
    while start < total:
        stop = min(start + size, total)
        d = cand_day[start:stop]
        m = cand_mid[start:stop]
        previous = np.empty(stop - start)
        previous[0] = reference if reference_day == d[0] else np.nan
        previous[1:] = np.where(d[1:] == d[:-1], m[:-1], np.nan)
        jumps = (m > _JUMP_UPPER * previous) | (m < _JUMP_LOWER * previous)
        hits = np.flatnonzero(jumps | cand_wide[start:stop])

        if hits.size == 0:
            keep[positions[start:stop]] = True
            reference, reference_day = m[-1], d[-1]
            start = stop
            size = min(2 * size, _OUTLIER_CHUNK)
            continue

        first = int(hits[0])
        keep[positions[start:start + first]] = True
        if jumps[first]:
            jump[positions[start + first]] = True
        else:
            wide_drop[positions[start + first]] = True
        reference, reference_day = previous[first], d[first]
        start += first + 1
        # short chunks through runs of drops
        size = max(16, 2 * first)
    return keep, jump, wide_drop


def clean(raw: ParsedQuotes | pd.DataFrame) -> tuple[pd.DataFrame, CleaningReport]:
    """
    Apply the cleaning rules in order; each dropped record is attributed to the
    first rule that rejects it.

    (i) outside 09:30-16:00; (ii) non-positive price, negative size or bid > ask;
    (iii) zero quantity on either side; (iv) mid more than 150% / less than 50%
    of the previous surviving mid (same day), then spread above 25% of the mid
    or ask above 150% of the bid.

    Returns:
        (events, report) with ``mid_price`` computed for every surviving record.

    Raises:
        ChronologyError: If records are not in chronological order.
    """
    frame = raw.frame if isinstance(raw, ParsedQuotes) else raw
    if len(frame) == 0:
        return empty_event_frame(), CleaningReport()

    day = frame["day"].to_numpy(dtype=np.int64)
    stamps = frame["timestamp_ns"].to_numpy(dtype=np.int64)
    bid = frame["bid_price"].to_numpy(dtype=np.float64)
    ask = frame["ask_price"].to_numpy(dtype=np.float64)
    bid_size = frame["bid_size"].to_numpy(dtype=np.int64)
    ask_size = frame["ask_size"].to_numpy(dtype=np.int64)

    _check_chronology(day, stamps)

    out_of_hours = (stamps < SESSION_OPEN_NS) | (stamps >= SESSION_CLOSE_NS)
    invalid = ~out_of_hours & (
        (bid <= 0) | (ask <= 0) | (bid_size < 0) | (ask_size < 0) | (bid > ask)
    )
    zero_quantity = ~out_of_hours & ~invalid & ((bid_size == 0) | (ask_size == 0))
    candidates = ~(out_of_hours | invalid | zero_quantity)

    mid = (bid + ask) / 2
    wide = ((ask - bid) > _MAX_SPREAD_OF_MID * mid) | (ask > _MAX_ASK_OVER_BID * bid)
    keep, jump, wide_drop = _apply_outlier_rules(day, mid, wide, candidates)

    events = pd.DataFrame(
        {
            "day": day[keep],
            "timestamp_ns": stamps[keep],
            "bid_price": bid[keep],
            "ask_price": ask[keep],
            "bid_volume": bid_size[keep],
            "ask_volume": ask_size[keep],
            "mid_price": mid[keep],
            "symbol": frame["symbol"].to_numpy()[keep],
        }
    )
    report = CleaningReport(
        total_in=len(frame),
        total_out=int(keep.sum()),
        dropped_out_of_hours=int(out_of_hours.sum()),
        dropped_invalid=int(invalid.sum()),
        dropped_zero_quantity=int(zero_quantity.sum()),
        dropped_price_jump=int(jump.sum()),
        dropped_wide_spread=int(wide_drop.sum()),
    )
    logger.info(
        f"Cleaned {report.total_in} record(s): kept {report.total_out}, "
        f"dropped {report.dropped_total}"
    )
    return events, report


def check_event_rules(events: pd.DataFrame) -> np.ndarray:
    """Per-event flag that every cleaning predicate holds (re-check of survivors)."""
    stamps = events["timestamp_ns"].to_numpy(dtype=np.int64)
    bid = events["bid_price"].to_numpy(dtype=np.float64)
    ask = events["ask_price"].to_numpy(dtype=np.float64)
    mid = events["mid_price"].to_numpy(dtype=np.float64)
    in_hours = (stamps >= SESSION_OPEN_NS) & (stamps < SESSION_CLOSE_NS)
    valid = (bid > 0) & (ask > 0) & (bid <= ask)
    positive = (events["bid_volume"].to_numpy() > 0) & (events["ask_volume"].to_numpy() > 0)
    narrow = ((ask - bid) <= _MAX_SPREAD_OF_MID * mid) & (ask <= _MAX_ASK_OVER_BID * bid)

    day = events["day"].to_numpy(dtype=np.int64)
    same_day = np.r_[False, day[1:] == day[:-1]]
    previous = np.r_[mid[:1], mid[:-1]]
    no_jump = ~same_day | (
        (mid <= _JUMP_UPPER * previous) & (mid >= _JUMP_LOWER * previous)
    )
    return in_hours & valid & positive & narrow & no_jump


def events_to_quote_events(events: pd.DataFrame) -> list[QuoteEvent]:
    columns = [c for c in EVENT_COLUMNS if c in events.columns]
    return [QuoteEvent(**row) for row in events[columns].to_dict("records")]


def quote_events_to_frame(events: Sequence[QuoteEvent]) -> pd.DataFrame:
    if not events:
        return empty_event_frame()
    frame = pd.DataFrame([event.model_dump() for event in events])
    return frame[EVENT_COLUMNS].astype(
        {"day": np.int64, "timestamp_ns": np.int64, "bid_volume": np.int64, "ask_volume": np.int64}
    )


def write_quote_file(
    events: pd.DataFrame, path: str | Path, mapping: ColumnMapping | None = None
) -> Path:
    """Write events (or raw records) in the delimited layout of ``mapping``."""
    mapping = mapping or ColumnMapping()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    stamps = events["timestamp_ns"].to_numpy(dtype=np.int64)
    columns = {
        "timestamp_ns": (
            format_taq_timestamp(stamps).to_numpy()
            if mapping.timestamp_format == "taq"
            else stamps
        ),
        "bid_price": events["bid_price"].to_numpy(),
        "ask_price": events["ask_price"].to_numpy(),
        "bid_size": events[
            "bid_volume" if "bid_volume" in events.columns else "bid_size"
        ].to_numpy(),
        "ask_size": events[
            "ask_volume" if "ask_volume" in events.columns else "ask_size"
        ].to_numpy(),
        "symbol": events["symbol"].to_numpy(),
    }
    if mapping.date is not None:
        columns[mapping.date] = events["day"].to_numpy()

    out = pd.DataFrame({name: columns[name] for name in mapping.columns})
    out.to_csv(
        path,
        sep=mapping.delimiter,
        header=mapping.header,
        index=False,
        float_format="%.12g",
        lineterminator="\n",
    )
    return path


def write_cleaning_report(report: CleaningReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(report.model_dump(), indent=4, sort_keys=False), encoding="utf-8"
    )
    return path


def summary_statistics(events: pd.DataFrame, symbol: str = "") -> list[QuoteSummary]:
    """
    Sample summary of cleaned quotes: spread (bps), mid-price, depth (shares at
    best bid + best ask) and events per trading day.
    """
    if len(events) == 0:
        return []
    mid = events["mid_price"].to_numpy(dtype=np.float64)
    series = {
        "spread_bps": (events["ask_price"].to_numpy() - events["bid_price"].to_numpy())
        / mid
        * 1e4,
        "mid_price": mid,
        "depth": (events["bid_volume"] + events["ask_volume"]).to_numpy(dtype=np.float64),
        "events_per_day": events.groupby("day").size().to_numpy(dtype=np.float64),
    }
    return [
        QuoteSummary(
            stock=symbol,
            statistic=name,
            mean=float(np.mean(values)),
            median=float(np.median(values)),
            std=float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
            min=float(np.min(values)),
            max=float(np.max(values)),
        )
        for name, values in series.items()
    ]
