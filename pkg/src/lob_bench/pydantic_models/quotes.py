from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

NS_PER_SECOND = 1_000_000_000
SESSION_OPEN_NS = (9 * 3600 + 30 * 60) * NS_PER_SECOND  # 09:30:00
SESSION_CLOSE_NS = 16 * 3600 * NS_PER_SECOND  # 16:00:00

DEFAULT_COLUMNS = [
    "timestamp_ns",
    "bid_price",
    "ask_price",
    "bid_size",
    "ask_size",
    "symbol",
]


class ColumnMapping(BaseModel):
    """Layout of a delimited quote file."""

    delimiter: str = ","
    header: bool = False
    columns: list[str] = Field(default_factory=lambda: list(DEFAULT_COLUMNS))
    date: Optional[str] = None
    timestamp_format: Literal["taq", "ns"] = "taq"

    @model_validator(mode="after")
    def _check_columns(self) -> "ColumnMapping":
        required = set(DEFAULT_COLUMNS) - {"symbol"}
        missing = required - set(self.columns)
        if missing:
            raise ValueError(f"Column mapping is missing {sorted(missing)}")
        if self.date is not None and self.date not in self.columns:
            raise ValueError(f"Date column '{self.date}' is not in the column list")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("Column names must be unique")
        return self


class RawQuoteRecord(BaseModel):
    """One parsed, not yet cleaned, quote line."""

    timestamp_ns: int
    bid_price: float
    ask_price: float
    bid_size: int
    ask_size: int
    symbol: str = ""
    day: int = 0
    line_number: Optional[int] = None


class QuoteEvent(BaseModel):
    """A cleaned best bid/ask update."""

    model_config = ConfigDict(frozen=True)

    timestamp_ns: int
    bid_price: float = Field(gt=0)
    ask_price: float = Field(gt=0)
    bid_volume: int = Field(gt=0)
    ask_volume: int = Field(gt=0)
    mid_price: float
    day: int = 0
    symbol: str = ""

    @model_validator(mode="after")
    def _check_invariants(self) -> "QuoteEvent":
        if self.bid_price > self.ask_price:
            raise ValueError("bid_price must not exceed ask_price")
        if self.mid_price != (self.bid_price + self.ask_price) / 2:
            raise ValueError("mid_price must equal (bid_price + ask_price) / 2")
        if not SESSION_OPEN_NS <= self.timestamp_ns < SESSION_CLOSE_NS:
            raise ValueError("timestamp outside the 09:30-16:00 session")
        return self


class ParseDiagnostic(BaseModel):
    """A rejected input line."""

    path: str = ""
    line_number: int
    message: str


class CleaningReport(BaseModel):
    """Per-rule drop counts of one clean() call."""

    format_version: int = 1
    total_in: int = 0
    total_out: int = 0
    dropped_out_of_hours: int = 0
    dropped_invalid: int = 0
    dropped_zero_quantity: int = 0
    dropped_price_jump: int = 0
    dropped_wide_spread: int = 0

    @property
    def dropped_total(self) -> int:
        return (
            self.dropped_out_of_hours
            + self.dropped_invalid
            + self.dropped_zero_quantity
            + self.dropped_price_jump
            + self.dropped_wide_spread
        )

    @model_validator(mode="after")
    def _reconcile(self) -> "CleaningReport":
        if self.total_out + self.dropped_total != self.total_in:
            raise ValueError(
                f"Cleaning counts do not reconcile: {self.total_out} kept + "
                f"{self.dropped_total} dropped != {self.total_in} read"
            )
        return self

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(
            total_in=self.total_in + other.total_in,
            total_out=self.total_out + other.total_out,
            dropped_out_of_hours=self.dropped_out_of_hours + other.dropped_out_of_hours,
            dropped_invalid=self.dropped_invalid + other.dropped_invalid,
            dropped_zero_quantity=self.dropped_zero_quantity
            + other.dropped_zero_quantity,
            dropped_price_jump=self.dropped_price_jump + other.dropped_price_jump,
            dropped_wide_spread=self.dropped_wide_spread + other.dropped_wide_spread,
        )
