from pydantic import BaseModel, Field, model_validator


class SynthConfig(BaseModel):
    """Parameters of the synthetic quote stream generator.

    ``n_events`` is the number of quotes per trading day.
    """

    symbol: str = "SYN"
    n_events: int = Field(default=20_000, gt=0)
    n_days: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    base_price: float = Field(default=100.0, gt=0)
    tick_size: float = Field(default=0.01, gt=0)
    spread_ticks_max: int = Field(default=2, ge=1)
    spread_change_prob: float = Field(default=0.05, ge=0, le=1)
    drift_per_event: float = 0.0
    trend_signal_strength: float = Field(default=0.0, ge=0, le=1)
    event_rate: float = Field(default=20.0, gt=0)
    window_k: int = Field(default=5, ge=2)
    # share of k-event windows in which neither the bid nor the spread moves
    quiet_window_prob: float = Field(default=0.3, ge=0, le=1)
    volume_mean: float = 1.5
    volume_sigma: float = Field(default=0.75, ge=0)
    lot_size: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check_spread(self) -> "SynthConfig":
        # Keeps generated quotes clear of the wide-spread cleaning rule.
        if self.spread_ticks_max * self.tick_size > 0.1 * self.base_price:
            raise ValueError("spread_ticks_max * tick_size must stay below 10% of base_price")
        return self
