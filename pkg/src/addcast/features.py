"""Feature construction for the additive model: piecewise trend basis,
harmonic seasonal features, holiday indicators, and regressor columns.

Internal time is affinely rescaled so the training span maps to [0, 1]
(changepoints and trend parameters live in that scale); seasonal features are
computed directly on epoch-days so their phase is calendar-anchored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .config import ModelConfig
from .errors import DomainError, MissingRegressorValue
from .timeseries import TimeSeries, format_epoch_day


def place_changepoints(
    train_timestamps: np.ndarray, n: int, range_fraction: float = 0.8
) -> np.ndarray:
    """Candidate changepoint times at uniform index quantiles of the first
    ``range_fraction`` of the observed timestamps.

    Returns epoch-days strictly after the first observation; requests for
    more changepoints than the eligible window holds collapse silently.
    """
    t = np.asarray(train_timestamps, dtype=np.int64)
    if len(t) < 2:
        raise DomainError("changepoint placement needs at least 2 observations")
    if n < 0:
        raise DomainError("changepoint count must be >= 0")
    if n == 0:
        return np.empty(0, dtype=np.int64)
    eligible = int(np.floor(range_fraction * len(t)))
    idx = (np.arange(1, n + 1, dtype=np.int64) * eligible) // (n + 1)
    idx = np.unique(idx[idx >= 1])
    return t[idx]


def changepoint_basis(t, changepoints) -> np.ndarray:
    """Indicator matrix a(t): entry j is 1 iff t >= changepoint j (closed
    boundary). Scalar t gives shape (S,), vector t gives (n, S)."""
    cps = np.asarray(changepoints, dtype=np.float64)
    t_arr = np.asarray(t, dtype=np.float64)
    return (t_arr[..., np.newaxis] >= cps).astype(np.float64)


def gamma_from_delta(changepoints, delta) -> np.ndarray:
    """Offset adjustments that keep the trend continuous: gamma_j = -t_j * delta_j."""
    cps = np.asarray(changepoints, dtype=np.float64)
    d = np.asarray(delta, dtype=np.float64)
    if cps.shape != d.shape:
        raise DomainError("changepoints and delta must have equal length")
    return -cps * d


def linear_trend(t, k: float, m: float, delta, changepoints) -> np.ndarray:
    """Piecewise-linear growth curve (k + a(t)'delta) * t + (m + a(t)'gamma)."""
    a = changepoint_basis(t, changepoints)
    gamma = gamma_from_delta(changepoints, delta)
    t_arr = np.asarray(t, dtype=np.float64)
    return (k + a @ np.asarray(delta, dtype=np.float64)) * t_arr + (m + a @ gamma)


def logistic_trend(t, k: float, m: float, delta, gamma, changepoints, capacity) -> np.ndarray:
    """Saturating growth curve C / (1 + exp(-(k + a'delta)(t - (m + a'gamma)))).

    ``capacity`` may be a scalar or a per-timestamp array.
    """
    cap = np.asarray(capacity, dtype=np.float64)
    if np.any(cap <= 0):
        raise DomainError("capacity must be positive")
    a = changepoint_basis(t, changepoints)
    t_arr = np.asarray(t, dtype=np.float64)
    rate = k + a @ np.asarray(delta, dtype=np.float64)
    offset = m + a @ np.asarray(gamma, dtype=np.float64)
    return cap * expit(rate * (t_arr - offset))


def fourier_features(t, period: float, order: int) -> np.ndarray:
    """Truncated harmonic expansion of t (days) at the given period.

    Columns are interleaved cos/sin per harmonic:
    [cos(2*pi*1*t/P), sin(2*pi*1*t/P), cos(2*pi*2*t/P), ...], 2*order wide.
    """
    if period <= 0:
        raise DomainError("period must be positive")
    if order < 1:
        raise DomainError("order must be >= 1")
    t_arr = np.asarray(t, dtype=np.float64)
    harmonics = np.arange(1, order + 1, dtype=np.float64)
    angles = (2.0 * np.pi / period) * t_arr[..., np.newaxis] * harmonics
    out = np.empty(t_arr.shape + (2 * order,), dtype=np.float64)
    out[..., 0::2] = np.cos(angles)
    out[..., 1::2] = np.sin(angles)
    return out


def holiday_features(timestamps, specs) -> np.ndarray:
    """0/1 indicator matrix, one column per holiday spec in order; entry is 1
    iff the timestamp falls in the spec's window-expanded date set."""
    t = np.asarray(timestamps, dtype=np.int64)
    out = np.zeros((len(t), len(specs)), dtype=np.float64)
    for j, spec in enumerate(specs):
        expanded = np.fromiter(spec.expanded_dates(), dtype=np.int64)
        out[:, j] = np.isin(t, expanded).astype(np.float64)
    return out


@dataclass(frozen=True)
class Block:
    """Column range [start, stop) of one feature group, with per-column prior
    scales. kind is one of trend / seasonal / holidays / regressors."""

    kind: str
    name: str
    start: int
    stop: int
    prior_scales: np.ndarray
    mode: str = "additive"

    @property
    def width(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class DesignMatrix:
    """Feature columns grouped into blocks, plus the scaled time axis the
    trend evaluates on.

    The trend block's columns are the changepoint indicators a(t); the
    remaining blocks enter the prediction linearly.
    """

    t_days: np.ndarray
    t_scaled: np.ndarray
    changepoints_scaled: np.ndarray
    X: np.ndarray
    blocks: tuple[Block, ...]

    def __post_init__(self):
        widths = sum(b.width for b in self.blocks)
        if widths != self.X.shape[1]:
            raise DomainError(
                f"block widths sum to {widths} but design has {self.X.shape[1]} columns"
            )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def trend_block(self) -> Block:
        return self.blocks[0]

    def block(self, kind: str, name: str | None = None) -> Block | None:
        for b in self.blocks:
            if b.kind == kind and (name is None or b.name == name):
                return b
        return None

    def columns(self, block: Block) -> np.ndarray:
        return self.X[:, block.start : block.stop]


@dataclass(frozen=True)
class TimeScaling:
    """Affine map from epoch-days to model time: (day - t_start) / t_span."""

    t_start: float
    t_span: float

    def scale(self, days) -> np.ndarray:
        return (np.asarray(days, dtype=np.float64) - self.t_start) / self.t_span


def _regressor_column(spec, timestamps: np.ndarray, extra: dict | None) -> np.ndarray:
    col = np.empty(len(timestamps), dtype=np.float64)
    for i, day in enumerate(timestamps):
        day = int(day)
        if extra is not None and day in extra:
            col[i] = extra[day]
        elif day in spec.values:
            col[i] = spec.values[day]
        else:
            raise MissingRegressorValue(
                f"regressor {spec.name!r} has no value for {format_epoch_day(day)}"
            )
    return col


def design_for_grid(
    timestamps: np.ndarray,
    config: ModelConfig,
    scaling: TimeScaling,
    changepoints_scaled: np.ndarray,
    extra_regressors: dict[str, dict[int, float]] | None = None,
) -> DesignMatrix:
    """Assemble the design for arbitrary timestamps under a fixed scaling and
    changepoint set (used both at fit time and when extending to a future grid)."""
    t = np.asarray(timestamps, dtype=np.int64)
    t_scaled = scaling.scale(t)
    cps = np.asarray(changepoints_scaled, dtype=np.float64)

    blocks: list[Block] = []
    columns: list[np.ndarray] = []
    cursor = 0

    trend_width = len(cps)
    blocks.append(
        Block(
            kind="trend",
            name="trend",
            start=0,
            stop=trend_width,
            prior_scales=np.full(trend_width, config.trend.changepoint_prior_scale),
        )
    )
    columns.append(changepoint_basis(t_scaled, cps))
    cursor = trend_width

    for spec in config.seasonalities:
        width = 2 * spec.fourier_order
        blocks.append(
            Block(
                kind="seasonal",
                name=spec.name,
                start=cursor,
                stop=cursor + width,
                prior_scales=np.full(width, spec.prior_scale),
                mode=spec.mode,
            )
        )
        columns.append(fourier_features(t, spec.period, spec.fourier_order))
        cursor += width

    if config.holidays:
        width = len(config.holidays)
        blocks.append(
            Block(
                kind="holidays",
                name="holidays",
                start=cursor,
                stop=cursor + width,
                prior_scales=np.array([h.prior_scale for h in config.holidays]),
            )
        )
        columns.append(holiday_features(t, config.holidays))
        cursor += width

    if config.regressors:
        width = len(config.regressors)
        blocks.append(
            Block(
                kind="regressors",
                name="regressors",
                start=cursor,
                stop=cursor + width,
                prior_scales=np.array([r.prior_scale for r in config.regressors]),
            )
        )
        reg_cols = np.column_stack(
            [
                _regressor_column(
                    r, t, (extra_regressors or {}).get(r.name)
                )
                for r in config.regressors
            ]
        )
        columns.append(reg_cols)
        cursor += width

    X = np.hstack(columns) if columns else np.empty((len(t), 0))

    return DesignMatrix(
        t_days=t,
        t_scaled=t_scaled,
        changepoints_scaled=cps,
        X=X,
        blocks=tuple(blocks),
    )


def build_design(ts: TimeSeries, config: ModelConfig) -> DesignMatrix:
    """Training-time design: derives the time scaling from the series span and
    places changepoints over the observed timestamps."""
    if len(ts) < 2:
        raise DomainError("design construction needs at least 2 observations")
    t = ts.timestamps
    scaling = TimeScaling(t_start=float(t[0]), t_span=float(t[-1] - t[0]))
    cp_days = place_changepoints(
        t, config.trend.n_changepoints, config.trend.changepoint_range
    )
    return design_for_grid(t, config, scaling, scaling.scale(cp_days))
