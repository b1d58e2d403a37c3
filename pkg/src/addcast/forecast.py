"""Forecast generation: future grids, per-component point predictions, and
Monte-Carlo prediction intervals.

The point forecast is the sum of the reported components (trend, each
seasonal block, holidays, regressors), so the additive identity holds exactly
for additive models. Interval simulation draws future trend changes from the
historical changepoint behaviour plus per-timestamp observation noise, and is
a pure function of (model, grid, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .estimator import FittedModel, _model_parts
from .features import design_for_grid, gamma_from_delta, logistic_trend
from .timeseries import format_epoch_day


@dataclass(frozen=True)
class FutureGrid:
    """Prediction timestamps: the training timestamps followed by consecutive
    future calendar days, with regressor values where declared."""

    timestamps: np.ndarray
    regressor_values: dict

    def __post_init__(self):
        t = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        if np.any(np.diff(t) <= 0):
            raise DomainError("grid timestamps must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "timestamps", t)

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class Forecast:
    """Per-timestamp point prediction, component contributions and interval
    bounds (original units).

    components always carries "trend", one entry per seasonal block,
    "holidays" and "regressors"; bounds maps coverage level to (lower, upper)
    arrays and is empty until intervals are simulated.
    """

    timestamps: np.ndarray
    yhat: np.ndarray
    components: dict
    bounds: dict

    def __len__(self) -> int:
        return len(self.timestamps)


def make_future_grid(model: FittedModel, periods: int, extra_regressors=None) -> FutureGrid:
    """Training timestamps plus the next ``periods`` consecutive calendar days.

    Regressor values for every grid timestamp must be available either in the
    model's regressor specs or in ``extra_regressors`` ({name: {day: value}}).
    """
    if periods < 0:
        raise DomainError("periods must be >= 0")
    future = np.arange(model.last_day + 1, model.last_day + 1 + periods, dtype=np.int64)
    timestamps = np.concatenate([model.train_timestamps, future])
    merged: dict = {}
    for spec in model.config.regressors:
        values = dict(spec.values)
        if extra_regressors and spec.name in extra_regressors:
            values.update(
                {int(k): float(v) for k, v in extra_regressors[spec.name].items()}
            )
        merged[spec.name] = values
    grid = FutureGrid(timestamps=timestamps, regressor_values=merged)
    # Fail fast on missing regressor values (raises MissingRegressorValue).
    _grid_design(model, grid)
    return grid


def _grid_design(model: FittedModel, grid: FutureGrid):
    return design_for_grid(
        grid.timestamps,
        model.config,
        model.time_scaling,
        model.changepoints_scaled,
        extra_regressors=grid.regressor_values,
    )


def _packed_params(model: FittedModel) -> np.ndarray:
    return np.concatenate(([model.k, model.m], model.delta, model.beta))


def _scaled_trend_spec(model: FittedModel):
    trend = model.config.trend
    if trend.growth == "logistic":
        trend = replace(trend, capacity=trend.capacity / model.y_scale)
    return trend


def _scaled_parts(model: FittedModel, grid: FutureGrid):
    design = _grid_design(model, grid)
    params = _packed_params(model)
    trend = _scaled_trend_spec(model)
    _, g, s_mul, _, Xr, mul_mask, _, unpacked = _model_parts(params, design, trend)
    _, _, _, beta = unpacked

    components: dict[str, np.ndarray] = {"trend": g}
    offset = design.trend_block.stop
    for block in design.blocks[1:]:
        cols = design.columns(block)
        coef = beta[block.start - offset : block.stop - offset]
        contribution = cols @ coef
        if block.kind == "seasonal":
            if block.mode == "multiplicative":
                contribution = g * contribution
            components[block.name] = contribution
        else:
            components[block.kind] = contribution
    components.setdefault("holidays", np.zeros_like(g))
    components.setdefault("regressors", np.zeros_like(g))

    yhat = np.zeros_like(g)
    for key in _component_order(model):
        yhat = yhat + components[key]
    return design, components, yhat, g, s_mul


def _component_order(model: FittedModel) -> list[str]:
    return (
        ["trend"]
        + [s.name for s in model.config.seasonalities]
        + ["holidays", "regressors"]
    )


def predict(model: FittedModel, grid: FutureGrid) -> Forecast:
    """Point forecast with additive component decomposition, original units."""
    _, components, yhat, _, _ = _scaled_parts(model, grid)
    scaled = {k: v * model.y_scale for k, v in components.items()}
    return Forecast(
        timestamps=grid.timestamps,
        yhat=yhat * model.y_scale,
        components=scaled,
        bounds={},
    )


def simulate_intervals(model: FittedModel, grid: FutureGrid, seed: int) -> dict:
    """Monte-Carlo prediction bounds per configured coverage level.

    Each draw samples future changepoints (count from a Poisson process at
    the historical changepoints-per-unit-scaled-time rate, locations uniform
    over the future span, magnitudes Laplace with scale mean|delta|) plus
    Normal(0, sigma) observation noise; bounds are type-7 empirical quantiles.
    Deterministic given (model, grid, seed); draws are sequential per sample.
    """
    if model.config.interval_samples < 100:
        raise DomainError("interval_samples must be >= 100")
    design, _, yhat, g, s_mul = _scaled_parts(model, grid)

    t = design.t_scaled
    cps = design.changepoints_scaled
    n_hist = len(cps)
    future_span = float(max(0.0, t[-1] - 1.0)) if len(t) else 0.0
    laplace_scale = float(np.mean(np.abs(model.delta))) if n_hist else 0.0
    sample_trend = n_hist > 0 and laplace_scale > 0.0 and future_span > 0.0
    logistic = model.config.trend.growth == "logistic"
    capacity_scaled = (
        model.config.trend.capacity / model.y_scale if logistic else None
    )

    rng = np.random.Generator(np.random.Philox(int(seed)))
    n_samples = model.config.interval_samples
    samples = np.empty((n_samples, len(t)))
    seasonal_factor = 1.0 + s_mul
    for i in range(n_samples):
        deviation = 0.0
        if sample_trend:
            n_new = rng.poisson(n_hist * future_span)
            if n_new > 0:
                locs = np.sort(rng.uniform(1.0, 1.0 + future_span, n_new))
                mags = rng.laplace(0.0, laplace_scale, n_new)
                if logistic:
                    cps_aug = np.concatenate([cps, locs])
                    delta_aug = np.concatenate([model.delta, mags])
                    g_new = logistic_trend(
                        t,
                        model.k,
                        model.m,
                        delta_aug,
                        gamma_from_delta(cps_aug, delta_aug),
                        cps_aug,
                        capacity_scaled,
                    )
                    deviation = g_new - g
                else:
                    active = t[:, np.newaxis] >= locs
                    deviation = (active * (t[:, np.newaxis] - locs)) @ mags
        noise = rng.normal(0.0, model.sigma, len(t))
        samples[i] = yhat + deviation * seasonal_factor + noise

    bounds = {}
    for level in model.config.interval_levels:
        lower = np.quantile(samples, (1.0 - level) / 2.0, axis=0)
        upper = np.quantile(samples, (1.0 + level) / 2.0, axis=0)
        bounds[level] = (lower * model.y_scale, upper * model.y_scale)
    return bounds


def forecast_with_intervals(model: FittedModel, grid: FutureGrid, seed=None) -> Forecast:
    """predict plus simulate_intervals under the model's (or given) seed."""
    point = predict(model, grid)
    bounds = simulate_intervals(
        model, grid, model.config.seed if seed is None else seed
    )
    return Forecast(
        timestamps=point.timestamps,
        yhat=point.yhat,
        components=point.components,
        bounds=bounds,
    )


def write_forecast_csv(forecast: Forecast, model: FittedModel, path) -> None:
    """Forecast table: ds, yhat, per-level bounds, then component columns."""
    levels = sorted(forecast.bounds)
    header = ["ds", "yhat"]
    for level in levels:
        pct = int(round(level * 100))
        header += [f"yhat_lower_{pct}", f"yhat_upper_{pct}"]
    seasonal_names = [s.name for s in model.config.seasonalities]
    header += ["trend"] + seasonal_names + ["holidays"]
    if model.config.regressors:
        header.append("regressors")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, day in enumerate(forecast.timestamps):
            row = [format_epoch_day(int(day)), repr(float(forecast.yhat[i]))]
            for level in levels:
                lower, upper = forecast.bounds[level]
                row += [repr(float(lower[i])), repr(float(upper[i]))]
            row.append(repr(float(forecast.components["trend"][i])))
            for name in seasonal_names:
                row.append(repr(float(forecast.components[name][i])))
            row.append(repr(float(forecast.components["holidays"][i])))
            if model.config.regressors:
                row.append(repr(float(forecast.components["regressors"][i])))
            writer.writerow(row)
