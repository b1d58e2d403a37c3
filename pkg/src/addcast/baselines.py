"""Reference forecasters: naive, seasonal-naive, and a lag-feature
walk-forward pipeline with a ridge-regularized linear point predictor.

The walk-forward protocol never reads held-out targets: each prediction is
appended to the working history before the next step's features are built,
so rolling statistics mix realized and predicted values by design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySeries,
    InsufficientHistory,
    SeriesShorterThanPeriod,
    SingularSystem,
)
from .timeseries import TimeSeries, epoch_day_to_date

LAGS = (1, 7, 30, 365)
MIN_HISTORY = 365
RIDGE_LAMBDA = 1e-6

FEATURE_NAMES = (
    "lag_1",
    "lag_7",
    "lag_30",
    "lag_365",
    "rolling_mean_7",
    "rolling_mean_30",
    "day_of_week",
    "month",
)


def naive_forecast(train_values, horizon: int) -> np.ndarray:
    """Repeat the last training value over the horizon."""
    v = np.asarray(train_values, dtype=np.float64)
    if len(v) == 0:
        raise EmptySeries("naive forecast needs a nonempty training series")
    return np.full(horizon, v[-1])


def seasonal_naive(train_values, horizon: int, period: int) -> np.ndarray:
    """Repeat the last full seasonal cycle: prediction i is
    train[n - period + (i mod period)]."""
    v = np.asarray(train_values, dtype=np.float64)
    if period < 1:
        raise SeriesShorterThanPeriod("period must be >= 1")
    if len(v) < period:
        raise SeriesShorterThanPeriod(
            f"training length {len(v)} shorter than period {period}"
        )
    idx = len(v) - period + (np.arange(horizon) % period)
    return v[idx]


@dataclass(frozen=True)
class LagFeatureRow:
    """Feature vector for one prediction date, built from prior history only."""

    lag_1: float
    lag_7: float
    lag_30: float
    lag_365: float
    rolling_mean_7: float
    rolling_mean_30: float
    day_of_week: int
    month: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.lag_1,
                self.lag_7,
                self.lag_30,
                self.lag_365,
                self.rolling_mean_7,
                self.rolling_mean_30,
                float(self.day_of_week),
                float(self.month),
            ]
        )


def build_lag_features(history, date: int) -> LagFeatureRow:
    """Lags and rolling means from the history tail, calendar fields from the
    target date; requires at least 365 prior observations."""
    h = np.asarray(history, dtype=np.float64)
    if len(h) < MIN_HISTORY:
        raise InsufficientHistory(
            f"need >= {MIN_HISTORY} prior observations, have {len(h)}"
        )
    d = epoch_day_to_date(int(date))
    return LagFeatureRow(
        lag_1=float(h[-1]),
        lag_7=float(h[-7]),
        lag_30=float(h[-30]),
        lag_365=float(h[-365]),
        rolling_mean_7=float(np.mean(h[-7:])),
        rolling_mean_30=float(np.mean(h[-30:])),
        day_of_week=d.weekday(),
        month=d.month,
    )


@dataclass(frozen=True)
class LinearLagRegressor:
    """Linear point predictor over the 8 lag features plus an intercept."""

    weights: np.ndarray  # 8 feature weights followed by the intercept

    def predict_row(self, features: np.ndarray) -> float:
        return float(features @ self.weights[:-1] + self.weights[-1])


def fit_linear_lag_regressor(train: TimeSeries) -> LinearLagRegressor:
    """Least squares on batch-built lag features of the training series, with
    ridge penalty RIDGE_LAMBDA on all coefficients for conditioning."""
    values = train.values
    if len(values) < MIN_HISTORY + 1:
        raise InsufficientHistory(
            f"need >= {MIN_HISTORY + 1} training rows, have {len(values)}"
        )
    rows = []
    targets = []
    for i in range(MIN_HISTORY, len(values)):
        row = build_lag_features(values[:i], int(train.timestamps[i]))
        rows.append(row.as_array())
        targets.append(values[i])
    X = np.column_stack([np.array(rows), np.ones(len(rows))])
    y = np.array(targets)
    gram = X.T @ X + RIDGE_LAMBDA * np.eye(X.shape[1])
    try:
        weights = np.linalg.solve(gram, X.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"normal equations are singular: {exc}") from None
    return LinearLagRegressor(weights=weights)


@dataclass(frozen=True)
class WalkForwardResult:
    """Predictions for the test dates that had enough history, plus the count
    of dates skipped by the minimum-history guard."""

    dates: np.ndarray
    predictions: np.ndarray
    n_skipped: int


def walk_forward_forecast(regressor, train: TimeSeries, test_dates) -> WalkForwardResult:
    """Recursive multi-step forecasting: predict each test date from the
    current history, then append the prediction before the next step.

    Test dates with fewer than 365 accumulated observations are skipped (and
    counted), mirroring the minimum-history guard of the batch features.
    """
    history = list(train.values)
    dates = []
    predictions = []
    n_skipped = 0
    for date in np.asarray(test_dates, dtype=np.int64):
        if len(history) < MIN_HISTORY:
            n_skipped += 1
            continue
        row = build_lag_features(history, int(date))
        y_pred = float(regressor.predict_row(row.as_array()))
        dates.append(int(date))
        predictions.append(y_pred)
        history.append(y_pred)
    return WalkForwardResult(
        dates=np.array(dates, dtype=np.int64),
        predictions=np.array(predictions, dtype=np.float64),
        n_skipped=n_skipped,
    )
