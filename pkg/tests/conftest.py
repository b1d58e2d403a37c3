import numpy as np
import pytest

from addcast.timeseries import TimeSeries, parse_iso_date


def daily_days(start_iso: str, n: int) -> np.ndarray:
    start = parse_iso_date(start_iso)
    return np.arange(start, start + n, dtype=np.int64)


def make_series(start_iso: str, values) -> TimeSeries:
    values = np.asarray(values, dtype=np.float64)
    return TimeSeries(daily_days(start_iso, len(values)), values)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
