import json

import pytest

from addcast.config import (
    HolidaySpec,
    ModelConfig,
    SeasonalitySpec,
    TrendSpec,
    config_from_dict,
    config_to_dict,
)
from addcast.errors import DomainError, SchemaError


class TestTrendSpec:
    def test_logistic_requires_capacity(self):
        with pytest.raises(DomainError):
            TrendSpec(growth="logistic")

    def test_capacity_only_for_logistic(self):
        with pytest.raises(DomainError):
            TrendSpec(growth="linear", capacity=5.0)

    def test_invalid_range(self):
        with pytest.raises(DomainError):
            TrendSpec(changepoint_range=0.0)
        with pytest.raises(DomainError):
            TrendSpec(changepoint_range=1.5)

    def test_nonpositive_prior(self):
        with pytest.raises(DomainError):
            TrendSpec(changepoint_prior_scale=0.0)


class TestModelConfig:
    def test_interval_levels_must_increase(self):
        with pytest.raises(DomainError):
            ModelConfig(interval_levels=(0.95, 0.80))

    def test_interval_levels_in_open_unit(self):
        with pytest.raises(DomainError):
            ModelConfig(interval_levels=(0.5, 1.0))

    def test_minimum_samples(self):
        with pytest.raises(DomainError):
            ModelConfig(interval_samples=99)

    def test_duplicate_seasonality_names(self):
        with pytest.raises(DomainError):
            ModelConfig(
                seasonalities=(
                    SeasonalitySpec(name="s", period=7.0, fourier_order=1),
                    SeasonalitySpec(name="s", period=30.5, fourier_order=1),
                )
            )

    def test_reserved_seasonality_name(self):
        with pytest.raises(DomainError):
            ModelConfig(
                seasonalities=(SeasonalitySpec(name="trend", period=7.0, fourier_order=1),)
            )

    def test_defaults(self):
        config = ModelConfig()
        assert [s.name for s in config.seasonalities] == ["yearly", "weekly"]
        assert config.seasonalities[0].fourier_order == 10
        assert config.seasonalities[1].fourier_order == 4
        assert config.trend.n_changepoints == 25
        assert config.trend.changepoint_prior_scale == 0.05
        assert config.interval_levels == (0.80, 0.95)
        assert config.interval_samples == 1000
        assert config.seed == 42


class TestConfigDictRoundtrip:
    def test_roundtrip(self):
        config = ModelConfig(
            trend=TrendSpec(growth="logistic", n_changepoints=7, capacity=12.0),
            seasonalities=(
                SeasonalitySpec(name="weekly", period=7.0, fourier_order=3, mode="multiplicative"),
            ),
            holidays=(
                HolidaySpec(name="h", dates=frozenset([18500, 18865]), upper_window=2),
            ),
            interval_levels=(0.5, 0.9),
            interval_samples=250,
            seed=7,
        )
        back = config_from_dict(config_to_dict(config))
        assert back == config

    def test_dict_is_json_serializable(self):
        json.dumps(config_to_dict(ModelConfig()))

    def test_malformed_rejected(self):
        with pytest.raises(SchemaError):
            config_from_dict({"seasonalities": [{"name": "weekly"}]})
        with pytest.raises(SchemaError):
            config_from_dict("not a dict")

    def test_unset_seasonalities_default_explicit_empty_respected(self):
        assert len(config_from_dict({}).seasonalities) == 2
        assert len(config_from_dict({"seasonalities": []}).seasonalities) == 0
