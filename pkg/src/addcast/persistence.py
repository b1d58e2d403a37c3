"""Bit-exact model serialization and reproducibility run-manifests.

Documents are canonical JSON: sorted keys, compact separators, floats as
shortest round-trip decimals. Equal models therefore produce byte-identical
documents, and SHA-256 digests of the canonical bytes are stable identifiers
for configs and datasets.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import ModelConfig, config_from_dict, config_to_dict
from .errors import SchemaError, UnsupportedVersion
from .estimator import FittedModel
from .timeseries import TimeSeries, format_epoch_day

FORMAT_VERSION = 1


def canonical_json_bytes(obj) -> bytes:
    """Canonical UTF-8 JSON: sorted keys, no whitespace, no NaN/Inf."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def config_digest(config: ModelConfig) -> str:
    """Content hash of the canonical config form; whitespace-only edits of a
    config file do not change it."""
    return sha256_hex(canonical_json_bytes(config_to_dict(config)))


def dataset_digest(ts: TimeSeries) -> str:
    values = [None if math.isnan(v) else float(v) for v in ts.values]
    payload = {
        "name": ts.name,
        "timestamps": [int(t) for t in ts.timestamps],
        "values": values,
    }
    return sha256_hex(canonical_json_bytes(payload))


def _atomic_write(path, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class ModelDocument:
    """Serializable form of a fitted model; round-trips bit-exactly."""

    format_version: int
    config: dict
    parameters: dict
    scaling: dict
    train_summary: dict

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": self.config,
            "parameters": self.parameters,
            "scaling": self.scaling,
            "train_summary": self.train_summary,
        }

    def to_bytes(self) -> bytes:
        return canonical_json_bytes(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ModelDocument":
        if not isinstance(data, dict):
            raise SchemaError("model document must be a JSON object")
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise UnsupportedVersion(f"unsupported format_version {version!r}")
        try:
            return cls(
                format_version=int(version),
                config=data["config"],
                parameters=data["parameters"],
                scaling=data["scaling"],
                train_summary=data["train_summary"],
            )
        except KeyError as exc:
            raise SchemaError(f"model document missing key {exc}") from None


def model_to_document(model: FittedModel) -> ModelDocument:
    blocks = [
        {"kind": kind, "name": name, "values": [float(v) for v in values]}
        for kind, name, values in model.coefficient_blocks()
    ]
    return ModelDocument(
        format_version=FORMAT_VERSION,
        config=config_to_dict(model.config),
        parameters={
            "k": model.k,
            "m": model.m,
            "delta": [float(v) for v in model.delta],
            "changepoints": [float(v) for v in model.changepoints_scaled],
            "blocks": blocks,
            "sigma": model.sigma,
        },
        scaling={
            "t_start": model.t_start,
            "t_span": model.t_span,
            "y_scale": model.y_scale,
        },
        train_summary={
            "n_obs": model.n_obs,
            "first": format_epoch_day(model.first_day),
            "last": format_epoch_day(model.last_day),
            "timestamps": [int(t) for t in model.train_timestamps],
        },
    )


def model_from_document(doc: ModelDocument) -> FittedModel:
    try:
        config = config_from_dict(doc.config)
        params = doc.parameters
        beta_parts = [np.array(b["values"], dtype=np.float64) for b in params["blocks"]]
        beta = np.concatenate(beta_parts) if beta_parts else np.empty(0)
        model = FittedModel(
            config=config,
            k=float(params["k"]),
            m=float(params["m"]),
            delta=np.array(params["delta"], dtype=np.float64),
            beta=beta,
            sigma=float(params["sigma"]),
            t_start=float(doc.scaling["t_start"]),
            t_span=float(doc.scaling["t_span"]),
            y_scale=float(doc.scaling["y_scale"]),
            changepoints_scaled=np.array(params["changepoints"], dtype=np.float64),
            train_timestamps=np.array(doc.train_summary["timestamps"], dtype=np.int64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model document: {exc}") from None
    expected = sum(2 * s.fourier_order for s in config.seasonalities)
    expected += len(config.holidays) + len(config.regressors)
    if len(model.beta) != expected:
        raise SchemaError(
            f"coefficient blocks have {len(model.beta)} values, expected {expected}"
        )
    if len(model.delta) != len(model.changepoints_scaled):
        raise SchemaError("delta and changepoints length mismatch")
    return model


def save_model(model: FittedModel, path) -> None:
    _atomic_write(path, model_to_document(model).to_bytes())


def load_model(path) -> FittedModel:
    with open(path, "rb") as fh:
        try:
            data = json.loads(fh.read().decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise SchemaError(f"{path}: invalid model document: {exc}") from None
    return model_from_document(ModelDocument.from_dict(data))


@dataclass(frozen=True)
class RunManifest:
    """Record of one run: seed, content digests, and metric reports.

    Re-running with equal digests and seed reproduces equal metrics; only
    created_at (wall clock, UTC ISO-8601) differs between such runs.
    """

    seed: int
    version: str
    config_digest: str
    dataset_digest: str
    metrics: dict
    created_at: str

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "version": self.version,
            "config_digest": self.config_digest,
            "dataset_digest": self.dataset_digest,
            "metrics": self.metrics,
            "created_at": self.created_at,
        }


def make_manifest(
    seed: int, config: ModelConfig, ts: TimeSeries, metrics: dict
) -> RunManifest:
    return RunManifest(
        seed=int(seed),
        version=__version__,
        config_digest=config_digest(config),
        dataset_digest=dataset_digest(ts),
        metrics=metrics,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def write_manifest(manifest: RunManifest, path) -> None:
    _atomic_write(path, canonical_json_bytes(manifest.to_dict()))


def read_manifest(path) -> RunManifest:
    with open(path, "rb") as fh:
        try:
            data = json.loads(fh.read().decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise SchemaError(f"{path}: invalid manifest: {exc}") from None
    try:
        return RunManifest(
            seed=int(data["seed"]),
            version=str(data["version"]),
            config_digest=str(data["config_digest"]),
            dataset_digest=str(data["dataset_digest"]),
            metrics=data["metrics"],
            created_at=str(data["created_at"]),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed manifest: {exc}") from None
