"""Experiment configuration: strict TOML with fail-fast unknown-key checks.

Sections: ``[model]`` (the four regime parameters plus optional threshold),
``[sampling]`` (lag, number of observations, substeps), ``[experiment]``
(kind plus kind-specific grids, replicate count and mandatory seed) and
``[output]`` (directory).  Wall-clock seeding is deliberately impossible:
every experiment is reproducible from its file.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import ModelParams
from .simulate import SamplingScheme

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "parse_config"]

KINDS = ("mse", "clt", "lt_bias", "hf_rate", "analytic_check")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    sampling: SamplingScheme
    kind: str
    seed: int
    n_grid: tuple[int, ...] = ()
    h_grid: tuple[float, ...] = ()
    replicates: int = 1
    horizon: float = 0.0
    time_per_point: float = 0.0
    ref_multiple: int = 64
    lag_cap: int = 50
    output_dir: str = "."

    def config_hash(self) -> str:
        payload = {
            "model": [
                self.model.b_plus,
                self.model.b_minus,
                self.model.sigma_plus,
                self.model.sigma_minus,
                self.model.threshold,
            ],
            "sampling": [self.sampling.h, self.sampling.n_obs, self.sampling.substeps],
            "kind": self.kind,
            "seed": self.seed,
            "n_grid": list(self.n_grid),
            "h_grid": list(self.h_grid),
            "replicates": self.replicates,
            "horizon": self.horizon,
            "time_per_point": self.time_per_point,
            "ref_multiple": self.ref_multiple,
            "lag_cap": self.lag_cap,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _take(section: dict, name: str, keys: dict):
    """Pop known keys with defaults; any leftover key is an error."""
    out = {}
    for key, default in keys.items():
        if key in section:
            out[key] = section.pop(key)
        elif default is not ...:
            out[key] = default
        else:
            raise ConfigError(f"missing required key '{key}' in [{name}]")
    if section:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(section)}")
    return out


def parse_config(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    model_sec = dict(raw.pop("model", {}))
    sampling_sec = dict(raw.pop("sampling", {}))
    experiment_sec = dict(raw.pop("experiment", {}))
    output_sec = dict(raw.pop("output", {}))
    if raw:
        raise ConfigError(f"unknown sections: {sorted(raw)}")

    m = _take(
        model_sec,
        "model",
        {
            "b_plus": ...,
            "b_minus": ...,
            "sigma_plus": ...,
            "sigma_minus": ...,
            "threshold": 0.0,
        },
    )
    try:
        model = ModelParams(**{k: float(v) for k, v in m.items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    s = _take(sampling_sec, "sampling", {"h": 1.0, "n_obs": 1000, "substeps": 8})
    try:
        sampling = SamplingScheme(
            h=float(s["h"]), n_obs=int(s["n_obs"]), substeps=int(s["substeps"])
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    e = _take(
        experiment_sec,
        "experiment",
        {
            "kind": ...,
            "seed": ...,
            "n_grid": [],
            "h_grid": [],
            "replicates": 1,
            "horizon": 0.0,
            "time_per_point": 0.0,
            "ref_multiple": 64,
            "lag_cap": 50,
        },
    )
    kind = str(e["kind"])
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    replicates = int(e["replicates"])
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    n_grid = tuple(int(n) for n in e["n_grid"])
    h_grid = tuple(float(h) for h in e["h_grid"])
    if kind in ("mse", "clt", "hf_rate") and not n_grid:
        raise ConfigError(f"experiment kind {kind!r} requires a non-empty n_grid")
    if kind == "lt_bias" and not h_grid:
        raise ConfigError("experiment kind 'lt_bias' requires a non-empty h_grid")

    o = _take(output_sec, "output", {"dir": "."})

    return ExperimentConfig(
        model=model,
        sampling=sampling,
        kind=kind,
        seed=int(e["seed"]),
        n_grid=n_grid,
        h_grid=h_grid,
        replicates=replicates,
        horizon=float(e["horizon"]),
        time_per_point=float(e["time_per_point"]),
        ref_multiple=int(e["ref_multiple"]),
        lag_cap=int(e["lag_cap"]),
        output_dir=str(o["dir"]),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(raw)
