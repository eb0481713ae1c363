"""Experiment configuration files.

A config is a YAML mapping with ``kind``, ``seed``, ``output`` and a
kind-specific ``params`` block. An optional ``sweep`` block maps parameter
names to lists of values; ``hybrid-io sweep`` runs the cartesian product.
Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

SCHEMA_PATH = Path(__file__).with_name("config.schema.json")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Unit = Annotated[float, Field(ge=0.0, le=1.0)]
Positive = Annotated[float, Field(gt=0.0)]


class LsConvergenceParams(_Strict):
    betas: list[Annotated[float, Field(ge=0.0, lt=1.0)]] = [0.3, 1 / math.sqrt(2), 0.9]
    n_max: Annotated[int, Field(ge=0, le=10)] = 8
    source: Literal["direct", "u_eff"] = "direct"
    tolerance: Positive = 1e-9


class CsConvergenceParams(_Strict):
    regime: Literal["A", "B0", "B1", "B2"] = "A"
    instances: Annotated[int, Field(ge=1)] = 10
    n_max: Annotated[int, Field(ge=2, le=40)] = 12
    tolerance: Positive = 1e-9


class CsBoundsParams(_Strict):
    regimes: list[Literal["B0", "B1", "B2"]] = ["B0", "B1", "B2"]
    instances: Annotated[int, Field(ge=1)] = 200
    n_max: Annotated[int, Field(ge=2, le=40)] = 12
    tolerance: Positive = 1e-9


class CompositionBoundParams(_Strict):
    samples: Annotated[int, Field(ge=1)] = 100
    dim_e: Annotated[int, Field(ge=1, le=4)] = 2
    n_registers: Annotated[int, Field(ge=0, le=4)] = 1
    sample_budget: Annotated[int, Field(ge=1)] = 16
    xi_max: Unit = 1.0


class ZzNegativeParams(_Strict):
    samples: Annotated[int, Field(ge=1)] = 1000
    r_range: tuple[float, float] = (-3.0, 3.0)
    g_range: tuple[float, float] = (-3.0, 3.0)
    t_range: tuple[float, float] = (0.0, 10.0)


class XxEffectiveParams(_Strict):
    samples: Annotated[int, Field(ge=1)] = 50
    r_range: tuple[Positive, Positive] = (0.2, 3.0)
    g_range: tuple[Positive, Positive] = (0.2, 3.0)
    xi_eps: Annotated[float, Field(gt=0.0, lt=1.0)] = 1e-3
    tolerance: Positive = 1e-8


class IoRoundtripParams(_Strict):
    samples: Annotated[int, Field(ge=1)] = 10
    n_registers: Annotated[int, Field(ge=1, le=6)] = 3
    algorithm: Literal["ls", "cs", "auto"] = "ls"
    sample_budget: Annotated[int, Field(ge=1)] = 8


class PhaseAdjustParams(_Strict):
    algorithm: Literal["ls", "cs"] = "ls"
    regime: Literal["A", "B0", "B1", "B2"] = "B0"
    instances: Annotated[int, Field(ge=1)] = 20
    n: Annotated[int, Field(ge=1, le=10)] = 4
    mode: Literal["none", "rotate", "adapted"] = "adapted"
    max_gap: Positive = 3.0
    max_duration: Positive = 2.0
    tolerance: Positive = 1e-9


PARAMS = {
    "ls_convergence": LsConvergenceParams,
    "cs_convergence": CsConvergenceParams,
    "cs_bounds": CsBoundsParams,
    "lemma1": CompositionBoundParams,
    "zz_negative": ZzNegativeParams,
    "xx_effective": XxEffectiveParams,
    "io_roundtrip": IoRoundtripParams,
    "phase_adjust": PhaseAdjustParams,
}


def _config_model(kind: str, params_model: type[BaseModel]) -> type[BaseModel]:
    class _Cfg(_Strict):
        kind: Literal[kind]  # type: ignore[valid-type]
        seed: Annotated[int, Field(ge=0, lt=2**64)]
        output: str = "results"
        params: params_model = Field(default_factory=params_model)  # type: ignore[valid-type]
        sweep: Optional[dict[str, list[Any]]] = None

        @field_validator("sweep")
        @classmethod
        def _known_sweep_keys(cls, v):
            if v is None:
                return v
            unknown = set(v) - set(params_model.model_fields)
            if unknown:
                raise ValueError(f"sweep names unknown parameters: {sorted(unknown)}")
            if any(len(vals) == 0 for vals in v.values()):
                raise ValueError("sweep value lists must be nonempty")
            return v

    _Cfg.__name__ = params_model.__name__.replace("Params", "Config")
    return _Cfg


CONFIG_MODELS = {kind: _config_model(kind, p) for kind, p in PARAMS.items()}
ExperimentConfig = Annotated[Union[tuple(CONFIG_MODELS.values())], Field(discriminator="kind")]
_ADAPTER = TypeAdapter(ExperimentConfig)


class ConfigError(ValueError):
    """Config file does not validate."""


def parse_config(data: dict) -> BaseModel:
    try:
        return _ADAPTER.validate_python(data)
    except Exception as exc:  # pydantic.ValidationError and friends
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> BaseModel:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return parse_config(data)


def config_hash(cfg: BaseModel) -> str:
    """sha256 of the canonical JSON of everything but the output path."""
    payload = cfg.model_dump(mode="json", exclude={"output"})
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def expand_sweep(cfg: BaseModel) -> list[BaseModel]:
    """One config per combination of sweep values, in row-major order."""
    if not cfg.sweep:
        return [cfg]
    names = sorted(cfg.sweep)
    out = []
    for combo in itertools.product(*(cfg.sweep[n] for n in names)):
        params = cfg.params.model_dump() | dict(zip(names, combo))
        tag = "-".join(f"{n}={v}" for n, v in zip(names, combo))
        data = cfg.model_dump() | {"params": params, "sweep": None, "output": str(Path(cfg.output) / tag)}
        out.append(parse_config(data))
    return out


def json_schema() -> dict:
    return _ADAPTER.json_schema()


def write_schema(path: Path = SCHEMA_PATH) -> None:
    path.write_text(json.dumps(json_schema(), indent=2, sort_keys=True) + "\n")
