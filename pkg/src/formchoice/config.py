"""Study configuration: defaults, JSON schema, loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np

from .geometry import N_VARIABLES
from .sampler import (
    BALANCE_WEIGHT,
    EXPLORE_WEIGHT,
    FIRST_SAMPLER_GENERATIONS,
    FIRST_SAMPLER_POP,
    GAConfig,
    SECOND_SAMPLER_GENERATIONS,
    SECOND_SAMPLER_POP,
)

PRICE_LABELS = ("$23K", "$25K", "$26K", "$29K", "$31K")
MPG_LABELS = ("23/27", "23/29", "24/30", "25/31", "26/32")
PRICE_VALUES_USD = (23000, 25000, 26000, 29000, 31000)

_GA_SCHEMA = {
    "type": "object",
    "properties": {
        "pop_size": {"type": "integer", "minimum": 2},
        "generations": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "study_id": {"type": "string", "minLength": 1},
        "seed": {"type": ["integer", "null"]},
        "rounds": {"type": "integer", "minimum": 1},
        "validation_form": {"type": "integer", "minimum": 1},
        "validation_purchase": {"type": "integer", "minimum": 1},
        "expected_respondents": {"type": "integer", "minimum": 1},
        "eta_start": {"type": "number", "minimum": 0, "maximum": 1},
        "eta_end": {"type": "number", "minimum": 0, "maximum": 1},
        "balance_weight": {"type": "number", "minimum": 0},
        "explore_weight": {"type": "number", "minimum": 0},
        "first_pair": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number", "minimum": 0, "maximum": 1},
                "minItems": N_VARIABLES,
                "maxItems": N_VARIABLES,
            },
            "minItems": 2,
            "maxItems": 2,
        },
        "ga_first": _GA_SCHEMA,
        "ga_second": _GA_SCHEMA,
        "history_cap": {"type": "integer", "minimum": 10},
        "better_margin": {"type": "number", "exclusiveMinimum": 0},
        "much_better_margin": {"type": "number", "exclusiveMinimum": 0},
        "purchase_margin": {"type": "number", "exclusiveMinimum": 0},
        "svm_cap": {"type": "number", "exclusiveMinimum": 0},
        "svm_tol": {"type": "number", "exclusiveMinimum": 0},
        "idle_timeout_hours": {"type": "number", "exclusiveMinimum": 0},
        "store_path": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class StudyConfig:
    study_id: str = "study"
    seed: int | None = None
    rounds: int = 10
    validation_form: int = 5
    validation_purchase: int = 5
    expected_respondents: int = 100
    eta_start: float = 1.0
    eta_end: float = 0.7
    balance_weight: float = BALANCE_WEIGHT
    explore_weight: float = EXPLORE_WEIGHT
    first_pair: tuple[tuple[float, ...], tuple[float, ...]] = (
        (0.35,) * N_VARIABLES,
        (0.65,) * N_VARIABLES,
    )
    ga_first: GAConfig = field(
        default_factory=lambda: GAConfig(FIRST_SAMPLER_POP, FIRST_SAMPLER_GENERATIONS)
    )
    ga_second: GAConfig = field(
        default_factory=lambda: GAConfig(SECOND_SAMPLER_POP, SECOND_SAMPLER_GENERATIONS)
    )
    history_cap: int = 400
    better_margin: float = 1.0
    much_better_margin: float = 2.0
    purchase_margin: float = 1.0
    svm_cap: float = 1e6
    svm_tol: float = 1e-5
    idle_timeout_hours: float = 24.0
    store_path: str | None = None

    @property
    def deterministic(self) -> bool:
        return self.seed is not None

    def to_dict(self) -> dict:
        """Protocol parameters only; deployment details (log path) stay out."""
        return {
            "study_id": self.study_id,
            "seed": self.seed,
            "rounds": self.rounds,
            "validation_form": self.validation_form,
            "validation_purchase": self.validation_purchase,
            "expected_respondents": self.expected_respondents,
            "eta_start": self.eta_start,
            "eta_end": self.eta_end,
            "balance_weight": self.balance_weight,
            "explore_weight": self.explore_weight,
            "first_pair": [list(v) for v in self.first_pair],
            "ga_first": {"pop_size": self.ga_first.pop_size,
                         "generations": self.ga_first.generations},
            "ga_second": {"pop_size": self.ga_second.pop_size,
                          "generations": self.ga_second.generations},
            "history_cap": self.history_cap,
            "better_margin": self.better_margin,
            "much_better_margin": self.much_better_margin,
            "purchase_margin": self.purchase_margin,
            "svm_cap": self.svm_cap,
            "svm_tol": self.svm_tol,
            "idle_timeout_hours": self.idle_timeout_hours,
        }


class ConfigError(ValueError):
    pass


def config_from_dict(raw: dict) -> StudyConfig:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid study config: {exc.message}") from None
    kwargs = dict(raw)
    for key in ("ga_first", "ga_second"):
        if key in kwargs:
            base = getattr(StudyConfig(), key)
            kwargs[key] = GAConfig(
                kwargs[key].get("pop_size", base.pop_size),
                kwargs[key].get("generations", base.generations),
            )
    if "first_pair" in kwargs:
        kwargs["first_pair"] = tuple(tuple(v) for v in kwargs["first_pair"])
    config = StudyConfig(**kwargs)
    if config.eta_end > config.eta_start:
        raise ConfigError("eta_end must not exceed eta_start")
    return config


def load_config(path: str | Path) -> StudyConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    return config_from_dict(raw)


def with_overrides(config: StudyConfig, **kwargs) -> StudyConfig:
    return replace(config, **kwargs)


def session_rng(seed: int | None, respondent_index: int) -> np.random.Generator:
    """Per-respondent stream, stable no matter the session creation order."""
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng([seed, 1000 + respondent_index])


def study_rng(seed: int | None) -> np.random.Generator:
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng([seed, 0])
