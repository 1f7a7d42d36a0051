"""Experiment configuration: one JSON document, overridable from the CLI.

Precedence, lowest first: built-in defaults, ``DYNAREGRET_SEED`` (seed only),
the ``--config`` file, explicit command-line flags.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from ..core import feasible_set_from_dict
from ..environments import EnvironmentSpec, drift_from_dict
from ..errors import ConfigError
from ..learners import KINDS, OGD, OMGD, recommended_step_size

ETA_MODES = ("recommended", "fixed", "one-over-beta")
SEED_ENV = "DYNAREGRET_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError("seed", f"{SEED_ENV}={raw!r} is not an integer") from None


@dataclass(frozen=True)
class ExperimentConfig:
    environment: dict[str, Any] = field(default_factory=lambda: {"drift": {"kind": "constant", "step": 0.1}})
    learners: tuple[str, ...] = (OGD,)
    eta_mode: str = "recommended"
    eta: float | None = None
    T: int = 100
    seed: int = 0
    repetitions: int = 1
    out: str = "out"
    sigma: float | None = None

    # -- validation --------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        """Raise :class:`ConfigError` naming the first bad field."""
        if not isinstance(self.T, int) or self.T < 1:
            raise ConfigError("T", f"horizon must be a positive integer, got {self.T!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", f"seed must be a nonnegative integer, got {self.seed!r}")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise ConfigError("repetitions", "must be a positive integer")
        if not self.learners:
            raise ConfigError("learners", "at least one learner is required")
        for name in self.learners:
            if name not in KINDS:
                raise ConfigError("learners", f"unknown learner {name!r} (choose from {', '.join(KINDS)})")
        if len(set(self.learners)) != len(self.learners):
            raise ConfigError("learners", "duplicate learner")
        if self.eta_mode not in ETA_MODES:
            raise ConfigError("eta_mode", f"must be one of {', '.join(ETA_MODES)}")
        if self.eta_mode == "fixed":
            if self.eta is None or not (self.eta > 0 and math.isfinite(self.eta)):
                raise ConfigError("eta", "fixed step mode needs a positive eta")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError("sigma", "must be positive")
        env = self.environment
        if not isinstance(env, dict):
            raise ConfigError("environment", "must be an object")
        unknown = set(env) - {"drift", "dim", "kappa", "hessian", "feasible", "x1", "initial_offset", "margin_steps"}
        if unknown:
            raise ConfigError("environment", f"unknown keys {sorted(unknown)}")
        try:
            drift_from_dict(env.get("drift", {"kind": "static"}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("environment.drift", str(exc)) from None
        try:
            feasible_set_from_dict(env.get("feasible"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("environment.feasible", str(exc)) from None
        try:
            self.env_spec(0)
        except (TypeError, ValueError) as exc:
            raise ConfigError("environment", str(exc)) from None
        return self

    # -- derived -------------------------------------------------------------

    def rep_seed(self, rep: int) -> int:
        return self.seed + rep

    def env_spec(self, rep: int = 0) -> EnvironmentSpec:
        return EnvironmentSpec.from_dict({**self.environment, "T": self.T, "seed": self.rep_seed(rep)})

    def step_size(self, learner: str, alpha: float, beta: float) -> float:
        """Constant step for ``learner``.

        ``recommended`` means the OGD theory step for OGD and 1/beta for OMGD.
        """
        if self.eta_mode == "fixed":
            assert self.eta is not None
            return float(self.eta)
        if self.eta_mode == "one-over-beta" or learner == OMGD:
            return 1.0 / beta
        return recommended_step_size(alpha, beta)

    # -- (de)serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "environment": self.environment,
            "learners": list(self.learners),
            "eta_mode": self.eta_mode,
            "eta": self.eta,
            "T": self.T,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "out": self.out,
            "sigma": self.sigma,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown configuration key")
        data = dict(data)
        if "learners" in data:
            learners = data["learners"]
            data["learners"] = tuple([learners] if isinstance(learners, str) else learners)
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Apply non-None overrides; ``env_*`` keys patch the environment object."""
        env = dict(self.environment)
        top = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key.startswith("env_"):
                env[key[4:]] = value
            else:
                top[key] = value
        return replace(self, environment=env, **top)


def to_jsonable(obj: Any) -> Any:
    """Recursively turn numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj
