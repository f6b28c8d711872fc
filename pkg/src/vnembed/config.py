"""Run configuration: scenario, solver, rater and link-mapping settings.

A config file is JSON with optional sections; anything missing takes the
default::

    {"scenario": {"domain_count": 4, "nodes_per_domain": 30, ...},
     "solver": {"pop_size": 20, "max_iters": 50, "transfer_prob": 0.7, ...},
     "rater": {"mode": "consistent", "epochs": 200, ...},
     "lambda_weight": 2.0,
     "remap": true}

``lambda_weight: null`` disables the load-balancing surcharge.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .fitness.net import MODES
from .hfpa.solver import SolverParams
from .topogen import ScenarioConfig

CONFIG_SCHEMA = "vnembed.config/1"


@dataclass
class RaterConfig:
    mode: str = "consistent"
    learning_factor: float = 0.05
    hidden: int = 8
    rating_levels: int = 3
    epochs: int = 200
    training_vnrs: int = 4
    samples_per_vnr: int = 60
    restarts: int = 3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"rater mode must be one of {MODES}")
        if self.rating_levels < 2 or self.samples_per_vnr < self.rating_levels:
            raise ValueError("need >= 2 rating levels and enough samples per request")


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverParams = field(default_factory=SolverParams)
    rater: RaterConfig = field(default_factory=RaterConfig)
    lambda_weight: float | None = 2.0
    remap: bool = True

    @classmethod
    def desk(cls) -> RunConfig:
        """Small scenario with a lighter solver and rater, sized for quick multi-seed runs."""
        return cls(scenario=ScenarioConfig.desk(),
                   solver=SolverParams(pop_size=12, max_iters=30),
                   rater=RaterConfig(epochs=100, restarts=2))

    def to_dict(self) -> dict:
        return {"schema": CONFIG_SCHEMA, "scenario": self.scenario.to_dict(),
                "solver": self.solver.to_dict(), "rater": asdict(self.rater),
                "lambda_weight": self.lambda_weight, "remap": self.remap}

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        extra = set(data) - {"schema", "scenario", "solver", "rater", "lambda_weight", "remap"}
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        rater_keys = {f.name for f in fields(RaterConfig)}
        bad = set(data.get("rater", {})) - rater_keys
        if bad:
            raise ValueError(f"unknown rater keys: {sorted(bad)}")
        return cls(scenario=ScenarioConfig.from_dict(data.get("scenario", {})),
                   solver=SolverParams.from_dict(data.get("solver", {})),
                   rater=RaterConfig(**data.get("rater", {})),
                   lambda_weight=data.get("lambda_weight", 2.0),
                   remap=bool(data.get("remap", True)))


def load_config(path) -> RunConfig:
    """Read a JSON config; the names ``defaults`` and ``desk`` select built-ins."""
    if str(path) == "defaults":
        return RunConfig()
    if str(path) == "desk":
        return RunConfig.desk()
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(cfg: RunConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
