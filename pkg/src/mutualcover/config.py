"""Experiment configuration: one YAML file, validated with unknown keys rejected."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .distributions import JointClaimDistribution, from_dict
from .risk_model import CoverageModel, RiskProcess


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LineConfig(_Strict):
    premium: float = Field(gt=0)
    claim_rate: float = Field(default=0.0, ge=0)
    claims: Optional[Dict[str, Any]] = None

    def build(self) -> RiskProcess:
        law = from_dict(self.claims) if self.claims is not None else None
        return RiskProcess(self.premium, self.claim_rate, law)


class JointAtom(_Strict):
    weight: float = Field(ge=0)
    claim1: Optional[Dict[str, Any]] = None
    claim2: Optional[Dict[str, Any]] = None


class JointConfig(_Strict):
    rate: float = Field(gt=0)
    atoms: List[JointAtom]


Cost = Union[float, str]


def _cost(v: Cost) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"transfer cost must be a number or 'inf', got {v!r}")
    return float(v)


class ModelConfig(_Strict):
    line1: LineConfig
    line2: LineConfig
    r1: Cost = 1.0
    r2: Cost = 1.0
    joint: Optional[JointConfig] = None
    allow_low_costs: bool = False

    @field_validator("r1", "r2")
    @classmethod
    def _parse_cost(cls, v):
        return _cost(v)

    def build(self) -> CoverageModel:
        joint = None
        rate = 0.0
        if self.joint is not None:
            joint = JointClaimDistribution(tuple(
                (a.weight, from_dict(a.claim1) if a.claim1 else None,
                 from_dict(a.claim2) if a.claim2 else None) for a in self.joint.atoms))
            rate = self.joint.rate
        return CoverageModel(self.line1.build(), self.line2.build(), float(self.r1),
                             float(self.r2), joint, rate, self.allow_low_costs)


class SimBlock(_Strict):
    seed: int = Field(default=42, ge=0, lt=2 ** 64)
    n_paths: int = Field(default=10_000, ge=1)
    t_max: float = Field(default=2000.0, gt=0)
    workers: Optional[int] = Field(default=None, ge=1)


class WHBlock(_Strict):
    n: int = Field(default=10_000, ge=2)
    cutoff_claims: float = Field(default=1e4, gt=0)
    w_max: float = Field(default=10.0, gt=0)
    n_w: int = Field(default=41, ge=2)


class SweepBlock(_Strict):
    uv: List[Tuple[float, float]] = Field(default_factory=list)
    s1: List[float] = Field(default_factory=list)
    s2: List[float] = Field(default_factory=list)
    overlay: bool = False

    @property
    def s_points(self) -> List[Tuple[float, float]]:
        return [(a, b) for b in self.s2 for a in self.s1]


class OutputBlock(_Strict):
    directory: str = "out"
    formats: List[str] = Field(default_factory=lambda: ["csv"])

    @field_validator("formats")
    @classmethod
    def _known(cls, v):
        bad = set(v) - {"csv", "gnuplot", "json"}
        if bad:
            raise ValueError(f"unknown output formats {sorted(bad)}")
        return v


class ExperimentConfig(_Strict):
    model: ModelConfig
    sim: SimBlock = Field(default_factory=SimBlock)
    wh: WHBlock = Field(default_factory=WHBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    def digest(self) -> str:
        """Short hash of the canonical config, written into output headers."""
        blob = json.dumps(self.model_dump(mode="json"), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class ConfigError(ValueError):
    pass


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"])
        lines.append(f"  {loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data)
        cfg.model.build()
    except ValidationError as err:
        raise ConfigError(f"{source}: invalid configuration\n{_format_errors(err)}") from None
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}:{where} YAML syntax error: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data, str(path))


def schema() -> dict:
    return ExperimentConfig.model_json_schema()
