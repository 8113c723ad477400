"""Experiment configuration: a flat JSON document plus K=V overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Any, List, Optional

from .core import BOTTOM, ConfigError
from .programs import PROGRAM_IDS

FAILURE_KINDS = ("none", "simultaneous", "independent")
ADVERSARIES = ("exhaustive", "random", "scripted", "assumption1")
MODES = ("rerun-after-crash", "halt-after-return")


@dataclass
class ExperimentConfig:
    program: str
    n: int
    proposals: List[Any]
    failure: str = "none"
    budget: int = 0
    f: Optional[int] = None  # fig2 instance count parameter
    cons: str = "atomic"  # inner consensus: "atomic" | "tas"
    choice: str = "p1"  # fig1 tie-break: p1 | p2 | min | max
    scan_order: str = "asc"
    mode: str = "rerun-after-crash"
    adversary: str = "exhaustive"
    seed: int = 0
    schedule: Optional[list] = None  # [[kind, pid], ...] for scripted runs
    monitor: bool = False  # genericity monitor armed
    depth: Optional[int] = None
    hash_ignores_attempt: bool = False
    agreement_scope: str = "all-returns"  # or "cross-process"
    cap: Optional[int] = None  # node cap for graph building

    def validate(self) -> "ExperimentConfig":
        if self.program not in PROGRAM_IDS:
            raise ConfigError("unknown program %r" % self.program)
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.program in ("fig1", "fig3", "tas-cons2") and self.n != 2:
            raise ConfigError("%s is a 2-process algorithm, got n=%d" % (self.program, self.n))
        if self.program == "fig2":
            if self.f is None or self.f < 0:
                raise ConfigError("fig2 requires f >= 0")
            if self.n < 2:
                raise ConfigError("fig2 requires n >= 2")
        if self.cons not in ("atomic", "tas"):
            raise ConfigError("cons must be atomic or tas")
        if self.cons == "tas" and self.program == "fig2" and self.n != 2:
            raise ConfigError("TAS-based inner consensus is 2-process only")
        if len(self.proposals) != self.n:
            raise ConfigError(
                "expected %d proposals, got %d" % (self.n, len(self.proposals))
            )
        if any(p is BOTTOM for p in self.proposals):
            raise ConfigError("the bottom value is never a legal proposal")
        if self.failure not in FAILURE_KINDS:
            raise ConfigError("unknown failure model %r" % self.failure)
        if self.budget < 0:
            raise ConfigError("failure budget must be non-negative")
        if self.adversary not in ADVERSARIES:
            raise ConfigError("unknown adversary %r" % self.adversary)
        if self.adversary == "assumption1" and self.failure != "independent":
            raise ConfigError("the assumption-1 adversary requires independent failures")
        if self.mode not in MODES:
            raise ConfigError("unknown return mode %r" % self.mode)
        if self.scan_order not in ("asc", "desc"):
            raise ConfigError("scan order must be asc or desc")
        if self.agreement_scope not in ("all-returns", "cross-process"):
            raise ConfigError("agreement scope must be all-returns or cross-process")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        try:
            cfg = ExperimentConfig(**d)
        except TypeError as e:
            raise ConfigError(str(e))
        return cfg.validate()

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError("malformed config %s: %s" % (path, e))
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return ExperimentConfig.from_dict(d)

    def with_overrides(self, pairs) -> "ExperimentConfig":
        """Apply repeatable key=value overrides; values parse as JSON when possible."""
        d = self.to_dict()
        for pair in pairs:
            if "=" not in pair:
                raise ConfigError("override %r is not of the form key=value" % pair)
            key, _, raw = pair.partition("=")
            try:
                val = json.loads(raw)
            except json.JSONDecodeError:
                val = raw
            d[key] = val
        return ExperimentConfig.from_dict(d)
