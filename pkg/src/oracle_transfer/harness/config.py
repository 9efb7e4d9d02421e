"""Experiment configuration: parsing, validation, canonical hashing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..algorithms import (ALGORITHM_KINDS, ELLIPSOID, LATTICE_ENUMERATOR,
                          NESTEROV_AGD, PROJECTED_SUBGRADIENT, AlgorithmConfig)
from ..errors import SchemaError
from ..oracles import (NOISE_KINDS, SEPARATION_NOISE_KINDS, NoiseModel,
                       SeparationNoiseModel, constraint_from_config,
                       objective_from_config)
from ..transfer_smooth import EXACT_1D, MONTE_CARLO, SmoothingEstimator

TRANSFER_MODES = ("none", "lipschitz", "smooth", "constrained")
GROUND_SETS = ("continuous", "integer-lattice")


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise SchemaError(f"{path}: {message}")


@dataclass
class ExperimentConfig:
    dim: int
    R: float
    T: int
    transfer: str
    objective: dict
    noise: dict
    algorithm: dict
    seed: int = 0
    ground_set: str = "continuous"
    constraint: dict | None = None
    sep_noise: dict | None = None
    estimator: dict | None = None
    constrained_opt_value: float | None = None
    name: str = "run"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise SchemaError("config root must be an object")
        known = {f for f in cls.__dataclass_fields__}
        for key in data:
            _require(key in known, key, "unknown config key")
        for key in ("dim", "R", "T", "transfer", "objective", "noise", "algorithm"):
            _require(key in data, key, "missing required key")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)

    def validate(self):
        _require(isinstance(self.dim, int) and self.dim >= 1, "dim", "must be an integer >= 1")
        _require(self.R > 0, "R", "must be positive")
        _require(isinstance(self.T, int) and self.T >= 1, "T", "must be an integer >= 1")
        _require(self.transfer in TRANSFER_MODES, "transfer",
                 f"must be one of {TRANSFER_MODES}")
        _require(self.ground_set in GROUND_SETS, "ground_set",
                 f"must be one of {GROUND_SETS}")
        _require(isinstance(self.objective, dict) and "kind" in self.objective,
                 "objective.kind", "missing objective kind")
        _require(isinstance(self.noise, dict), "noise", "must be an object")
        _require(self.noise.get("kind", "zero") in NOISE_KINDS, "noise.kind",
                 f"must be one of {NOISE_KINDS}")
        _require(float(self.noise.get("eta", 0.0)) >= 0, "noise.eta", "must be nonnegative")
        _require(isinstance(self.algorithm, dict) and "kind" in self.algorithm,
                 "algorithm.kind", "missing algorithm kind")
        kind = self.algorithm["kind"]
        _require(kind in ALGORITHM_KINDS, "algorithm.kind",
                 f"must be one of {ALGORITHM_KINDS}")

        objective = self.build_objective()
        constrained_run = self.transfer == "constrained" or (
            self.transfer == "none" and self.constraint is not None)
        if constrained_run:
            _require(self.constraint is not None, "constraint",
                     "constrained runs need a constraint set")
            _require(kind in (ELLIPSOID, LATTICE_ENUMERATOR), "algorithm.kind",
                     "constrained runs need a separation-consuming algorithm")
            constraint = self.build_constraint()
            _require(constraint.R <= self.R * (1 + 1e-9), "constraint.R",
                     "constraint must live inside the query ball B(R)")
            sep = self.sep_noise or {}
            _require(sep.get("kind", "zero") in SEPARATION_NOISE_KINDS,
                     "sep_noise.kind", f"must be one of {SEPARATION_NOISE_KINDS}")
            eta_c = float(sep.get("eta_c", 0.0))
            _require(0.0 <= eta_c <= constraint.rho, "sep_noise.eta_c",
                     "must satisfy 0 <= eta_c <= rho")
        else:
            _require(kind in (PROJECTED_SUBGRADIENT, NESTEROV_AGD), "algorithm.kind",
                     "unconstrained runs need a first-order algorithm")
        if self.transfer == "smooth" or (kind == NESTEROV_AGD and self.transfer != "constrained"):
            _require(objective.alpha is not None, "objective",
                     "smooth runs need an objective with a smoothness certificate")
        if self.transfer == "smooth":
            eta = float(self.noise.get("eta", 0.0))
            cap = objective.alpha * self.R * self.R / (5.0 * self.T)
            _require(eta <= cap * (1 + 1e-12), "noise.eta",
                     f"smooth transfer requires eta <= alpha*R^2/(5T) = {cap:.6g}")
            if self.estimator is not None:
                _require(self.estimator.get("mode", MONTE_CARLO) in (MONTE_CARLO, EXACT_1D),
                         "estimator.mode", "unknown estimator mode")
                if self.estimator.get("mode") == EXACT_1D:
                    _require(self.dim == 1, "estimator.mode",
                             "exact-1d integration needs dim == 1")

    # --- builders -----------------------------------------------------

    def build_objective(self):
        try:
            return objective_from_config(self.objective, self.dim, self.R)
        except Exception as exc:
            raise SchemaError(f"objective: {exc}") from exc

    def build_constraint(self):
        try:
            return constraint_from_config(self.constraint, self.dim)
        except Exception as exc:
            raise SchemaError(f"constraint: {exc}") from exc

    def build_noise(self) -> NoiseModel:
        data = dict(self.noise)
        data.setdefault("seed", self.seed)
        if "attractor" in data and data["attractor"] is not None:
            data["attractor"] = tuple(data["attractor"])
        try:
            return NoiseModel(**data)
        except Exception as exc:
            raise SchemaError(f"noise: {exc}") from exc

    def build_sep_noise(self) -> SeparationNoiseModel:
        data = dict(self.sep_noise or {})
        data.setdefault("seed", self.seed)
        try:
            return SeparationNoiseModel(**data)
        except Exception as exc:
            raise SchemaError(f"sep_noise: {exc}") from exc

    def build_estimator(self) -> SmoothingEstimator:
        data = dict(self.estimator or {})
        data.setdefault("seed", self.seed)
        try:
            return SmoothingEstimator(**data)
        except Exception as exc:
            raise SchemaError(f"estimator: {exc}") from exc

    def build_algorithm_config(self) -> AlgorithmConfig:
        data = dict(self.algorithm)
        data["T"] = self.T
        if "start" in data and data["start"] is not None:
            data["start"] = tuple(data["start"])
        try:
            return AlgorithmConfig(**data)
        except Exception as exc:
            raise SchemaError(f"algorithm: {exc}") from exc

    # --- canonical form -----------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim, "R": self.R, "T": self.T, "seed": self.seed,
            "transfer": self.transfer, "ground_set": self.ground_set,
            "objective": self.objective, "noise": self.noise,
            "algorithm": self.algorithm, "name": self.name,
        }
        if self.constraint is not None:
            out["constraint"] = self.constraint
        if self.sep_noise is not None:
            out["sep_noise"] = self.sep_noise
        if self.estimator is not None:
            out["estimator"] = self.estimator
        if self.constrained_opt_value is not None:
            out["constrained_opt_value"] = self.constrained_opt_value
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def replace(self, **updates) -> "ExperimentConfig":
        data = self.to_dict()
        data.update(updates)
        return ExperimentConfig.from_dict(data)
