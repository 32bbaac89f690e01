"""Typed experiment configuration.

An experiment file is a nested YAML mapping merged over the ``EXPERIMENT``
section of ``config/config.yml``. Every field is checked before any
computation starts; ``to_dict`` gives back a mapping that ``from_dict`` turns
into an equal config.
"""

import copy
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from ..analysis import energy_grid
from ..config import DENSE_CAP, EXPERIMENT_DEFAULTS, OUT_DIR, THREADS, _env_int
from ..exceptions import ValidationError
from ..operators import Boundary
from ..randomness import SingleSiteDistribution
from ..structure import HierarchicalStructure, WeightSequence, explicit_weights, geometric_weights

logger = logging.getLogger(__name__)

BOUNDARIES = ("neumann", "dirichlet", "both")
# mappings under these keys replace the default instead of being merged into it
REPLACED_KEYS = ("distribution",)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in merged:
            raise ValidationError(f"unknown config key {path + key!r}")
        if isinstance(merged[key], dict) and isinstance(value, dict) and key not in REPLACED_KEYS:
            merged[key] = _merge(merged[key], value, f"{path}{key}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _build(cls, data, section: str):
    if not isinstance(data, dict):
        raise ValidationError(f"config section {section!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**data)


def _positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")
    return value


@dataclass(frozen=True)
class ModelConfig:
    n: int = 2
    rho: Optional[float] = 2.0
    branching: Optional[List[int]] = None
    weights: Optional[List[float]] = None
    tail_rule: str = "geometric"

    def structure(self, max_rank: int) -> HierarchicalStructure:
        if self.branching:
            return HierarchicalStructure.from_branching(self.branching, degree=self.n, max_rank=max_rank)
        return HierarchicalStructure.homogeneous(self.n, max_rank)

    def weight_sequence(self) -> WeightSequence:
        if self.weights:
            return explicit_weights(self.weights, self.tail_rule, self.rho)
        if self.rho is None:
            raise ValidationError("model.rho is required without an explicit weight list")
        return geometric_weights(self.rho)


@dataclass(frozen=True)
class RankRuleConfig:
    kind: str = "fixed"
    alpha: Optional[float] = None


@dataclass(frozen=True)
class GridConfig:
    kind: str = "linear"
    start: float = -1.0
    stop: float = 1.0
    num: int = 21
    values: Optional[List[float]] = None

    def energies(self) -> np.ndarray:
        if self.values:
            return np.sort(np.asarray(self.values, dtype=float))
        return energy_grid(self.kind, self.start, self.stop, self.num)


@dataclass(frozen=True)
class BracketingConfig:
    ranks: List[int] = field(default_factory=lambda: [1, 2])
    psi_count: int = 100
    samples: int = 20


@dataclass(frozen=True)
class TailConfig:
    energies: List[float] = field(default_factory=lambda: [0.5, 0.25])
    upper_energies: List[float] = field(default_factory=lambda: [0.03125, 0.015625])
    alpha: Optional[float] = None
    envelope_c2: Optional[float] = None
    t_max: float = 10.0
    t_points: int = 1001
    gamma: Optional[float] = None


@dataclass(frozen=True)
class ExponentConfig:
    m_min: int = 4
    m_max: int = 14
    lifshits: bool = True


@dataclass(frozen=True)
class ErgodicConfig:
    total_rank: int = 3
    kappa: int = 2
    samples: int = 10
    birkhoff_rank: int = 14
    birkhoff_seeds: int = 20


@dataclass(frozen=True)
class OutputConfig:
    out_dir: Optional[str] = None
    emit_plot_data: bool = False


@dataclass(frozen=True)
class ResourcesConfig:
    dense_cap: Optional[int] = None
    threads: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelConfig
    distribution: dict
    boundary: str
    kappa: int
    rank_rule: RankRuleConfig
    grid: GridConfig
    replicas: int
    seed: int
    bracketing: BracketingConfig
    tail: TailConfig
    exponent: ExponentConfig
    ergodic: ErgodicConfig
    output: OutputConfig
    resources: ResourcesConfig

    SECTIONS = {
        "model": ModelConfig,
        "rank_rule": RankRuleConfig,
        "grid": GridConfig,
        "bracketing": BracketingConfig,
        "tail": TailConfig,
        "exponent": ExponentConfig,
        "ergodic": ErgodicConfig,
        "output": OutputConfig,
        "resources": ResourcesConfig,
    }

    # Construction ----------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Optional[dict] = None) -> "ExperimentConfig":
        merged = _merge(EXPERIMENT_DEFAULTS, data or {})
        kwargs = dict(merged)
        for key, section in cls.SECTIONS.items():
            kwargs[key] = _build(section, merged[key], key)
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"experiment file {str(path)!r} not found")
        with open(path, "r") as file:
            data = yaml.safe_load(file) or {}
        if not isinstance(data, dict):
            raise ValidationError(f"experiment file {str(path)!r} must hold a mapping")
        logger.debug("Loaded experiment file %s", path)
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        for key in self.SECTIONS:
            data[key] = asdict(data[key])
        data["distribution"] = dict(self.distribution)
        return data

    def dump(self, path) -> None:
        with open(path, "w") as file:
            yaml.safe_dump(self.to_dict(), file, sort_keys=False)

    def with_environment(self) -> "ExperimentConfig":
        """Apply ``HIERANDERSON_THREADS`` and ``HIERANDERSON_DENSE_CAP`` over the file values."""
        resources = replace(
            self.resources,
            threads=_env_int("HIERANDERSON_THREADS", self.resources.threads),
            dense_cap=_env_int("HIERANDERSON_DENSE_CAP", self.resources.dense_cap),
        )
        return replace(self, resources=resources)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        replicas: Optional[int] = None,
        out_dir: Optional[str] = None,
        threads: Optional[int] = None,
        dense_cap: Optional[int] = None,
        emit_plot_data: Optional[bool] = None,
    ) -> "ExperimentConfig":
        """Command line flags win over the experiment file."""
        config = self
        if seed is not None:
            config = replace(config, seed=seed)
        if replicas is not None:
            config = replace(config, replicas=replicas)
        output = config.output
        if out_dir is not None:
            output = replace(output, out_dir=str(out_dir))
        if emit_plot_data:
            output = replace(output, emit_plot_data=True)
        resources = config.resources
        if threads is not None:
            resources = replace(resources, threads=threads)
        if dense_cap is not None:
            resources = replace(resources, dense_cap=dense_cap)
        config = replace(config, output=output, resources=resources)
        config.validate()
        return config

    # Validation ------------------------------------------------------------

    def validate(self) -> None:
        if not isinstance(self.name, str) or not self.name or "/" in self.name:
            raise ValidationError(f"experiment name must be a plain non-empty string, got {self.name!r}")
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if isinstance(self.kappa, bool) or not isinstance(self.kappa, int) or self.kappa < 0:
            raise ValidationError(f"kappa must be a non-negative integer, got {self.kappa!r}")
        _positive_int(self.replicas, "replicas")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")

        # the library constructors carry the model preconditions
        self.structure()
        self.weights()
        self.dist()
        if self.rank_rule.kind not in ("fixed", "k_of_E", "K_of_E"):
            raise ValidationError(f"unknown rank rule {self.rank_rule.kind!r}")
        self.energies()

        for r in self.bracketing.ranks:
            if not 0 <= r <= self.kappa:
                raise ValidationError(f"bracketing rank {r} outside [0, kappa={self.kappa}]")
        _positive_int(self.bracketing.psi_count, "bracketing.psi_count")
        _positive_int(self.bracketing.samples, "bracketing.samples")
        if any(not E > 0 for E in [*self.tail.energies, *self.tail.upper_energies]):
            raise ValidationError("tail energies must be positive")
        if self.tail.t_max <= 0 or self.tail.t_points < 2:
            raise ValidationError("tail scan needs t_max > 0 and at least two points")
        if not 1 <= self.exponent.m_min < self.exponent.m_max:
            raise ValidationError("exponent window needs 1 <= m_min < m_max")
        if not 0 <= self.ergodic.kappa < self.ergodic.total_rank:
            raise ValidationError("ergodic ranks need 0 <= kappa < total_rank")
        _positive_int(self.ergodic.samples, "ergodic.samples")
        _positive_int(self.ergodic.birkhoff_rank, "ergodic.birkhoff_rank")
        _positive_int(self.ergodic.birkhoff_seeds, "ergodic.birkhoff_seeds")
        if self.resources.dense_cap is not None:
            _positive_int(self.resources.dense_cap, "resources.dense_cap")
        if self.resources.threads is not None and (
            not isinstance(self.resources.threads, int) or self.resources.threads == 0
        ):
            raise ValidationError(f"resources.threads must be a non-zero integer, got {self.resources.threads!r}")

    # Resolved objects ------------------------------------------------------

    def structure(self, max_rank: Optional[int] = None) -> HierarchicalStructure:
        return self.model.structure(self.kappa if max_rank is None else max_rank)

    def weights(self) -> WeightSequence:
        return self.model.weight_sequence()

    def dist(self) -> SingleSiteDistribution:
        if not isinstance(self.distribution, dict):
            raise ValidationError("distribution must be a mapping")
        try:
            return SingleSiteDistribution.from_dict(self.distribution)
        except KeyError as e:
            raise ValidationError(f"distribution {self.distribution!r} is missing {e}") from e

    def boundaries(self) -> List[Boundary]:
        if self.boundary == "both":
            return [Boundary.NEUMANN, Boundary.DIRICHLET]
        return [Boundary(self.boundary)]

    def energies(self) -> np.ndarray:
        return self.grid.energies()

    @property
    def dense_cap(self) -> int:
        return DENSE_CAP if self.resources.dense_cap is None else self.resources.dense_cap

    @property
    def threads(self) -> Optional[int]:
        return THREADS if self.resources.threads is None else self.resources.threads

    @property
    def out_dir(self) -> str:
        return self.output.out_dir or OUT_DIR

    @property
    def param_hash(self) -> str:
        """Leading 16 hex digits of the SHA-256 of everything that can change a result (output and resource settings excluded)."""
        data = self.to_dict()
        data.pop("output")
        data.pop("resources")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), default=float)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
