"""
Configuration management for polyjoin.

Values come from built-in defaults, then an optional YAML file, then
``POLYJOIN_*`` environment variables (a ``.env`` file is honored). Command-line
flags are applied last by the CLI, and the merged values are validated by the
pydantic models below.
"""

import copy
import logging
import os
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from .mesh.lod import DEFAULT_LODS, validate_schedule

logger = logging.getLogger(__name__)

DEFAULT_FILTER_CHUNK = 4_194_304
DEFAULT_REFINE_CHUNK = 500_000
DEFAULT_KERNEL_FACET_PAIRS = 1_048_576

# Default configuration
DEFAULT_CONFIG: Dict[str, Any] = {
    "preprocess": {
        "voxel_ratio": 0.02,
        "lods": list(DEFAULT_LODS),
        "hd_grid": 8,
        "seed": 0,
        "workers": None,
    },
    "join": {
        "filter_chunk": DEFAULT_FILTER_CHUNK,
        "refine_chunk": DEFAULT_REFINE_CHUNK,
        "kernel_facet_pairs": DEFAULT_KERNEL_FACET_PAIRS,
        "pipeline": True,
        "workers": None,
    },
    "generate": {
        "shape": "sphere",
        "facets": 300,
        "count": 8,
        "spacing": None,
        "jitter": 0.0,
        "rng_seed": 0,
    },
    "logging": {
        "level": "INFO",
        "event_log": None,
    },
}


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from file, environment variables, and defaults.

    Args:
        config_path: Path to YAML configuration file

    Returns:
        Merged configuration dictionary
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    if config_path and os.path.exists(config_path):
        try:
            with open(config_path, "r") as f:
                file_config = yaml.safe_load(f)
                if file_config:
                    _deep_update(config, file_config)
        except Exception as e:
            logger.error(f"Error loading config file: {e}")
    elif config_path:
        logger.warning(f"Config file not found: {config_path}")

    load_dotenv()
    _update_from_env(config)

    return config


def _deep_update(target: Dict, source: Dict) -> Dict:
    """
    Update target dictionary with source values, recursively for nested dicts.

    Args:
        target: Target dictionary to update
        source: Source dictionary with values to apply

    Returns:
        Updated target dictionary
    """
    for key, value in source.items():
        if key in target and isinstance(target[key], dict) and isinstance(value, dict):
            _deep_update(target[key], value)
        else:
            target[key] = value
    return target


def parse_lods(value: str) -> List[int]:
    """Parse a comma separated LoD schedule such as ``"20,40,100"``."""
    return [int(part) for part in value.split(",") if part.strip()]


def parse_switch(value: str) -> bool:
    """Parse on/off style switches."""
    lowered = value.strip().lower()
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"not an on/off value: {value}")


def _update_from_env(config: Dict[str, Any]) -> None:
    """
    Update configuration from environment variables.

    Invalid values are logged and ignored.

    Args:
        config: Configuration to update
    """
    env_mappings: Dict[str, tuple] = {
        "POLYJOIN_WORKERS": (int, ("preprocess", "workers"), ("join", "workers")),
        "POLYJOIN_VOXEL_RATIO": (float, ("preprocess", "voxel_ratio")),
        "POLYJOIN_LODS": (parse_lods, ("preprocess", "lods")),
        "POLYJOIN_SEED": (int, ("preprocess", "seed")),
        "POLYJOIN_FILTER_CHUNK": (int, ("join", "filter_chunk")),
        "POLYJOIN_REFINE_CHUNK": (int, ("join", "refine_chunk")),
        "POLYJOIN_PIPELINE": (parse_switch, ("join", "pipeline")),
        "POLYJOIN_LOG_LEVEL": (str.upper, ("logging", "level")),
        "POLYJOIN_EVENT_LOG": (str, ("logging", "event_log")),
    }

    for env_var, (convert, *paths) in env_mappings.items():
        value = os.environ.get(env_var)
        if not value:
            continue
        try:
            converted = convert(value)
        except ValueError:
            logger.error(f"Invalid value for {env_var}: {value}")
            continue
        for section, key in paths:
            config[section][key] = converted


class QueryType(str, Enum):
    """Supported join predicates."""

    WITHIN = "within"
    INTERSECT = "intersect"
    KNN = "knn"


class PreprocessOptions(BaseModel):
    """Parameters of the offline pipeline."""

    voxel_ratio: float = Field(default=0.02, gt=0.0, le=1.0, description="Voxels per facet")
    lods: List[int] = Field(default=list(DEFAULT_LODS), description="LoD schedule in percent")
    hd_grid: int = Field(default=8, ge=1, description="Barycentric sampling level for hd")
    seed: int = Field(default=0, ge=0, description="k-means seed")
    workers: Optional[int] = Field(default=None, ge=1, description="Worker processes")

    @field_validator("lods")
    @classmethod
    def _check_lods(cls, value: List[int]) -> List[int]:
        return validate_schedule(value)


class RefineConfig(BaseModel):
    """Refinement stage settings."""

    lods: List[int] = Field(default=list(DEFAULT_LODS), description="LoD schedule in percent")
    refine_chunk: int = Field(
        default=DEFAULT_REFINE_CHUNK, gt=0, description="Voxel pairs per refinement chunk"
    )
    kernel_facet_pairs: int = Field(
        default=DEFAULT_KERNEL_FACET_PAIRS, gt=0, description="Facet pairs per kernel batch"
    )
    pipeline: bool = Field(default=True, description="Prepare the next chunk while computing")

    @field_validator("lods")
    @classmethod
    def _check_lods(cls, value: List[int]) -> List[int]:
        return validate_schedule(value)


class JoinSpec(BaseModel):
    """A fully specified join request."""

    query_type: QueryType = Field(default=QueryType.WITHIN, description="Join predicate")
    tau: Optional[float] = Field(default=None, ge=0.0, description="Distance threshold")
    k: Optional[int] = Field(default=None, ge=1, description="Neighbors per query object")
    r_index: Optional[str] = Field(default=None, description="Path to the R index")
    s_index: Optional[str] = Field(default=None, description="Path to the S index")
    filter_chunk: int = Field(
        default=DEFAULT_FILTER_CHUNK, gt=0, description="Voxel pairs per filter chunk"
    )
    pipeline: bool = Field(default=True, description="Overlap chunk drain with compute")
    self_join: bool = Field(default=False, description="Skip pairs of an object with itself")
    exact: bool = Field(default=False, description="Refine confirmed pairs to exact distance")
    seed: int = Field(default=0, ge=0, description="Seed recorded with the run")
    refine: RefineConfig = Field(default_factory=RefineConfig)

    @model_validator(mode="after")
    def _check_query(self) -> "JoinSpec":
        if self.query_type is QueryType.INTERSECT:
            if self.tau not in (None, 0.0):
                raise ValueError("intersect joins require tau = 0")
            self.tau = 0.0
        elif self.query_type is QueryType.WITHIN:
            if self.tau is None:
                raise ValueError("within joins require tau")
        elif self.k is None:
            raise ValueError("knn joins require k")
        return self

    @property
    def threshold(self) -> Optional[float]:
        """Distance threshold for within/intersect, None for knn."""
        return None if self.query_type is QueryType.KNN else self.tau


def validation_message(error: Exception) -> str:
    """One-line summary of a pydantic validation error."""
    errors: Callable[[], list] = getattr(error, "errors", None)
    if errors is None:
        return str(error)
    parts = []
    for item in errors():
        where = ".".join(str(p) for p in item.get("loc", ())) or "request"
        parts.append(f"{where}: {item.get('msg')}")
    return "; ".join(parts)
