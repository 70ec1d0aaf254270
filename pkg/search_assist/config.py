"""
Configuration management for the Search Assistance Engine
Service settings come from environment variables / .env; engine tunables come
from a flat `key = value` config file validated against EngineConfig.
"""
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from search_assist.api.schemas.events import QuerySource
from search_assist.api.schemas.suggest import ProfileName
from search_assist.exceptions import ConfigError


SECOND_MS = 1_000
MINUTE_MS = 60 * SECOND_MS
HOUR_MS = 60 * MINUTE_MS
DAY_MS = 24 * HOUR_MS


class Settings(BaseSettings):
    """Service settings loaded from environment / .env file"""

    model_config = SettingsConfigDict(
        env_prefix="SEARCH_ASSIST_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Application
    app_name: str = "Search Assistance Engine"
    app_version: str = "1.0.0"
    debug: bool = False

    # Server
    host: str = "localhost"
    port: int = 8000

    # Snapshots
    snapshot_dir: str = "snapshots"
    poll_interval_seconds: float = 60.0
    interpolation_mu: Optional[float] = None
    engine_config_path: Optional[str] = None

    # Logging
    log_level: str = "INFO"
    log_format: str = "text"


class DecayFunction(str, Enum):
    """Decay families for observed counts"""
    EXPONENTIAL = "exponential"
    STEP = "step"
    LINEAR = "linear"


class Ranker(str, Enum):
    """Ranking algorithm run by the ranking cycle"""
    LINEAR = "linear"
    CRF = "crf"
    PMI = "pmi"
    LLR = "llr"
    CHI_SQUARE = "chi_square"


DEFAULT_SOURCE_WEIGHTS: Dict[str, float] = {
    QuerySource.TYPED.value: 1.0,
    QuerySource.HASHTAG_CLICK.value: 0.5,
    QuerySource.TREND_CLICK.value: 0.5,
    QuerySource.RELATED_CLICK.value: 0.3,
}


class EngineConfig(BaseModel):
    """
    Every tunable of the backend engine

    Defaults are the real-time profile. Type checks happen on construction;
    semantic invariants are reported by validate_config so that all of them
    can be listed at once.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    # Queries and sessions
    max_ngram: int = 3
    session_window_size: int = 10
    session_window_age_ms: int = 15 * MINUTE_MS
    session_idle_expiry_ms: int = 60 * MINUTE_MS
    rate_limit_max: int = Field(default=5, description="Identical queries per session per window; 0 disables")
    rate_limit_window_ms: int = MINUTE_MS

    # Weights and decay
    source_weights: Dict[QuerySource, float] = Field(default_factory=lambda: dict(DEFAULT_SOURCE_WEIGHTS))
    tweet_weight: float = 0.2
    halflife_ms: int = 60 * MINUTE_MS
    decay_fn: DecayFunction = DecayFunction.EXPONENTIAL
    step_age_ms: int = 60 * MINUTE_MS
    step_floor: float = 0.0
    linear_span_ms: int = 120 * MINUTE_MS

    # Pruning and tweets
    prune_threshold: float = 0.05
    querylike_min_count: float = 10.0
    tweet_pairs_require_session: bool = False

    # Ranking
    ranker: Ranker = Ranker.LINEAR
    rank_weights: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    pmi_cap: float = 10.0
    llr_scale: float = 20.0
    rank_floor: Optional[float] = None
    min_pair_support: float = 1.0
    top_k: int = 10

    # Cycles and snapshots
    snapshot_interval_ms: int = 5 * MINUTE_MS
    decay_cycle_interval_ms: int = 5 * MINUTE_MS
    retain_n: int = 12
    out_of_order_tolerance_ms: int = 0

    # Spelling
    spell_ratio_min: float = 10.0
    spell_distance_max: float = 2.0
    internal_sub: float = 1.0
    boundary_sub: float = 1.5
    insert_cost: float = 1.0
    delete_cost: float = 1.0
    transpose_cost: float = 1.0
    background_horizon_ms: int = 90 * DAY_MS

    # Serving
    interpolation_mu: float = 0.7

    @field_validator("source_weights", mode="before")
    @classmethod
    def merge_source_weights(cls, v: Any) -> Any:
        if isinstance(v, dict):
            merged = dict(DEFAULT_SOURCE_WEIGHTS)
            for key, weight in v.items():
                merged[key.value if isinstance(key, QuerySource) else str(key).strip().lower()] = weight
            return merged
        return v

    @field_validator("rank_weights", mode="before")
    @classmethod
    def split_rank_weights(cls, v: Any) -> Any:
        if isinstance(v, str):
            return tuple(part.strip() for part in v.split(","))
        return v

    @field_validator("rank_floor", mode="before")
    @classmethod
    def parse_rank_floor(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("", "none", "null"):
            return None
        return v

    @property
    def effective_rank_floor(self) -> float:
        return self.prune_threshold if self.rank_floor is None else self.rank_floor

    @property
    def decay_composes(self) -> bool:
        """Only exponential decay can be applied lazily"""
        return self.decay_fn is DecayFunction.EXPONENTIAL

    @property
    def max_source_weight(self) -> float:
        return max(self.source_weights.values())


def validate_config(cfg: EngineConfig) -> List[str]:
    """
    Check every invariant of an engine configuration

    Returns:
        List of violations, empty when the configuration is valid
    """
    errors: List[str] = []

    for name, value in cfg.model_dump().items():
        if isinstance(value, dict):
            values = list(value.values())
        elif isinstance(value, tuple):
            values = list(value)
        else:
            values = [value]
        if any(isinstance(v, float) and not math.isfinite(v) for v in values):
            errors.append(f"{name} must be finite")

    if cfg.max_ngram < 1:
        errors.append("max_ngram must be >= 1")
    if cfg.session_window_size < 1:
        errors.append("session_window_size must be >= 1")
    if cfg.session_window_age_ms <= 0:
        errors.append("session_window_age_ms must be positive")
    if cfg.session_idle_expiry_ms <= 0:
        errors.append("session_idle_expiry_ms must be positive")
    if cfg.rate_limit_max < 0:
        errors.append("rate_limit_max must be >= 0")
    if cfg.rate_limit_window_ms <= 0:
        errors.append("rate_limit_window_ms must be positive")

    missing = [s.value for s in QuerySource if s not in cfg.source_weights]
    if missing:
        errors.append(f"source_weights missing {', '.join(missing)}")
    for source, weight in cfg.source_weights.items():
        if weight < 0:
            errors.append(f"source_weights[{source.value}] must be >= 0")
    typed = cfg.source_weights.get(QuerySource.TYPED, 0.0)
    hashtag = cfg.source_weights.get(QuerySource.HASHTAG_CLICK, 0.0)
    if typed < hashtag:
        errors.append(
            f"source_weights[typed] ({typed}) must be >= source_weights[hashtag_click] ({hashtag})"
        )
    if cfg.tweet_weight < 0:
        errors.append("tweet_weight must be >= 0")

    if cfg.halflife_ms <= 0:
        errors.append("halflife must be positive")
    if cfg.step_age_ms <= 0:
        errors.append("step_age_ms must be positive")
    if not 0.0 <= cfg.step_floor <= 1.0:
        errors.append("step_floor must be in [0, 1]")
    if cfg.linear_span_ms <= 0:
        errors.append("linear_span_ms must be positive")

    if cfg.prune_threshold < 0:
        errors.append("prune_threshold must be >= 0")
    if cfg.querylike_min_count < 0:
        errors.append("querylike_min_count must be >= 0")
    if any(w < 0 for w in cfg.rank_weights):
        errors.append("rank_weights must all be >= 0")
    if cfg.pmi_cap <= 0:
        errors.append("pmi_cap must be positive")
    if cfg.llr_scale <= 0:
        errors.append("llr_scale must be positive")
    if cfg.rank_floor is not None and cfg.rank_floor < 0:
        errors.append("rank_floor must be >= 0")
    if cfg.min_pair_support < 0:
        errors.append("min_pair_support must be >= 0")
    if cfg.top_k < 1:
        errors.append("top_k must be >= 1")

    if cfg.snapshot_interval_ms <= 0:
        errors.append("snapshot_interval_ms must be positive")
    if cfg.decay_cycle_interval_ms <= 0:
        errors.append("decay_cycle_interval_ms must be positive")
    if cfg.retain_n < 1:
        errors.append("retain_n must be >= 1")
    if cfg.out_of_order_tolerance_ms < 0:
        errors.append("out_of_order_tolerance_ms must be >= 0")

    if cfg.spell_ratio_min < 0:
        errors.append("spell_ratio_min must be >= 0")
    if cfg.spell_distance_max < 0:
        errors.append("spell_distance_max must be >= 0")
    for name in ("internal_sub", "boundary_sub", "insert_cost", "delete_cost", "transpose_cost"):
        if getattr(cfg, name) <= 0:
            errors.append(f"{name} must be positive")
    if cfg.boundary_sub < cfg.internal_sub:
        errors.append("boundary_sub must be >= internal_sub")
    if cfg.background_horizon_ms <= 0:
        errors.append("background_horizon_ms must be positive")

    if not 0.0 <= cfg.interpolation_mu <= 1.0:
        errors.append("interpolation_mu must be in [0, 1]")

    return errors


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Parse the flat config format into a (possibly nested) dict

    One `key = value` per line, `#` starts a comment, dotted keys address
    map entries (`source_weights.typed = 1.0`).
    """
    values: Dict[str, Any] = {}
    problems: List[str] = []

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if " #" in line:
            line = line.split(" #", 1)[0].rstrip()
        if "=" not in line:
            problems.append(f"line {line_no}: expected 'key = value'")
            continue

        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            problems.append(f"line {line_no}: empty key")
            continue

        target = values
        *parents, leaf = key.split(".")
        for parent in parents:
            node = target.setdefault(parent, {})
            if not isinstance(node, dict):
                problems.append(f"line {line_no}: '{parent}' is not a map")
                break
            target = node
        else:
            target[leaf] = value

    if problems:
        raise ConfigError(problems)
    return values


def build_config(values: Dict[str, Any]) -> EngineConfig:
    """Validate raw values into an EngineConfig, raising ConfigError on any violation"""
    try:
        cfg = EngineConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError([
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        ]) from e

    errors = validate_config(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> EngineConfig:
    """
    Load an engine configuration

    Args:
        path: Flat config file; defaults only when omitted
        overrides: Values applied on top of the file

    Raises:
        ConfigError: listing every problem found
    """
    values: Dict[str, Any] = {}
    if path is not None:
        values = parse_config_text(Path(path).read_text(encoding="utf-8"))
    if overrides:
        values.update(overrides)
    return build_config(values)


class Profile(BaseModel):
    """A named set of engine overrides (real-time or background model)"""
    model_config = ConfigDict(frozen=True)

    name: ProfileName
    overrides: Dict[str, Any] = Field(default_factory=dict)


REALTIME_PROFILE = Profile(name=ProfileName.REALTIME)

BACKGROUND_PROFILE = Profile(
    name=ProfileName.BACKGROUND,
    overrides={
        "halflife_ms": 7 * DAY_MS,
        "snapshot_interval_ms": 6 * HOUR_MS,
        "decay_cycle_interval_ms": 6 * HOUR_MS,
        "session_idle_expiry_ms": 60 * MINUTE_MS,
        "prune_threshold": 0.01,
    },
)

PROFILES: Dict[ProfileName, Profile] = {
    ProfileName.REALTIME: REALTIME_PROFILE,
    ProfileName.BACKGROUND: BACKGROUND_PROFILE,
}


def apply_profile(cfg: EngineConfig, profile: Profile) -> EngineConfig:
    """
    Overlay a profile on a base configuration

    Raises:
        ConfigError: if the result is invalid, or a background profile decays
            faster than the base real-time configuration
    """
    merged = build_config({**cfg.model_dump(), **profile.overrides})
    if profile.name is ProfileName.BACKGROUND and merged.halflife_ms < cfg.halflife_ms:
        raise ConfigError([
            f"background halflife ({merged.halflife_ms} ms) must be >= realtime halflife ({cfg.halflife_ms} ms)"
        ])
    return merged


# Global settings instance
settings = Settings()
