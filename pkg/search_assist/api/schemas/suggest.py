"""
Pydantic schemas for ranked output
Suggestions, spelling corrections, snapshots and the serving API responses
"""
import math
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ProfileName(str, Enum):
    """Which model produced a snapshot"""
    REALTIME = "Realtime"
    BACKGROUND = "Background"


class Suggestion(BaseModel):
    """One related query with its score and the features it was scored from"""
    model_config = ConfigDict(frozen=True)

    query: str = Field(..., description="Normalized suggestion text")
    score: float
    crf: float = 0.0
    pmi: float = 0.0
    llr: float = 0.0

    @field_validator("score")
    @classmethod
    def validate_score(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("score must be finite")
        return v

    def to_record(self) -> Dict[str, Any]:
        return {"q": self.query, "score": self.score, "crf": self.crf, "pmi": self.pmi, "llr": self.llr}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "Suggestion":
        return cls(
            query=record["q"],
            score=record["score"],
            crf=record.get("crf", 0.0),
            pmi=record.get("pmi", 0.0),
            llr=record.get("llr", 0.0),
        )


class SpellCorrection(BaseModel):
    """A more popular query within a small edit distance"""
    model_config = ConfigDict(frozen=True)

    query: str
    distance: float = Field(..., ge=0.0)
    ratio: float = Field(..., ge=0.0)

    def to_record(self) -> Dict[str, Any]:
        return {"q": self.query, "dist": self.distance, "ratio": self.ratio}

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "SpellCorrection":
        return cls(query=record["q"], distance=record["dist"], ratio=record["ratio"])


def suggestion_sort_key(s: Suggestion):
    """Descending score, ties by suggestion text"""
    return (-s.score, s.query)


class SnapshotEntry(BaseModel):
    """Ranked suggestions and optional correction for one query"""
    model_config = ConfigDict(frozen=True)

    query: str
    suggestions: List[Suggestion] = Field(default_factory=list)
    spell: Optional[SpellCorrection] = None
    lang: Optional[str] = None

    @model_validator(mode="after")
    def check_ranking(self) -> "SnapshotEntry":
        keys = [suggestion_sort_key(s) for s in self.suggestions]
        if keys != sorted(keys):
            raise ValueError(f"suggestions for {self.query!r} are not sorted")
        if any(s.query == self.query for s in self.suggestions):
            raise ValueError(f"entry {self.query!r} suggests itself")
        return self

    def to_record(self) -> Dict[str, Any]:
        record = {
            "q": self.query,
            "suggestions": [s.to_record() for s in self.suggestions],
            "spell": self.spell.to_record() if self.spell else None,
        }
        if self.lang is not None:
            record["lang"] = self.lang
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "SnapshotEntry":
        spell = record.get("spell")
        return cls(
            query=record["q"],
            suggestions=[Suggestion.from_record(s) for s in record.get("suggestions", [])],
            spell=SpellCorrection.from_record(spell) if spell else None,
            lang=record.get("lang"),
        )


class Snapshot(BaseModel):
    """An atomically published ranking output"""
    model_config = ConfigDict(frozen=True)

    generation_id: int = Field(..., ge=1)
    event_ts: int = Field(..., ge=0, description="Snapshot time on the event clock")
    profile: ProfileName
    entries: Dict[str, SnapshotEntry] = Field(default_factory=dict)

    @property
    def file_name(self) -> str:
        return f"snapshot-{self.generation_id}.{self.profile.value}.jsonl"


class Manifest(BaseModel):
    """Names the newest complete snapshot file of a profile"""
    file: str
    generation_id: int = Field(..., ge=1)
    event_ts: int = Field(..., ge=0)


class SuggestResponse(BaseModel):
    """Response of GET /suggest"""
    query: str
    suggestions: List[Suggestion] = Field(default_factory=list)
    spell: Optional[SpellCorrection] = None
    generation_ids: Dict[str, Optional[int]] = Field(default_factory=dict)


class HealthResponse(BaseModel):
    """Response of GET /healthz"""
    status: str
    version: str
    generation_ids: Dict[str, Optional[int]]
    event_ts: Dict[str, Optional[int]]
    last_poll_age_seconds: Optional[float] = None
    last_error: Optional[str] = None


class ErrorResponse(BaseModel):
    """Error response schema"""
    error: str = Field(..., description="Error type")
    message: str = Field(..., description="Error message")
    details: Optional[Dict[str, Any]] = Field(None, description="Additional error details")
    timestamp: datetime = Field(default_factory=datetime.utcnow)
