"""
Pydantic schemas for the two input hoses
Normalized queries, query events and tweet events
"""
import re
from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

from search_assist.exceptions import EmptyQuery


_LANG_PATTERN = re.compile(r"^(?:[a-z]{2}|und)$")


class Sigil(str, Enum):
    """Leading marker of a query"""
    NONE = "none"
    HASHTAG = "hashtag"
    MENTION = "mention"


class QuerySource(str, Enum):
    """How the query was issued"""
    TYPED = "typed"
    HASHTAG_CLICK = "hashtag_click"
    TREND_CLICK = "trend_click"
    RELATED_CLICK = "related_click"


def collapse_whitespace(raw: str) -> str:
    """Lowercase and collapse every run of Unicode whitespace to one space"""
    return " ".join(raw.lower().split())


def detect_sigil(text: str) -> Sigil:
    if text.startswith("#"):
        return Sigil.HASHTAG
    if text.startswith("@"):
        return Sigil.MENTION
    return Sigil.NONE


class Query(BaseModel):
    """
    A normalized query

    Two queries are equal iff their normalized text is equal; the sigil is
    derived from the first character and never stored separately.
    """
    model_config = ConfigDict(frozen=True)

    text: str

    @field_validator("text")
    @classmethod
    def normalize_text(cls, v: str) -> str:
        text = collapse_whitespace(v)
        if not text:
            raise ValueError("query is empty after normalization")
        return text

    @computed_field
    @property
    def sigil(self) -> Sigil:
        return detect_sigil(self.text)

    @property
    def stripped(self) -> str:
        """Text without its sigil character"""
        return self.text[1:] if self.sigil is not Sigil.NONE else self.text

    def __str__(self) -> str:
        return self.text


def normalize_query(raw: str) -> Query:
    """
    Normalize a raw query string

    Lowercases and collapses whitespace; no stemming and no punctuation
    stripping, so distinct hashtags stay distinct.

    Raises:
        EmptyQuery: if the input trims to nothing
    """
    text = collapse_whitespace(raw)
    if not text:
        raise EmptyQuery(f"query {raw!r} is empty after normalization")
    # already normalized, skip re-validation on the hot path
    return Query.model_construct(text=text)


def _check_lang(v: str) -> str:
    lang = (v or "und").strip().lower()
    if not _LANG_PATTERN.match(lang):
        raise ValueError(f"lang must be a 2-letter code or 'und', got {v!r}")
    return lang


class QueryEvent(BaseModel):
    """A query observed in the query hose"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["query"] = "query"
    session_id: str = Field(..., min_length=1, description="Anonymized session token")
    query: Query
    source: QuerySource
    lang: str = Field(default="und", description="2-letter language code or 'und'")
    ts: int = Field(..., gt=0, description="Event time, ms since epoch")

    @field_validator("lang")
    @classmethod
    def validate_lang(cls, v: str) -> str:
        return _check_lang(v)


class TweetEvent(BaseModel):
    """A document observed in the firehose"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["tweet"] = "tweet"
    tweet_id: str = Field(..., min_length=1)
    text: str
    lang: str = "und"
    ts: int = Field(..., gt=0)

    @field_validator("text")
    @classmethod
    def validate_text(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("tweet text is empty")
        return v

    @field_validator("lang")
    @classmethod
    def validate_lang(cls, v: str) -> str:
        return _check_lang(v)


Event = Annotated[Union[QueryEvent, TweetEvent], Field(discriminator="kind")]
