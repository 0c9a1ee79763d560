"""Core data types and the vector math the rest of the package builds on.

A concept is a tiny weighted training set: each example clip carries a star
rating in {1, 2, 3}, the ratings normalize to a probability vector, and the
concept's embedding is the weighted sum of its members' raw embeddings.
Similarity everywhere is cosine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateVector,
    DimensionError,
    InvalidConcept,
    InvalidWeight,
)

ALLOWED_STARS = (1, 2, 3)

CLIP_KINDS = ("extracted", "note", "custom")


def as_vector(values, dim: Optional[int] = None) -> np.ndarray:
    """Validate and coerce a sequence into a float64 1-D embedding vector."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {vec.shape}")
    if vec.size == 0:
        raise DimensionError("expected a non-empty vector")
    if not np.all(np.isfinite(vec)):
        raise DimensionError("vector contains non-finite components")
    if dim is not None and vec.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {vec.size}")
    return vec


def normalize_weights(stars: Sequence[int]) -> list[float]:
    """Turn star ratings into weights that sum to 1.

    Each rating must be 1, 2, or 3. An empty rating list is rejected, a
    concept cannot exist without examples.
    """
    if len(stars) == 0:
        raise InvalidConcept("a concept needs at least one example")
    for s in stars:
        if not isinstance(s, (int, np.integer)) or isinstance(s, bool) or s not in ALLOWED_STARS:
            raise InvalidWeight(f"star rating must be one of {ALLOWED_STARS}, got {s!r}")
    total = float(sum(stars))
    return [float(s) / total for s in stars]


def concept_vector(vectors: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """Weighted sum of member embeddings.

    Members contribute their raw (not re-normalized) vectors; the weights
    come from normalize_weights and must sum to 1.
    """
    if len(vectors) == 0:
        raise InvalidConcept("a concept needs at least one example")
    if len(vectors) != len(weights):
        raise DimensionError(
            f"{len(vectors)} vectors but {len(weights)} weights"
        )
    total = float(sum(weights))
    if abs(total - 1.0) > 1e-9:
        raise InvalidWeight(f"weights must sum to 1, got {total}")
    first = as_vector(vectors[0])
    out = np.zeros_like(first)
    for vec, w in zip(vectors, weights):
        v = as_vector(vec, dim=first.size)
        out += float(w) * v
    return out


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Undefined for zero-norm inputs; those raise DegenerateVector rather
    than silently returning 0.
    """
    va = as_vector(a)
    vb = as_vector(b, dim=va.size)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVector("cosine similarity is undefined for a zero vector")
    return float(np.dot(va, vb) / (na * nb))


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


@dataclass
class Page:
    """A visited web page clips were taken from."""

    id: str
    url: str
    title: str
    visited_at: datetime
    seq: int = 0


@dataclass
class Clip:
    """One unit of remembered text.

    kind is "extracted" for text pulled out of a page, "note" for text the
    user attached to a page, "custom" for free-typed concept examples that
    belong to no page.
    """

    id: str
    text: str
    kind: str = "extracted"
    page_id: Optional[str] = None
    keywords: list[str] = field(default_factory=list)
    seq: int = 0
    owner_concept_id: Optional[str] = None
    embedding: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


@dataclass
class ConceptMember:
    clip_id: str
    stars: int


@dataclass
class Concept:
    """A user-taught concept: named, weighted example clips, a map position."""

    id: str
    name: str
    members: list[ConceptMember] = field(default_factory=list)
    position: Optional[tuple[float, float]] = None
    visible: bool = True
    color: tuple[int, int, int] = (128, 128, 128)
    revision: int = 1
    vector: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def member_ids(self) -> list[str]:
        return [m.clip_id for m in self.members]

    def weights(self) -> list[float]:
        return normalize_weights([m.stars for m in self.members])
