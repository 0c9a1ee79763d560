"""clipmap: index text clips from visited pages, teach weighted concepts,
and re-find both on a force-directed 2D map."""

from .embedding import HashedTextEmbedder, RemoteEmbeddingProvider, provider_from_spec
from .errors import (
    AlreadyMember,
    ClipmapError,
    DegenerateVector,
    DimensionError,
    EmptyDocument,
    InvalidConcept,
    InvalidInput,
    InvalidWeight,
    LoadError,
    NotFound,
    ProviderUnavailable,
)
from .extraction import extract_clips
from .graph import build_similarity_graph
from .index import ExactCosineNeighbors, GraphCosineNeighbors, VectorIndex
from .layout import ForceLayout
from .model import Clip, Concept, Page, concept_vector, cosine_similarity, normalize_weights
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "AlreadyMember",
    "Clip",
    "ClipmapError",
    "Concept",
    "DegenerateVector",
    "DimensionError",
    "EmptyDocument",
    "ExactCosineNeighbors",
    "ForceLayout",
    "GraphCosineNeighbors",
    "HashedTextEmbedder",
    "InvalidConcept",
    "InvalidInput",
    "InvalidWeight",
    "LoadError",
    "NotFound",
    "Page",
    "ProviderUnavailable",
    "RemoteEmbeddingProvider",
    "VectorIndex",
    "Workspace",
    "build_similarity_graph",
    "concept_vector",
    "cosine_similarity",
    "extract_clips",
    "normalize_weights",
    "provider_from_spec",
    "__version__",
]
