"""Similarity graph construction for the map layout.

Nodes are all clips plus the visible concepts. Clip pairs compete for a
global edge budget: with N clips the budget is floor(k * N(N-1)/2) edges
(k defaults to 0.01, i.e. the strongest 1% of all pairs), taken from the
positive-cosine pairs in descending weight with ties broken by ascending
id pair. A linear budget of floor(k * N) is available as an alternative
reading. Each visible concept attaches to its top-m closest clips, and to
every member clip regardless of rank; only positive-weight edges exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import Concept

DEFAULT_EDGE_FRACTION = 0.01

DEFAULT_CONCEPT_DEGREE = 20


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    weight: float


@dataclass
class SimilarityGraph:
    clip_ids: list[str]
    concept_ids: list[str]
    edges: list[Edge] = field(default_factory=list)

    def node_ids(self) -> list[str]:
        return list(self.clip_ids) + list(self.concept_ids)

    def adjacency(self) -> np.ndarray:
        order = {nid: i for i, nid in enumerate(self.node_ids())}
        n = len(order)
        adj = np.zeros((n, n), dtype=np.float64)
        for e in self.edges:
            i, j = order[e.a], order[e.b]
            adj[i, j] = e.weight
            adj[j, i] = e.weight
        return adj


def edge_budget(n_clips: int, k: float, mode: str = "pairs") -> int:
    if mode == "linear":
        return math.floor(k * n_clips)
    return math.floor(k * n_clips * (n_clips - 1) / 2)


def select_clip_edges(
    ids: Sequence[str], matrix: np.ndarray, k: float, mode: str = "pairs"
) -> list[Edge]:
    """Top-budget positive-cosine clip pairs, deterministic order."""
    n = len(ids)
    budget = edge_budget(n, k, mode)
    if n < 2 or budget <= 0:
        return []
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    Xn = matrix / safe[:, None]
    sims = Xn @ Xn.T
    iu, ju = np.triu_indices(n, k=1)
    weights = sims[iu, ju]
    pos = weights > 0.0
    iu, ju, weights = iu[pos], ju[pos], weights[pos]
    order = np.lexsort((ju, iu, -weights))
    take = order[:budget]
    return [Edge(ids[int(i)], ids[int(j)], float(w)) for i, j, w in zip(iu[take], ju[take], weights[take])]


def concept_edges(
    concept: Concept,
    ids: Sequence[str],
    matrix: np.ndarray,
    m: int = DEFAULT_CONCEPT_DEGREE,
) -> list[Edge]:
    """Edges from one concept to its nearest clips plus all its members."""
    if concept.vector is None or len(ids) == 0:
        return []
    cnorm = float(np.linalg.norm(concept.vector))
    if cnorm == 0.0:
        return []
    norms = np.linalg.norm(matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    Xn = matrix / safe[:, None]
    sims = Xn @ (concept.vector / cnorm)
    order = np.argsort(-sims, kind="stable")
    attached = [int(i) for i in order[:m] if sims[int(i)] > 0.0]
    chosen = set(attached)
    pos = {cid: i for i, cid in enumerate(ids)}
    for member_id in concept.member_ids():
        i = pos.get(member_id)
        if i is not None and sims[i] > 0.0:
            chosen.add(i)
    return [Edge(concept.id, ids[i], float(sims[i])) for i in sorted(chosen)]


def build_similarity_graph(
    clip_ids: Sequence[str],
    matrix: Optional[np.ndarray],
    concepts: Sequence[Concept] = (),
    k: float = DEFAULT_EDGE_FRACTION,
    m: int = DEFAULT_CONCEPT_DEGREE,
    edge_budget_mode: str = "pairs",
) -> SimilarityGraph:
    """Assemble the full layout graph for the current store state."""
    ids = list(clip_ids)
    visible = [c for c in concepts if c.visible]
    graph = SimilarityGraph(
        clip_ids=ids, concept_ids=[c.id for c in visible]
    )
    if matrix is None or len(ids) == 0:
        return graph
    graph.edges.extend(select_clip_edges(ids, matrix, k, edge_budget_mode))
    for concept in visible:
        graph.edges.extend(concept_edges(concept, ids, matrix, m))
    return graph
