"""The engine binding store, index, graph, and layout together.

A Workspace owns one store and one embedding provider. All mutation goes
through a single writer lock; every mutation that can change the map
rebuilds the similarity graph and runs a layout pass synchronously (a
cold full run the first time, short warm refinements after), bumping the
layout version that clients poll. Reads serve from the latest computed
snapshot.
"""

from __future__ import annotations

import colorsys
import logging
import threading
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .embedding import EmbeddingProvider
from .errors import (
    AlreadyMember,
    DimensionError,
    InvalidConcept,
    InvalidInput,
    NotFound,
)
from .extraction import CorpusRecord, extract_clips, iter_corpus
from .graph import (
    DEFAULT_CONCEPT_DEGREE,
    DEFAULT_EDGE_FRACTION,
    SimilarityGraph,
    build_similarity_graph,
)
from .index import VectorIndex
from .keywords import extract_keywords
from .layout import ForceLayout, LayoutResult, points_in_disk
from .model import (
    Clip,
    Concept,
    ConceptMember,
    Page,
    concept_vector,
    normalize_weights,
    utcnow,
)
from .store import (
    STORE_FILE,
    Store,
    clip_id_for,
    load_store,
    note_id_for,
    page_id_for,
)

log = logging.getLogger(__name__)

NEUTRAL_COLOR = (148, 148, 148)

MemberSpec = dict


class Workspace:
    """One user's clip map: ingestion, concepts, search, and layout."""

    def __init__(
        self,
        provider: EmbeddingProvider,
        data_dir: Optional[Union[str, Path]] = None,
        seed: int = 0,
        edge_fraction: float = DEFAULT_EDGE_FRACTION,
        concept_degree: int = DEFAULT_CONCEPT_DEGREE,
        edge_budget_mode: str = "pairs",
        layout_engine: Optional[ForceLayout] = None,
    ):
        self.provider = provider
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self.seed = seed
        self.edge_fraction = edge_fraction
        self.concept_degree = concept_degree
        self.edge_budget_mode = edge_budget_mode
        self.layout_engine = layout_engine or ForceLayout(seed=seed)
        self._rng = np.random.default_rng(seed)
        self._lock = threading.RLock()
        self._graph: Optional[SimilarityGraph] = None
        self._layout_result: Optional[LayoutResult] = None

        if self.data_dir is not None and (self.data_dir / STORE_FILE).exists():
            self.store = load_store(self.data_dir)
            if self.store.dimension != provider.dimension:
                raise DimensionError(
                    f"store was built with dimension {self.store.dimension}, "
                    f"provider {provider.name!r} produces {provider.dimension}"
                )
            if self.store.provider_name != provider.name:
                log.warning(
                    "provider changed from %r to %r; cached embeddings will be recomputed",
                    self.store.provider_name,
                    provider.name,
                )
                self.store.provider_name = provider.name
        else:
            self.store = Store(provider_name=provider.name, dimension=provider.dimension)

        self.index = VectorIndex(self.store.dimension, random_state=seed)
        self._bind_index()
        self._restore_layout()

    # ------------------------------------------------------------------
    # binding and persistence

    def _bind_index(self) -> None:
        missing = [c for c in self.store.clips.values() if self.store.cached_embedding(c.text) is None]
        if missing:
            log.warning("recomputing %d missing embeddings from provider", len(missing))
            texts = [c.text for c in missing]
            for clip, vec in zip(missing, self.provider.embed_texts(texts)):
                self.store.cache_embedding(clip.text, vec)
        for clip in self.store.clips.values():
            vec = self.store.cached_embedding(clip.text)
            clip.embedding = vec
            self.index.add(clip.id, vec)
        for concept in self.store.concepts.values():
            self._recompute_vector(concept)

    def _restore_layout(self) -> None:
        doc = self.store.layout_doc
        if doc and isinstance(doc.get("nodes"), dict):
            positions = {
                nid: (float(node["x"]), float(node["y"]))
                for nid, node in doc["nodes"].items()
                if isinstance(node, dict) and "x" in node and "y" in node
            }
            bounds = tuple(doc.get("bounds", (0.0, 0.0, 0.0, 0.0)))
            self._layout_result = LayoutResult(
                positions=positions,
                bounds=bounds,  # type: ignore[arg-type]
                converged=bool(doc.get("converged", False)),
                iterations=0,
            )
        self._graph = self._build_graph()

    def save(self) -> None:
        if self.data_dir is not None:
            self.store.save(self.data_dir)

    # ------------------------------------------------------------------
    # embedding helpers

    def _embed(self, text: str) -> np.ndarray:
        cached = self.store.cached_embedding(text)
        if cached is not None:
            return cached
        vec = self.provider.embed_texts([text])[0]
        self.store.cache_embedding(text, vec)
        return vec

    def _make_clip(self, clip_id: str, text: str, kind: str, page_id=None, owner=None) -> Clip:
        vec = self._embed(text)
        clip = Clip(
            id=clip_id,
            text=text,
            kind=kind,
            page_id=page_id,
            seq=self.store.take_seq(),
            owner_concept_id=owner,
            embedding=vec,
        )
        clip.keywords = extract_keywords(text, self.provider, clip_vector=vec)
        self.store.clips[clip.id] = clip
        self.index.add(clip.id, vec)
        return clip

    def _recompute_vector(self, concept: Concept) -> None:
        vectors = [self.index.get_vector(m.clip_id) for m in concept.members]
        weights = normalize_weights([m.stars for m in concept.members])
        concept.vector = concept_vector(vectors, weights)

    # ------------------------------------------------------------------
    # graph and layout

    def _build_graph(self) -> SimilarityGraph:
        ids = self.index.ids()
        matrix = np.stack([self.index.get_vector(i) for i in ids]) if ids else None
        return build_similarity_graph(
            ids,
            matrix,
            list(self.store.concepts.values()),
            k=self.edge_fraction,
            m=self.concept_degree,
            edge_budget_mode=self.edge_budget_mode,
        )

    def _pins(self) -> dict[str, tuple[float, float]]:
        return {
            c.id: c.position
            for c in self.store.concepts.values()
            if c.visible and c.position is not None
        }

    def _refresh(self) -> None:
        self._graph = self._build_graph()
        pins = self._pins()
        if self._layout_result is None:
            result = self.layout_engine.layout(self._graph, pins=pins, seed=self.seed)
        else:
            result = self.layout_engine.refine(
                self._graph, pins, self._layout_result.positions, seed=self.seed
            )
        self._layout_result = result
        for concept in self.store.concepts.values():
            if concept.visible and concept.position is None:
                pos = result.positions.get(concept.id)
                if pos is not None:
                    concept.position = pos
        self._bump_layout(result)

    def _bump_layout(self, result: Optional[LayoutResult]) -> None:
        self.store.layout_version += 1
        self.store.layout_doc = self._export_layout(result)

    def clip_color(self, clip_id: str) -> tuple[int, int, int]:
        for _, log_clip, log_concept in reversed(self.store.membership_log):
            if log_clip != clip_id:
                continue
            concept = self.store.concepts.get(log_concept)
            if concept is not None and concept.visible:
                return concept.color
        return NEUTRAL_COLOR

    def _export_layout(self, result: Optional[LayoutResult]) -> dict:
        nodes: dict[str, dict] = {}
        if result is not None:
            for nid, (x, y) in result.positions.items():
                clip = self.store.clips.get(nid)
                if clip is not None:
                    nodes[nid] = {
                        "x": x,
                        "y": y,
                        "kind": clip.kind,
                        "color": list(self.clip_color(nid)),
                        "page_id": clip.page_id,
                        "label": ", ".join(clip.keywords),
                    }
                    continue
                concept = self.store.concepts.get(nid)
                if concept is not None:
                    nodes[nid] = {
                        "x": x,
                        "y": y,
                        "kind": "concept",
                        "color": list(concept.color),
                        "page_id": None,
                        "label": concept.name,
                    }
        return {
            "version": self.store.layout_version,
            "bounds": list(result.bounds) if result is not None else [0.0, 0.0, 0.0, 0.0],
            "converged": result.converged if result is not None else True,
            "nodes": nodes,
        }

    # ------------------------------------------------------------------
    # ingestion

    def ingest_record(self, record: CorpusRecord, refresh: bool = True) -> tuple[Page, bool, list[Clip]]:
        with self._lock:
            visited = record.visited_at or utcnow()
            pid = page_id_for(record.url, visited)
            if pid in self.store.pages:
                return self.store.pages[pid], False, []
            extracted = extract_clips(record.html, url=record.url, title_hint=record.title)
            page = Page(
                id=pid,
                url=record.url,
                title=extracted.title,
                visited_at=visited,
                seq=self.store.take_seq(),
            )
            self.store.pages[pid] = page
            clips: list[Clip] = []
            for text in extracted.clips:
                cid = clip_id_for(pid, text)
                if cid in self.store.clips:
                    continue
                clips.append(self._make_clip(cid, text, "extracted", page_id=pid))
            if record.note and record.note.strip():
                clips.append(self._attach_note_locked(pid, record.note))
            if refresh:
                self._refresh()
                self.save()
            return page, True, clips

    def ingest_corpus(self, path) -> dict:
        report = {
            "pages_created": 0,
            "clips_created": 0,
            "duplicates_skipped": 0,
            "malformed": [],
        }
        with self._lock:
            for lineno, item in iter_corpus(path):
                if isinstance(item, InvalidInput):
                    report["malformed"].append({"line": lineno, "reason": str(item)})
                    continue
                try:
                    _, created, clips = self.ingest_record(item, refresh=False)
                except InvalidInput as exc:
                    report["malformed"].append({"line": lineno, "reason": str(exc)})
                    continue
                if created:
                    report["pages_created"] += 1
                    report["clips_created"] += len(clips)
                else:
                    report["duplicates_skipped"] += 1
            self._refresh()
            self.save()
        return report

    def _attach_note_locked(self, page_id: str, text: str) -> Clip:
        normalized = " ".join(text.split())
        if not normalized or not any(ch.isalnum() for ch in normalized):
            raise InvalidInput("note text has no content")
        nid = note_id_for(page_id, normalized, self.store.next_seq)
        return self._make_clip(nid, normalized, "note", page_id=page_id)

    def attach_note(self, page_id: str, text: str) -> Clip:
        with self._lock:
            if page_id not in self.store.pages:
                raise NotFound(f"page {page_id!r} does not exist")
            clip = self._attach_note_locked(page_id, text)
            self._refresh()
            self.save()
            return clip

    # ------------------------------------------------------------------
    # concepts

    def _random_color(self) -> tuple[int, int, int]:
        hue = float(self._rng.random())
        r, g, b = colorsys.hls_to_rgb(hue, 0.55, 0.65)
        return (int(r * 255), int(g * 255), int(b * 255))

    def _random_position(self) -> tuple[float, float]:
        if self._layout_result is not None and self._layout_result.positions:
            x0, y0, x1, y1 = self._layout_result.bounds
        else:
            side = max(len(self.store.clips), 1) ** 0.5
            x0, y0, x1, y1 = 0.0, 0.0, side, side
        return (
            float(x0 + self._rng.random() * (x1 - x0)),
            float(y0 + self._rng.random() * (y1 - y0)),
        )

    def _check_member_spec(self, spec: MemberSpec) -> None:
        normalize_weights([spec.get("stars", 1)])
        if "clip_id" in spec:
            if spec["clip_id"] not in self.store.clips:
                raise NotFound(f"clip {spec['clip_id']!r} does not exist")
        else:
            text = " ".join(str(spec.get("text", "")).split())
            if not text:
                raise InvalidInput("custom example text is empty")

    def _resolve_member(self, spec: MemberSpec, concept_id: str) -> ConceptMember:
        stars = spec.get("stars", 1)
        if "clip_id" in spec:
            return ConceptMember(clip_id=spec["clip_id"], stars=stars)
        normalized = " ".join(str(spec.get("text", "")).split())
        cid = f"x{self.store.next_custom:07d}"
        self.store.next_custom += 1
        self._make_clip(cid, normalized, "custom", owner=concept_id)
        return ConceptMember(clip_id=cid, stars=stars)

    def create_concept(
        self,
        name: str,
        members: Sequence[MemberSpec],
        color: Optional[tuple[int, int, int]] = None,
        position: Optional[tuple[float, float]] = None,
        visible: bool = True,
    ) -> Concept:
        with self._lock:
            if not name or not name.strip():
                raise InvalidConcept("concept name is empty")
            if not members:
                raise InvalidConcept("a concept needs at least one example")
            seen: set[str] = set()
            for spec in members:
                self._check_member_spec(spec)
                clip_id = spec.get("clip_id")
                if clip_id is not None:
                    if clip_id in seen:
                        raise AlreadyMember(f"clip {clip_id!r} listed twice in one concept")
                    seen.add(clip_id)
            cid = f"k{self.store.next_concept:07d}"
            self.store.next_concept += 1
            resolved = [self._resolve_member(spec, cid) for spec in members]
            concept = Concept(
                id=cid,
                name=name.strip(),
                members=resolved,
                position=position or self._random_position(),
                visible=visible,
                color=color or self._random_color(),
            )
            self._recompute_vector(concept)
            self.store.concepts[cid] = concept
            for member in resolved:
                self.store.membership_log.append((self.store.take_seq(), member.clip_id, cid))
            self._refresh()
            self.save()
            return concept

    def update_concept(
        self,
        concept_id: str,
        name: Optional[str] = None,
        add: Optional[Sequence[MemberSpec]] = None,
        remove: Optional[Sequence[str]] = None,
        restar: Optional[dict] = None,
    ) -> Concept:
        with self._lock:
            concept = self._concept(concept_id)
            members = [ConceptMember(m.clip_id, m.stars) for m in concept.members]
            current = {m.clip_id for m in members}
            for clip_id in remove or ():
                if clip_id not in current:
                    raise NotFound(f"clip {clip_id!r} is not a member of {concept_id!r}")
                current.discard(clip_id)
                members = [m for m in members if m.clip_id != clip_id]
            for clip_id, stars in (restar or {}).items():
                hit = next((m for m in members if m.clip_id == clip_id), None)
                if hit is None:
                    raise NotFound(f"clip {clip_id!r} is not a member of {concept_id!r}")
                normalize_weights([stars])
                hit.stars = stars
            pending = set(current)
            for spec in add or ():
                self._check_member_spec(spec)
                clip_id = spec.get("clip_id")
                if clip_id is not None:
                    if clip_id in pending:
                        raise AlreadyMember(
                            f"clip {clip_id!r} is already a member of {concept_id!r}"
                        )
                    pending.add(clip_id)
            if not members and not (add or ()):
                raise InvalidConcept("a concept needs at least one example")
            added: list[ConceptMember] = []
            for spec in add or ():
                member = self._resolve_member(spec, concept_id)
                current.add(member.clip_id)
                members.append(member)
                added.append(member)
            members_changed = bool(remove or restar or added)
            removed_set = set(remove or ())
            concept.members = members
            if name is not None and name.strip():
                concept.name = name.strip()
            if removed_set:
                self.store.membership_log = [
                    entry
                    for entry in self.store.membership_log
                    if not (entry[2] == concept_id and entry[1] in removed_set)
                ]
                self._cleanup_orphans(removed_set, concept_id)
            for member in added:
                self.store.membership_log.append((self.store.take_seq(), member.clip_id, concept_id))
            if members_changed:
                self._recompute_vector(concept)
                concept.revision += 1
            self._refresh()
            self.save()
            return concept

    def _cleanup_orphans(self, removed: set[str], owner_id: str) -> None:
        for clip_id in removed:
            clip = self.store.clips.get(clip_id)
            if clip is None or clip.kind != "custom" or clip.owner_concept_id != owner_id:
                continue
            still_used = any(
                clip_id in c.member_ids() for c in self.store.concepts.values()
            )
            if not still_used:
                del self.store.clips[clip_id]
                self.index.remove(clip_id)
                self.store.membership_log = [
                    e for e in self.store.membership_log if e[1] != clip_id
                ]

    def delete_concept(self, concept_id: str) -> None:
        with self._lock:
            concept = self._concept(concept_id)
            owned = [
                c.id
                for c in self.store.clips.values()
                if c.kind == "custom" and c.owner_concept_id == concept_id
            ]
            for other in self.store.concepts.values():
                if other.id == concept_id:
                    continue
                overlap = [m for m in other.members if m.clip_id in owned]
                if overlap and len(other.members) == len(overlap):
                    raise InvalidConcept(
                        f"deleting {concept_id!r} would leave {other.id!r} without examples"
                    )
            for other in self.store.concepts.values():
                if other.id == concept_id:
                    continue
                other_before = len(other.members)
                other.members = [m for m in other.members if m.clip_id not in owned]
                if len(other.members) != other_before:
                    self._recompute_vector(other)
                    other.revision += 1
            owned_set = set(owned)
            for cid in owned:
                del self.store.clips[cid]
                self.index.remove(cid)
            del self.store.concepts[concept_id]
            self.store.membership_log = [
                e
                for e in self.store.membership_log
                if e[2] != concept_id and e[1] not in owned_set
            ]
            self._refresh()
            self.save()

    def set_concept_position(self, concept_id: str, x: float, y: float) -> int:
        with self._lock:
            concept = self._concept(concept_id)
            concept.position = (float(x), float(y))
            self._refresh()
            self.save()
            return self.store.layout_version

    def set_concept_visibility(self, concept_id: str, visible: bool) -> int:
        with self._lock:
            concept = self._concept(concept_id)
            if concept.visible != visible:
                concept.visible = visible
                self._refresh()
                self.save()
            return self.store.layout_version

    def set_concept_color(self, concept_id: str, color: tuple[int, int, int]) -> int:
        with self._lock:
            concept = self._concept(concept_id)
            concept.color = (int(color[0]), int(color[1]), int(color[2]))
            self._bump_layout(self._layout_result)
            self.save()
            return self.store.layout_version

    def _concept(self, concept_id: str) -> Concept:
        concept = self.store.concepts.get(concept_id)
        if concept is None:
            raise NotFound(f"concept {concept_id!r} does not exist")
        return concept

    def concept_neighbors(self, concept_id: str, j: Optional[int] = None) -> list[tuple[str, float]]:
        concept = self._concept(concept_id)
        return self.index.exact_knn(concept.vector, j or self.concept_degree)

    # ------------------------------------------------------------------
    # queries

    def _page_clips(self, page_id: str) -> list[Clip]:
        mine = [c for c in self.store.clips.values() if c.page_id == page_id]
        notes = sorted((c for c in mine if c.kind == "note"), key=lambda c: c.seq)
        rest = sorted((c for c in mine if c.kind != "note"), key=lambda c: c.seq)
        return notes + rest

    def _clip_doc(self, clip: Clip, similarity: Optional[float] = None) -> dict:
        doc = {
            "id": clip.id,
            "text": clip.text,
            "kind": clip.kind,
            "page_id": clip.page_id,
            "keywords": list(clip.keywords),
            "color": list(self.clip_color(clip.id)),
        }
        if similarity is not None:
            doc["similarity"] = similarity
        return doc

    def _page_doc(self, page: Page) -> dict:
        return {
            "id": page.id,
            "url": page.url,
            "title": page.title,
            "visited_at": page.visited_at.isoformat(),
        }

    def _group_cards(self, clips: Sequence[Clip], sims: Optional[dict] = None, order: str = "recency") -> list[dict]:
        by_page: dict[str, list[Clip]] = {}
        for clip in clips:
            if clip.page_id is None:
                continue
            by_page.setdefault(clip.page_id, []).append(clip)
        cards = []
        for page_id, group in by_page.items():
            page = self.store.pages[page_id]
            notes = sorted((c for c in group if c.kind == "note"), key=lambda c: c.seq)
            rest = sorted((c for c in group if c.kind != "note"), key=lambda c: c.seq)
            ordered = notes + rest
            if sims is not None:
                ordered = sorted(group, key=lambda c: (-sims.get(c.id, 0.0), c.id))
            cards.append(
                {
                    "page": self._page_doc(page),
                    "clips": [
                        self._clip_doc(c, sims.get(c.id) if sims is not None else None)
                        for c in ordered
                    ],
                }
            )
        if order == "similarity" and sims is not None:
            cards.sort(key=lambda card: -max(c.get("similarity", 0.0) for c in card["clips"]))
        else:
            cards.sort(key=lambda card: card["page"]["visited_at"], reverse=True)
        return cards

    def search_clips(self, query: str) -> list[dict]:
        if not query or not query.strip():
            raise InvalidInput("search query is empty")
        needle = query.lower()
        hits = [
            c
            for c in self.store.clips.values()
            if c.page_id is not None and needle in c.text.lower()
        ]
        return self._group_cards(hits)

    def similar_clips(self, clip_id: str, limit: int = 10) -> list[dict]:
        clip = self.store.clips.get(clip_id)
        if clip is None:
            raise NotFound(f"clip {clip_id!r} does not exist")
        ranked = self.index.exact_knn(self.index.get_vector(clip_id), limit, exclude={clip_id})
        sims = dict(ranked)
        hits = [self.store.clips[cid] for cid, _ in ranked if self.store.clips[cid].page_id is not None]
        return self._group_cards(hits, sims=sims, order="similarity")

    def finder(self, x: float, y: float, radius: float) -> list[dict]:
        if not radius > 0:
            raise InvalidInput("finder radius must be positive")
        result = self.get_layout_result()
        if result is None:
            return []
        inside = points_in_disk(result.positions, (x, y), radius)
        hits = [
            self.store.clips[nid]
            for nid in inside
            if nid in self.store.clips and self.store.clips[nid].page_id is not None
        ]
        return self._group_cards(hits)

    # ------------------------------------------------------------------
    # layout access

    def get_layout_result(self) -> Optional[LayoutResult]:
        with self._lock:
            if self._layout_result is None and (self.store.clips or self.store.concepts):
                self._refresh()
                self.save()
            return self._layout_result

    def layout_doc(self, since: Optional[int] = None) -> Optional[dict]:
        with self._lock:
            self.get_layout_result()
            if since is not None and since == self.store.layout_version:
                return None
            if self.store.layout_doc is None:
                self.store.layout_doc = self._export_layout(None)
            return self.store.layout_doc

    def relayout(self, iterations: Optional[int] = None, seed: Optional[int] = None) -> dict:
        """Full cold layout run, replacing the current snapshot."""
        with self._lock:
            self._graph = self._build_graph()
            result = self.layout_engine.layout(
                self._graph, pins=self._pins(), iterations=iterations, seed=self.seed if seed is None else seed
            )
            self._layout_result = result
            self._bump_layout(result)
            self.save()
            return self.store.layout_doc

    def info(self) -> dict:
        return {
            "provider": self.provider.name,
            "dimension": self.store.dimension,
            "page_count": len(self.store.pages),
            "clip_count": len(self.store.clips),
            "concept_count": len(self.store.concepts),
            "layout_version": self.store.layout_version,
        }

    def graph(self) -> SimilarityGraph:
        with self._lock:
            if self._graph is None:
                self._graph = self._build_graph()
            return self._graph
