"""Persistent store for pages, clips, concepts, and cached embeddings.

Everything human-readable lives in one JSON document (store.json); the
embedding cache is a separate compressed npz keyed by (provider, text)
hashes so switching providers invalidates it naturally. Writes go to a
temp file in the same directory and are renamed into place, so a crash
mid-save never leaves a half-written store. Loads validate shape and
referential integrity and raise LoadError naming the file and field.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import LoadError
from .model import (
    Clip,
    Concept,
    ConceptMember,
    Page,
    parse_timestamp,
)

log = logging.getLogger(__name__)

STORE_FILE = "store.json"
EMBEDDINGS_FILE = "embeddings.npz"
FORMAT_VERSION = 1


def page_id_for(url: str, visited_at) -> str:
    key = f"{url}|{visited_at.isoformat()}"
    return "p" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def clip_id_for(page_id: str, text: str) -> str:
    key = f"{page_id}|{text}"
    return "c" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def note_id_for(page_id: str, text: str, seq: int) -> str:
    key = f"{page_id}|{text}|{seq}"
    return "n" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def embedding_key(provider_name: str, text: str) -> str:
    digest = hashlib.sha256(f"{provider_name}\x00{text}".encode("utf-8")).hexdigest()
    return "e" + digest[:32]


@dataclass
class Store:
    """In-memory state; persistence is to_document/from_document plus npz."""

    provider_name: str = ""
    dimension: int = 0
    pages: dict[str, Page] = field(default_factory=dict)
    clips: dict[str, Clip] = field(default_factory=dict)
    concepts: dict[str, Concept] = field(default_factory=dict)
    membership_log: list[tuple[int, str, str]] = field(default_factory=list)
    embeddings: dict[str, np.ndarray] = field(default_factory=dict)
    next_seq: int = 1
    next_concept: int = 1
    next_custom: int = 1
    layout_doc: Optional[dict] = None
    layout_version: int = 0

    def take_seq(self) -> int:
        seq = self.next_seq
        self.next_seq += 1
        return seq

    def cached_embedding(self, text: str) -> Optional[np.ndarray]:
        return self.embeddings.get(embedding_key(self.provider_name, text))

    def cache_embedding(self, text: str, vector: np.ndarray) -> None:
        self.embeddings[embedding_key(self.provider_name, text)] = np.asarray(vector, dtype=np.float64)

    def to_document(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "settings": {
                "provider_name": self.provider_name,
                "dimension": self.dimension,
            },
            "counters": {
                "next_seq": self.next_seq,
                "next_concept": self.next_concept,
                "next_custom": self.next_custom,
            },
            "pages": [
                {
                    "id": p.id,
                    "url": p.url,
                    "title": p.title,
                    "visited_at": p.visited_at.isoformat(),
                    "seq": p.seq,
                }
                for p in sorted(self.pages.values(), key=lambda p: p.seq)
            ],
            "clips": [
                {
                    "id": c.id,
                    "text": c.text,
                    "kind": c.kind,
                    "page_id": c.page_id,
                    "keywords": list(c.keywords),
                    "seq": c.seq,
                    "owner_concept_id": c.owner_concept_id,
                }
                for c in sorted(self.clips.values(), key=lambda c: c.seq)
            ],
            "concepts": [
                {
                    "id": c.id,
                    "name": c.name,
                    "members": [{"clip_id": m.clip_id, "stars": m.stars} for m in c.members],
                    "position": list(c.position) if c.position is not None else None,
                    "visible": c.visible,
                    "color": list(c.color),
                    "revision": c.revision,
                }
                for c in sorted(self.concepts.values(), key=lambda c: c.id)
            ],
            "membership_log": [list(entry) for entry in self.membership_log],
            "layout_version": self.layout_version,
            "layout": self.layout_doc,
        }

    def save(self, data_dir) -> None:
        data_dir = Path(data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        doc = json.dumps(self.to_document(), ensure_ascii=False, indent=1)
        _atomic_write_bytes(data_dir / STORE_FILE, doc.encode("utf-8"))
        tmp = data_dir / (EMBEDDINGS_FILE + ".tmp.npz")
        np.savez_compressed(tmp, **self.embeddings)
        os.replace(tmp, data_dir / EMBEDDINGS_FILE)


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _require(obj: dict, key: str, kind, file: str, where: str):
    if key not in obj:
        raise LoadError(f"{where} is missing {key!r}", file=file, field=f"{where}.{key}")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise LoadError(
            f"{where}.{key} has wrong type {type(value).__name__}",
            file=file,
            field=f"{where}.{key}",
        )
    return value


def store_from_document(doc: dict, file: str = STORE_FILE) -> Store:
    if not isinstance(doc, dict):
        raise LoadError("store document is not an object", file=file, field="")
    settings = _require(doc, "settings", dict, file, "store")
    counters = _require(doc, "counters", dict, file, "store")
    store = Store(
        provider_name=_require(settings, "provider_name", str, file, "settings"),
        dimension=_require(settings, "dimension", int, file, "settings"),
        next_seq=_require(counters, "next_seq", int, file, "counters"),
        next_concept=_require(counters, "next_concept", int, file, "counters"),
        next_custom=_require(counters, "next_custom", int, file, "counters"),
    )
    for i, p in enumerate(_require(doc, "pages", list, file, "store")):
        where = f"pages[{i}]"
        raw_ts = _require(p, "visited_at", str, file, where)
        try:
            visited = parse_timestamp(raw_ts)
        except ValueError:
            raise LoadError(
                f"{where}.visited_at is not a timestamp: {raw_ts!r}",
                file=file,
                field=f"{where}.visited_at",
            )
        page = Page(
            id=_require(p, "id", str, file, where),
            url=_require(p, "url", str, file, where),
            title=_require(p, "title", str, file, where),
            visited_at=visited,
            seq=_require(p, "seq", int, file, where),
        )
        if page.id in store.pages:
            raise LoadError(f"duplicate page id {page.id}", file=file, field=f"{where}.id")
        store.pages[page.id] = page
    for i, c in enumerate(_require(doc, "clips", list, file, "store")):
        where = f"clips[{i}]"
        clip = Clip(
            id=_require(c, "id", str, file, where),
            text=_require(c, "text", str, file, where),
            kind=_require(c, "kind", str, file, where),
            page_id=c.get("page_id"),
            keywords=list(_require(c, "keywords", list, file, where)),
            seq=_require(c, "seq", int, file, where),
            owner_concept_id=c.get("owner_concept_id"),
        )
        if clip.kind not in ("extracted", "note", "custom"):
            raise LoadError(f"{where}.kind is invalid: {clip.kind!r}", file=file, field=f"{where}.kind")
        if clip.kind == "custom":
            if clip.page_id is not None:
                raise LoadError(f"{where}.page_id set on a custom clip", file=file, field=f"{where}.page_id")
        else:
            if clip.page_id not in store.pages:
                raise LoadError(
                    f"{where}.page_id references unknown page {clip.page_id!r}",
                    file=file,
                    field=f"{where}.page_id",
                )
        if clip.id in store.clips:
            raise LoadError(f"duplicate clip id {clip.id}", file=file, field=f"{where}.id")
        store.clips[clip.id] = clip
    for i, c in enumerate(_require(doc, "concepts", list, file, "store")):
        where = f"concepts[{i}]"
        members = []
        raw_members = _require(c, "members", list, file, where)
        if not raw_members:
            raise LoadError(f"{where} has no members", file=file, field=f"{where}.members")
        for j, m in enumerate(raw_members):
            member = ConceptMember(
                clip_id=_require(m, "clip_id", str, file, f"{where}.members[{j}]"),
                stars=_require(m, "stars", int, file, f"{where}.members[{j}]"),
            )
            if member.clip_id not in store.clips:
                raise LoadError(
                    f"{where}.members[{j}] references unknown clip {member.clip_id!r}",
                    file=file,
                    field=f"{where}.members[{j}].clip_id",
                )
            if member.stars not in (1, 2, 3):
                raise LoadError(
                    f"{where}.members[{j}].stars out of range: {member.stars}",
                    file=file,
                    field=f"{where}.members[{j}].stars",
                )
            members.append(member)
        position = c.get("position")
        color = _require(c, "color", list, file, where)
        concept = Concept(
            id=_require(c, "id", str, file, where),
            name=_require(c, "name", str, file, where),
            members=members,
            position=tuple(position) if position is not None else None,
            visible=bool(_require(c, "visible", bool, file, where)),
            color=tuple(int(x) for x in color),
            revision=_require(c, "revision", int, file, where),
        )
        if concept.id in store.concepts:
            raise LoadError(f"duplicate concept id {concept.id}", file=file, field=f"{where}.id")
        store.concepts[concept.id] = concept
    for i, entry in enumerate(_require(doc, "membership_log", list, file, "store")):
        where = f"membership_log[{i}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise LoadError(f"{where} is malformed", file=file, field=where)
        seq, clip_id, concept_id = entry
        if clip_id not in store.clips:
            raise LoadError(
                f"{where} references unknown clip {clip_id!r}", file=file, field=f"{where}[1]"
            )
        store.membership_log.append((int(seq), str(clip_id), str(concept_id)))
    store.layout_version = int(doc.get("layout_version", 0))
    layout = doc.get("layout")
    if layout is not None and not isinstance(layout, dict):
        raise LoadError("layout is not an object", file=file, field="layout")
    store.layout_doc = layout
    return store


def load_store(data_dir) -> Store:
    data_dir = Path(data_dir)
    store_path = data_dir / STORE_FILE
    try:
        raw = store_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LoadError(f"no store at {store_path}", file=STORE_FILE, field="")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LoadError(f"store.json is not valid JSON: {exc}", file=STORE_FILE, field="")
    store = store_from_document(doc)
    emb_path = data_dir / EMBEDDINGS_FILE
    if emb_path.exists():
        try:
            with np.load(emb_path) as data:
                store.embeddings = {key: np.asarray(data[key], dtype=np.float64) for key in data.files}
        except (OSError, ValueError) as exc:
            raise LoadError(
                f"embedding cache is unreadable: {exc}", file=EMBEDDINGS_FILE, field=""
            )
    else:
        log.warning("embedding cache missing at %s; vectors will be recomputed", emb_path)
    return store


def stores_equal(a: Store, b: Store) -> bool:
    """Deep equality over everything that persists."""
    if a.to_document() != b.to_document():
        return False
    if set(a.embeddings) != set(b.embeddings):
        return False
    return all(np.array_equal(a.embeddings[k], b.embeddings[k]) for k in a.embeddings)
