"""REST surface over a Workspace.

Routes are thin: they validate transport-level shape, call the engine,
and map domain errors to statuses (NotFound 404, invalid definitions
422, unusable input 400, malformed JSON bodies 400). Mutating responses
carry the layout version the mutation produced so clients know when to
re-fetch the map.
"""

from __future__ import annotations

import base64
from typing import Optional

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from .errors import (
    AlreadyMember,
    ClipmapError,
    DegenerateVector,
    DimensionError,
    EmptyDocument,
    InvalidConcept,
    InvalidInput,
    InvalidWeight,
    NotFound,
    ProviderUnavailable,
)
from .extraction import CorpusRecord
from .model import parse_timestamp
from .workspace import Workspace

MAX_PAGE_ITEMS = 200


class PageIn(BaseModel):
    url: str = Field(min_length=1)
    html: str = Field(min_length=1)
    title: Optional[str] = None
    visited_at: Optional[str] = None
    note: Optional[str] = None


class NoteIn(BaseModel):
    text: str = Field(min_length=1)


class MemberIn(BaseModel):
    clip_id: Optional[str] = None
    text: Optional[str] = None
    stars: int = 1

    @model_validator(mode="after")
    def _one_source(self):
        if (self.clip_id is None) == (self.text is None):
            raise ValueError("member needs exactly one of clip_id or text")
        return self

    def spec(self) -> dict:
        if self.clip_id is not None:
            return {"clip_id": self.clip_id, "stars": self.stars}
        return {"text": self.text, "stars": self.stars}


class ConceptIn(BaseModel):
    name: str = Field(min_length=1)
    members: list[MemberIn] = Field(min_length=1)
    color: Optional[tuple[int, int, int]] = None
    position: Optional[tuple[float, float]] = None
    visible: bool = True


class ConceptPatch(BaseModel):
    name: Optional[str] = None
    add: Optional[list[MemberIn]] = None
    remove: Optional[list[str]] = None
    restar: Optional[dict[str, int]] = None


class PositionIn(BaseModel):
    x: float
    y: float


class VisibilityIn(BaseModel):
    visible: bool


class ColorIn(BaseModel):
    color: tuple[int, int, int]


def concept_doc(concept) -> dict:
    return {
        "id": concept.id,
        "name": concept.name,
        "members": [{"clip_id": m.clip_id, "stars": m.stars} for m in concept.members],
        "position": list(concept.position) if concept.position else None,
        "visible": concept.visible,
        "color": list(concept.color),
        "revision": concept.revision,
    }


def _encode_cursor(offset: int) -> str:
    return base64.urlsafe_b64encode(f"o:{offset}".encode()).decode()


def _decode_cursor(cursor: str) -> int:
    try:
        raw = base64.urlsafe_b64decode(cursor.encode()).decode()
        tag, value = raw.split(":", 1)
        if tag != "o":
            raise ValueError(raw)
        return int(value)
    except Exception:
        raise InvalidInput(f"invalid cursor: {cursor!r}")


def _paginate(cards: list[dict], cursor: Optional[str], limit: int) -> dict:
    offset = _decode_cursor(cursor) if cursor else 0
    limit = max(1, min(limit, MAX_PAGE_ITEMS))
    taken = 0
    skipped = 0
    out_cards: list[dict] = []
    for card in cards:
        clips = []
        for clip in card["clips"]:
            if skipped < offset:
                skipped += 1
                continue
            if taken == limit:
                break
            clips.append(clip)
            taken += 1
        if clips:
            out_cards.append({"page": card["page"], "clips": clips})
        if taken == limit:
            break
    total = sum(len(c["clips"]) for c in cards)
    consumed = offset + taken
    return {
        "results": out_cards,
        "next_cursor": _encode_cursor(consumed) if consumed < total else None,
    }


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="clipmap", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        if any(str(e.get("type", "")).startswith("json") for e in errors):
            return JSONResponse(status_code=400, content={"detail": "malformed JSON body"})
        detail = [
            {"field": ".".join(str(p) for p in e.get("loc", ())), "message": e.get("msg", "")}
            for e in errors
        ]
        return JSONResponse(status_code=422, content={"detail": detail})

    @app.exception_handler(ClipmapError)
    async def domain_handler(request: Request, exc: ClipmapError):
        status = 422
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, (InvalidInput, EmptyDocument)):
            status = 400
        elif isinstance(exc, ProviderUnavailable):
            status = 503
        elif isinstance(exc, (InvalidConcept, InvalidWeight, AlreadyMember, DegenerateVector, DimensionError)):
            status = 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/info")
    def info():
        return workspace.info()

    @app.post("/pages")
    def add_page(body: PageIn, response: Response):
        visited = parse_timestamp(body.visited_at) if body.visited_at else None
        record = CorpusRecord(
            url=body.url, html=body.html, title=body.title, visited_at=visited, note=body.note
        )
        page, created, clips = workspace.ingest_record(record)
        response.status_code = 201 if created else 200
        return {
            "page": workspace._page_doc(page),
            "created": created,
            "clip_count": len(clips),
            "layout_version": workspace.store.layout_version,
        }

    @app.get("/pages/{page_id}")
    def page_detail(page_id: str):
        page = workspace.store.pages.get(page_id)
        if page is None:
            raise NotFound(f"page {page_id!r} does not exist")
        clips = workspace._page_clips(page_id)
        return {
            "page": workspace._page_doc(page),
            "clips": [workspace._clip_doc(c) for c in clips],
        }

    @app.post("/pages/{page_id}/notes", status_code=201)
    def add_note(page_id: str, body: NoteIn):
        clip = workspace.attach_note(page_id, body.text)
        return {
            "clip": workspace._clip_doc(clip),
            "layout_version": workspace.store.layout_version,
        }

    @app.get("/clips")
    def search_clips(
        q: str = Query(default=""),
        cursor: Optional[str] = None,
        limit: int = Query(default=MAX_PAGE_ITEMS, ge=1),
    ):
        cards = workspace.search_clips(q)
        return _paginate(cards, cursor, limit)

    @app.get("/clips/{clip_id}")
    def clip_detail(clip_id: str):
        clip = workspace.store.clips.get(clip_id)
        if clip is None:
            raise NotFound(f"clip {clip_id!r} does not exist")
        return workspace._clip_doc(clip)

    @app.get("/clips/{clip_id}/similar")
    def similar(clip_id: str, limit: int = Query(default=10, ge=1, le=MAX_PAGE_ITEMS)):
        return {"results": workspace.similar_clips(clip_id, limit=limit)}

    @app.get("/concepts")
    def list_concepts():
        concepts = sorted(workspace.store.concepts.values(), key=lambda c: c.id)
        return {"concepts": [concept_doc(c) for c in concepts]}

    @app.post("/concepts", status_code=201)
    def add_concept(body: ConceptIn):
        concept = workspace.create_concept(
            body.name,
            [m.spec() for m in body.members],
            color=body.color,
            position=body.position,
            visible=body.visible,
        )
        return {
            "concept": concept_doc(concept),
            "layout_version": workspace.store.layout_version,
        }

    @app.get("/concepts/{concept_id}")
    def concept_detail(concept_id: str):
        concept = workspace._concept(concept_id)
        neighbors = workspace.concept_neighbors(concept_id)
        return {
            "concept": concept_doc(concept),
            "neighbors": [{"clip_id": cid, "similarity": sim} for cid, sim in neighbors],
        }

    @app.patch("/concepts/{concept_id}")
    def patch_concept(concept_id: str, body: ConceptPatch):
        concept = workspace.update_concept(
            concept_id,
            name=body.name,
            add=[m.spec() for m in body.add] if body.add else None,
            remove=body.remove,
            restar=body.restar,
        )
        return {
            "concept": concept_doc(concept),
            "layout_version": workspace.store.layout_version,
        }

    @app.delete("/concepts/{concept_id}")
    def remove_concept(concept_id: str):
        workspace.delete_concept(concept_id)
        return {"layout_version": workspace.store.layout_version}

    @app.put("/concepts/{concept_id}/position")
    def move_concept(concept_id: str, body: PositionIn):
        version = workspace.set_concept_position(concept_id, body.x, body.y)
        return {"layout_version": version}

    @app.put("/concepts/{concept_id}/visibility")
    def set_visibility(concept_id: str, body: VisibilityIn):
        version = workspace.set_concept_visibility(concept_id, body.visible)
        return {"layout_version": version}

    @app.put("/concepts/{concept_id}/color")
    def set_color(concept_id: str, body: ColorIn):
        version = workspace.set_concept_color(concept_id, body.color)
        return {"layout_version": version}

    @app.get("/layout")
    def layout(since: Optional[int] = Query(default=None)):
        doc = workspace.layout_doc(since=since)
        if doc is None:
            return Response(status_code=204)
        return doc

    @app.get("/finder")
    def finder(
        x: float = Query(),
        y: float = Query(),
        r: float = Query(gt=0),
    ):
        return {"results": workspace.finder(x, y, r)}

    return app
