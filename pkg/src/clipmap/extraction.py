"""Clip extraction from saved page HTML.

Real-world capture HTML is messy, so parsing is lenient: a small tree
builder on top of the stdlib HTMLParser that supplies implied end tags
(li, p, tr, td, th) and never hard-fails on malformed markup.

Candidates come only from paragraph-shaped containers: P and TR produce
one candidate each, OL and UL produce one per list item. The innermost
such container owns its text; ancestors do not re-count it. Candidates
shorter than 80 characters after whitespace normalization are noise and
are dropped, as are exact normalized duplicates (first one wins).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from html.parser import HTMLParser
from typing import Optional, Union

from .errors import EmptyDocument, InvalidInput
from .model import parse_timestamp

MIN_CLIP_CHARS = 80

UNIT_TAGS = {"p", "tr", "li"}

DROP_TAGS = {"script", "style", "noscript", "template", "nav"}

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

# tag -> (open tags it implicitly closes, scope tags that stop the search)
IMPLIED_CLOSES = {
    "li": ({"li"}, {"ul", "ol"}),
    "p": ({"p"}, {"table", "ul", "ol"}),
    "tr": ({"tr", "td", "th"}, {"table"}),
    "td": ({"td", "th"}, {"tr", "table"}),
    "th": ({"td", "th"}, {"tr", "table"}),
}


@dataclass
class _Node:
    tag: str
    children: list[Union["_Node", str]] = field(default_factory=list)


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Node("#root")
        self.stack = [self.root]

    def _close_implied(self, tag: str):
        targets, scope = IMPLIED_CLOSES[tag]
        for i in range(len(self.stack) - 1, 0, -1):
            open_tag = self.stack[i].tag
            if open_tag in targets:
                del self.stack[i:]
                return
            if open_tag in scope:
                return

    def handle_starttag(self, tag, attrs):
        if tag in IMPLIED_CLOSES:
            self._close_implied(tag)
        node = _Node(tag)
        self.stack[-1].children.append(node)
        if tag not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        if tag in IMPLIED_CLOSES:
            self._close_implied(tag)
        self.stack[-1].children.append(_Node(tag))

    def handle_endtag(self, tag):
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # stray end tag, ignore

    def handle_data(self, data):
        if data:
            self.stack[-1].children.append(data)


def parse_html(html: str) -> _Node:
    builder = _TreeBuilder()
    builder.feed(html)
    builder.close()
    return builder.root


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim."""
    return " ".join(text.split())


def _fragments(node: _Node, out: list[str], skip_units: bool):
    for child in node.children:
        if isinstance(child, str):
            out.append(child)
            continue
        if child.tag in DROP_TAGS:
            continue
        if skip_units and child.tag in UNIT_TAGS:
            continue
        out.append(" ")
        _fragments(child, out, skip_units)
        out.append(" ")


def element_text(node: _Node, exclude_nested_units: bool = False) -> str:
    frags: list[str] = []
    _fragments(node, frags, exclude_nested_units)
    return normalize_text("".join(frags))


def _walk_units(node: _Node, out: list[str]):
    for child in node.children:
        if isinstance(child, str):
            continue
        if child.tag in DROP_TAGS:
            continue
        if child.tag in UNIT_TAGS:
            out.append(element_text(child, exclude_nested_units=True))
        _walk_units(child, out)


def _find_title(node: _Node) -> Optional[str]:
    for child in node.children:
        if isinstance(child, str):
            continue
        if child.tag == "title":
            text = element_text(child)
            if text:
                return text
        found = _find_title(child)
        if found:
            return found
    return None


def _has_token(text: str) -> bool:
    return any(ch.isalnum() for ch in text)


@dataclass
class ExtractedDocument:
    title: str
    clips: list[str]


def extract_clips(html: str, url: str = "", title_hint: Optional[str] = None) -> ExtractedDocument:
    """Pull clip candidates out of page HTML.

    Returns the resolved page title and the surviving candidate texts in
    document order. Raises EmptyDocument only for empty input; markup
    with no qualifying text is a valid page with zero clips.
    """
    if not html or not html.strip():
        raise EmptyDocument("document has no content")
    root = parse_html(html)
    title = title_hint or _find_title(root) or url
    raw: list[str] = []
    _walk_units(root, raw)
    clips: list[str] = []
    seen: set[str] = set()
    for text in raw:
        if len(text) < MIN_CLIP_CHARS:
            continue
        if not _has_token(text):
            continue
        if text in seen:
            continue
        seen.add(text)
        clips.append(text)
    return ExtractedDocument(title=title, clips=clips)


@dataclass
class CorpusRecord:
    """One line of a browsing-history corpus file."""

    url: str
    html: str
    title: Optional[str] = None
    visited_at: Optional[datetime] = None
    note: Optional[str] = None


def parse_record(obj: dict) -> CorpusRecord:
    """Validate one decoded corpus object, raising InvalidInput with a reason."""
    if not isinstance(obj, dict):
        raise InvalidInput("record must be a JSON object")
    url = obj.get("url")
    if not isinstance(url, str) or not url.strip():
        raise InvalidInput("record is missing a url")
    html = obj.get("html")
    if not isinstance(html, str) or not html.strip():
        raise InvalidInput("record is missing html")
    title = obj.get("title")
    if title is not None and not isinstance(title, str):
        raise InvalidInput("title must be a string")
    note = obj.get("note")
    if note is not None and not isinstance(note, str):
        raise InvalidInput("note must be a string")
    visited_at = None
    raw_ts = obj.get("visited_at")
    if raw_ts is not None:
        if not isinstance(raw_ts, str):
            raise InvalidInput("visited_at must be an ISO-8601 string")
        try:
            visited_at = parse_timestamp(raw_ts)
        except ValueError:
            raise InvalidInput(f"visited_at is not ISO-8601: {raw_ts!r}")
    return CorpusRecord(url=url.strip(), html=html, title=title, visited_at=visited_at, note=note)


def iter_corpus(path) -> list[tuple[int, Union[CorpusRecord, InvalidInput]]]:
    """Read a JSONL corpus file, pairing each line with a record or an error."""
    out: list[tuple[int, Union[CorpusRecord, InvalidInput]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                out.append((lineno, InvalidInput(f"invalid JSON: {exc}")))
                continue
            try:
                out.append((lineno, parse_record(obj)))
            except InvalidInput as exc:
                out.append((lineno, exc))
    return out
