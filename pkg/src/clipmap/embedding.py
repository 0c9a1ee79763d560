"""Embedding providers.

Two implementations of one small contract (name, dimension, embed_texts):

* HashedTextEmbedder, a deterministic hashed bag-of-words model used by the
  test suite and by offline work. No weights to download, same vector for
  the same text on every platform.
* RemoteEmbeddingProvider, a client for a real model served over HTTP with
  a two-endpoint wire protocol (GET /info, POST /embed).

embedding_service_app wraps any provider in that wire protocol so the CLI
can serve the test embedder for other processes.
"""

from __future__ import annotations

import hashlib
import re
import threading
import time
from typing import Iterable, Optional, Protocol, runtime_checkable

import numpy as np
import pydantic
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import DimensionError, InvalidInput, ProviderUnavailable

TOKEN_RE = re.compile(r"[0-9a-z]+")

HASH_KEY = b"hashed-bag-v1"


@runtime_checkable
class EmbeddingProvider(Protocol):
    """What the rest of the package needs from an embedding backend."""

    @property
    def name(self) -> str: ...

    @property
    def dimension(self) -> int: ...

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]: ...


def tokenize(text: str) -> list[str]:
    """Lowercase and split into maximal ASCII alphanumeric runs."""
    return TOKEN_RE.findall(text.lower())


def _signed_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=HASH_KEY).digest()
    return int.from_bytes(digest, "big", signed=True)


class HashedTextEmbedder(TransformerMixin, BaseEstimator):
    """Deterministic signed-bucket bag-of-words embedder.

    Each token hashes to a bucket in [0, dimension) with a +1/-1 sign taken
    from the hash's top bit; signed counts accumulate and the result is
    L2-normalized. Texts sharing tokens overlap in buckets and correlate,
    disjoint token sets are nearly orthogonal.

    In the rare case that signed counts cancel exactly to zero, the vector
    falls back to a one-hot on a bucket hashed from the whole token
    sequence, so output norm is always 1.
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    @property
    def name(self) -> str:
        return "hashed-bag-v1"

    def fit(self, X=None, y=None):
        return self

    def embed_text(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise InvalidInput("text has no alphanumeric tokens to embed")
        vec = np.zeros(self.dimension, dtype=np.float64)
        for tok in tokens:
            h = _signed_hash(tok)
            bucket = h % self.dimension
            vec[bucket] += 1.0 if h >= 0 else -1.0
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            bucket = _signed_hash("\x00".join(tokens)) % self.dimension
            vec[bucket] = 1.0
            return vec
        return vec / norm

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed_text(t) for t in texts]

    def transform(self, X: Iterable[str]) -> np.ndarray:
        return np.stack([self.embed_text(t) for t in X])


class RemoteEmbeddingProvider:
    """HTTP client for an embedding model behind the two-endpoint protocol.

    GET /info returns {"name": ..., "dimension": ...} and is fetched once,
    lazily. POST /embed takes {"texts": [...]} and returns {"vectors":
    [[...], ...]} in the same order. Transport failures and 5xx responses
    retry with exponential backoff before surfacing ProviderUnavailable;
    at most max_in_flight requests run concurrently.
    """

    def __init__(
        self,
        base_url: str,
        max_in_flight: int = 4,
        max_retries: int = 3,
        backoff: float = 0.25,
        batch_size: int = 64,
        timeout: float = 30.0,
        transport=None,
    ):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.max_in_flight = max_in_flight
        self.max_retries = max_retries
        self.backoff = backoff
        self.batch_size = batch_size
        self._slots = threading.Semaphore(max_in_flight)
        self._client = httpx.Client(
            base_url=self.base_url, timeout=timeout, transport=transport
        )
        self._info: Optional[dict] = None
        self._info_lock = threading.Lock()

    def _request(self, method: str, path: str, **kwargs):
        import httpx

        delay = self.backoff
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(delay)
                delay *= 2
            with self._slots:
                try:
                    resp = self._client.request(method, path, **kwargs)
                except httpx.HTTPError as exc:
                    last_error = exc
                    continue
            if resp.status_code >= 500:
                last_error = ProviderUnavailable(
                    f"provider returned {resp.status_code} for {path}", retry_after=delay
                )
                continue
            return resp
        raise ProviderUnavailable(
            f"embedding provider unreachable at {self.base_url}{path}: {last_error}",
            retry_after=delay,
        )

    def _fetch_info(self) -> dict:
        with self._info_lock:
            if self._info is None:
                resp = self._request("GET", "/info")
                data = resp.json()
                if "name" not in data or "dimension" not in data:
                    raise ProviderUnavailable(
                        f"provider /info is missing name or dimension: {data!r}"
                    )
                self._info = {"name": str(data["name"]), "dimension": int(data["dimension"])}
            return self._info

    @property
    def name(self) -> str:
        return self._fetch_info()["name"]

    @property
    def dimension(self) -> int:
        return self._fetch_info()["dimension"]

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        dim = self.dimension
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = texts[start : start + self.batch_size]
            resp = self._request("POST", "/embed", json={"texts": batch})
            if resp.status_code >= 400:
                raise InvalidInput(f"provider rejected texts: {resp.text}")
            vectors = resp.json().get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise ProviderUnavailable(
                    f"provider returned {0 if not isinstance(vectors, list) else len(vectors)}"
                    f" vectors for {len(batch)} texts"
                )
            for row in vectors:
                vec = np.asarray(row, dtype=np.float64)
                if vec.shape != (dim,):
                    raise DimensionError(
                        f"provider returned dimension {vec.shape}, expected ({dim},)"
                    )
                out.append(vec)
        return out

    def close(self):
        self._client.close()


class _EmbedRequest(pydantic.BaseModel):
    texts: list[str]


def embedding_service_app(provider: EmbeddingProvider):
    """FastAPI app exposing a provider over the wire protocol."""
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="clipmap embedding service")

    @app.get("/info")
    def info():
        return {"name": provider.name, "dimension": provider.dimension}

    @app.post("/embed")
    def embed(req: _EmbedRequest):
        try:
            vectors = provider.embed_texts(req.texts)
        except InvalidInput as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"vectors": [v.tolist() for v in vectors]}

    return app


def provider_from_spec(spec: str, dimension: int = 256, transport=None) -> EmbeddingProvider:
    """Build a provider from a CLI or env string.

    "test" gives the deterministic hashed embedder; anything else is
    treated as a base URL for the remote protocol.
    """
    if spec == "test":
        return HashedTextEmbedder(dimension=dimension)
    return RemoteEmbeddingProvider(spec, transport=transport)
