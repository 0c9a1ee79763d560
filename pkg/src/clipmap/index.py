"""Vector index over clip embeddings.

Two query routes share one contract and one tie-break rule (descending
similarity, then ascending clip id):

* ExactCosineNeighbors scans the whole matrix with BLAS. It is the ground
  truth and stays fast to a few thousand clips.
* GraphCosineNeighbors is the approximate route for larger stores: an
  exact k-nearest-neighbor graph built with blocked matrix products,
  reverse edges capped by similarity, then best-first beam search from a
  fixed set of seeded entry points. Deterministic for a fixed index.

VectorIndex wraps both behind clip ids with snapshot semantics: any
mutation bumps the version and invalidates the built structures, queries
always run against a freshly built snapshot.
"""

from __future__ import annotations

import heapq
import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DegenerateVector, DimensionError, NotFound
from .model import as_vector


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateVector("index contains a zero-norm vector")
    return X / norms[:, None]


def _normalize_query(q, dim: int) -> np.ndarray:
    vec = as_vector(q, dim=dim)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DegenerateVector("cannot search with a zero-norm query")
    return vec / norm


class ExactCosineNeighbors(BaseEstimator):
    """Brute-force cosine nearest neighbors with stable tie-breaks."""

    def __init__(self, n_neighbors: int = 20):
        self.n_neighbors = n_neighbors

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.X_ = X
        self.Xn_ = _normalize_rows(X)
        return self

    def kneighbors(self, Q, n_neighbors: Optional[int] = None):
        k = self.n_neighbors if n_neighbors is None else n_neighbors
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        Qn = _normalize_rows(Q)
        sims = Qn @ self.Xn_.T
        k = min(k, self.Xn_.shape[0])
        # stable sort keeps ascending row index among equal similarities
        order = np.argsort(-sims, axis=1, kind="stable")[:, :k]
        top = np.take_along_axis(sims, order, axis=1)
        return top, order


class GraphCosineNeighbors(BaseEstimator):
    """Approximate cosine nearest neighbors over a prebuilt neighbor graph."""

    def __init__(
        self,
        graph_k: int = 32,
        reverse_cap: int = 64,
        n_entries: int = 32,
        ef: int = 300,
        block_size: int = 1024,
        random_state: int = 0,
    ):
        self.graph_k = graph_k
        self.reverse_cap = reverse_cap
        self.n_entries = n_entries
        self.ef = ef
        self.block_size = block_size
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        self.Xn_ = _normalize_rows(X)
        n = self.Xn_.shape[0]
        k = min(self.graph_k, max(n - 1, 0))
        neighbors = self._knn_graph(k) if k else [np.empty(0, dtype=np.int64)] * n
        self.adjacency_ = self._with_reverse_edges(neighbors)
        rng = np.random.default_rng(self.random_state)
        count = min(self.n_entries, n)
        self.entries_ = np.sort(rng.choice(n, size=count, replace=False)) if count else np.empty(0, dtype=np.int64)
        return self

    def _knn_graph(self, k: int) -> list[np.ndarray]:
        Xn = self.Xn_
        n = Xn.shape[0]
        out: list[np.ndarray] = []
        for start in range(0, n, self.block_size):
            stop = min(start + self.block_size, n)
            sims = Xn[start:stop] @ Xn.T
            rows = np.arange(start, stop)
            sims[np.arange(stop - start), rows] = -np.inf
            part = np.argpartition(-sims, k - 1, axis=1)[:, :k]
            for i in range(stop - start):
                out.append(np.sort(part[i]).astype(np.int64))
        return out

    def _with_reverse_edges(self, neighbors: list[np.ndarray]) -> list[np.ndarray]:
        n = len(neighbors)
        extra: list[list[int]] = [[] for _ in range(n)]
        for node, nbrs in enumerate(neighbors):
            for nb in nbrs:
                extra[int(nb)].append(node)
        adjacency: list[np.ndarray] = []
        for node in range(n):
            merged = set(neighbors[node].tolist())
            merged.update(extra[node])
            merged.discard(node)
            ids = np.fromiter(merged, dtype=np.int64, count=len(merged))
            if ids.size > self.reverse_cap:
                sims = self.Xn_[ids] @ self.Xn_[node]
                keep = np.argpartition(-sims, self.reverse_cap - 1)[: self.reverse_cap]
                ids = ids[keep]
            adjacency.append(np.sort(ids))
        return adjacency

    def kneighbors(self, Q, n_neighbors: int = 20, ef: Optional[int] = None):
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        ef = max(self.ef if ef is None else ef, n_neighbors)
        all_sims, all_idx = [], []
        for q in Q:
            pairs = self._search_one(q, n_neighbors, ef)
            all_sims.append(np.array([s for s, _ in pairs]))
            all_idx.append(np.array([i for _, i in pairs], dtype=np.int64))
        return all_sims, all_idx

    def _search_one(self, q: np.ndarray, k: int, ef: int) -> list[tuple[float, int]]:
        qn = _normalize_query(q, self.Xn_.shape[1])
        n = self.Xn_.shape[0]
        if n == 0:
            return []
        entries = self.entries_
        sims = self.Xn_[entries] @ qn
        visited = set(int(e) for e in entries)
        # max-heap of frontier candidates via negated similarity
        frontier = [(-float(s), int(e)) for s, e in zip(sims, entries)]
        heapq.heapify(frontier)
        # min-heap pool of the best ef seen so far
        pool = [(float(s), int(e)) for s, e in zip(sims, entries)]
        heapq.heapify(pool)
        while len(pool) > ef:
            heapq.heappop(pool)
        while frontier:
            neg, node = heapq.heappop(frontier)
            if len(pool) >= ef and -neg < pool[0][0]:
                break
            nbrs = self.adjacency_[node]
            fresh = [int(nb) for nb in nbrs if int(nb) not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            fresh_arr = np.asarray(fresh, dtype=np.int64)
            fresh_sims = self.Xn_[fresh_arr] @ qn
            floor = pool[0][0] if len(pool) >= ef else -np.inf
            for s, nb in zip(fresh_sims, fresh_arr):
                s = float(s)
                if len(pool) < ef or s > floor:
                    heapq.heappush(pool, (s, int(nb)))
                    if len(pool) > ef:
                        heapq.heappop(pool)
                    floor = pool[0][0] if len(pool) >= ef else -np.inf
                    heapq.heappush(frontier, (-s, int(nb)))
        best = sorted(pool, key=lambda p: (-p[0], p[1]))
        return best[: min(k, n)]


@dataclass
class _Snapshot:
    version: int
    ids: list[str]
    matrix: np.ndarray
    exact: ExactCosineNeighbors
    ann: Optional[GraphCosineNeighbors] = None


class VectorIndex:
    """Mutable id-to-vector store with versioned query snapshots."""

    def __init__(self, dimension: int, random_state: int = 0):
        if dimension <= 0:
            raise DimensionError("index dimension must be positive")
        self.dimension = dimension
        self.random_state = random_state
        self._entries: dict[str, np.ndarray] = {}
        self._version = 0
        self._snapshot: Optional[_Snapshot] = None
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, clip_id: str) -> bool:
        return clip_id in self._entries

    @property
    def version(self) -> int:
        return self._version

    def add(self, clip_id: str, vector) -> None:
        vec = as_vector(vector, dim=self.dimension)
        with self._lock:
            self._entries[clip_id] = vec
            self._version += 1
            self._snapshot = None

    def remove(self, clip_id: str) -> None:
        with self._lock:
            if clip_id not in self._entries:
                raise NotFound(f"clip {clip_id!r} is not indexed")
            del self._entries[clip_id]
            self._version += 1
            self._snapshot = None

    def get_vector(self, clip_id: str) -> np.ndarray:
        try:
            return self._entries[clip_id]
        except KeyError:
            raise NotFound(f"clip {clip_id!r} is not indexed")

    def ids(self) -> list[str]:
        return sorted(self._entries)

    def _current(self) -> Optional[_Snapshot]:
        with self._lock:
            if not self._entries:
                return None
            snap = self._snapshot
            if snap is None or snap.version != self._version:
                ids = sorted(self._entries)
                matrix = np.stack([self._entries[i] for i in ids])
                exact = ExactCosineNeighbors().fit(matrix)
                snap = _Snapshot(self._version, ids, matrix, exact)
                self._snapshot = snap
            return snap

    def _ann(self, snap: _Snapshot) -> GraphCosineNeighbors:
        with self._lock:
            if snap.ann is None:
                snap.ann = GraphCosineNeighbors(random_state=self.random_state).fit(snap.matrix)
            return snap.ann

    def _resolve(self, snap, sims, idx, k: int, exclude) -> list[tuple[str, float]]:
        skip = set(exclude or ())
        out = []
        for s, i in zip(sims, idx):
            cid = snap.ids[int(i)]
            if cid in skip:
                continue
            out.append((cid, float(s)))
            if len(out) == k:
                break
        return out

    def exact_knn(self, query, k: int, exclude=None) -> list[tuple[str, float]]:
        snap = self._current()
        if snap is None or k <= 0:
            return []
        want = min(k + len(exclude or ()), len(snap.ids))
        sims, idx = snap.exact.kneighbors(query, n_neighbors=want)
        return self._resolve(snap, sims[0], idx[0], k, exclude)

    def ann_knn(self, query, k: int, exclude=None) -> list[tuple[str, float]]:
        snap = self._current()
        if snap is None or k <= 0:
            return []
        want = min(k + len(exclude or ()), len(snap.ids))
        ann = self._ann(snap)
        sims, idx = ann.kneighbors(query, n_neighbors=want)
        return self._resolve(snap, sims[0], idx[0], k, exclude)


def evaluate_recall(
    n: int = 5000,
    k: int = 20,
    n_queries: int = 100,
    dim: int = 256,
    seed: int = 0,
) -> dict:
    """Measure approximate-route recall against the exact route.

    Random unit-ish vectors, held-out queries, recall@k averaged over
    queries. Returns recall plus wall times for build and search.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    Q = rng.standard_normal((n_queries, dim))
    t0 = time.perf_counter()
    ann = GraphCosineNeighbors(random_state=seed).fit(X)
    build_s = time.perf_counter() - t0
    exact = ExactCosineNeighbors().fit(X)
    _, true_idx = exact.kneighbors(Q, n_neighbors=k)
    t0 = time.perf_counter()
    _, got_idx = ann.kneighbors(Q, n_neighbors=k)
    query_s = time.perf_counter() - t0
    hits = 0
    for truth, got in zip(true_idx, got_idx):
        hits += len(set(truth.tolist()) & set(got.tolist()))
    return {
        "n": n,
        "k": k,
        "n_queries": n_queries,
        "recall": hits / (k * n_queries),
        "build_seconds": build_s,
        "query_seconds": query_s,
    }
