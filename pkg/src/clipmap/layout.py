"""Constrained force-directed 2D layout.

Spring-embedder force model: every node pair repels with k^2/d^2, every
edge attracts with w * d/k, so heavier edges pull harder. Displacements
are capped by a temperature that starts at a tenth of the layout extent
and cools geometrically, which keeps late iterations from tearing the
map apart. Concept nodes the user has placed are pins: they contribute
forces but never move, so the neighborhood deforms around them.

Full runs start from a seeded uniform square; interactive updates reuse
the previous positions and run a short reheated refinement so the map
stays visually stable while it adapts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .graph import SimilarityGraph

Point = tuple[float, float]


@dataclass
class LayoutResult:
    positions: dict[str, Point]
    bounds: tuple[float, float, float, float]
    converged: bool
    iterations: int


def _bounds(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float, float, float]:
    return (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))


class ForceLayout(BaseEstimator):
    """Deterministic spring embedder with pinned nodes.

    Identical (graph, pins, iterations, seed, warm-start positions) give
    bitwise identical output.
    """

    def __init__(
        self,
        iterations: int = 300,
        warm_iterations: int = 60,
        cooling: float = 0.95,
        temp_factor: float = 0.1,
        reheat: float = 0.3,
        opt_dist: float = 1.0,
        seed: int = 0,
        converge_tol: float = 1e-3,
    ):
        self.iterations = iterations
        self.warm_iterations = warm_iterations
        self.cooling = cooling
        self.temp_factor = temp_factor
        self.reheat = reheat
        self.opt_dist = opt_dist
        self.seed = seed
        self.converge_tol = converge_tol

    def layout(
        self,
        graph: SimilarityGraph,
        pins: Optional[Mapping[str, Point]] = None,
        init: Optional[Mapping[str, Point]] = None,
        iterations: Optional[int] = None,
        temp_scale: float = 1.0,
        seed: Optional[int] = None,
    ) -> LayoutResult:
        pins = dict(pins or {})
        init = dict(init or {})
        node_ids = graph.node_ids()
        n = len(node_ids)
        steps = self.iterations if iterations is None else iterations
        if n == 0:
            return LayoutResult({}, (0.0, 0.0, 0.0, 0.0), True, steps)

        rng = np.random.default_rng(self.seed if seed is None else seed)
        side = math.sqrt(n)
        known = [p for nid, p in init.items() if nid in set(node_ids)]
        known += [p for nid, p in pins.items() if nid in set(node_ids)]
        if known:
            ka = np.asarray(known, dtype=np.float64)
            lo = ka.min(axis=0)
            hi = np.maximum(ka.max(axis=0), lo + 1e-9)
        else:
            lo = np.zeros(2)
            hi = np.array([side, side])
        pos = np.empty((n, 2), dtype=np.float64)
        pinned = np.zeros(n, dtype=bool)
        for i, nid in enumerate(node_ids):
            if nid in pins:
                pos[i] = pins[nid]
                pinned[i] = True
            elif nid in init:
                pos[i] = init[nid]
            else:
                pos[i] = lo + rng.random(2) * (hi - lo)

        adj = graph.adjacency()
        last_step = self._run(pos, pinned, adj, steps, temp_scale)
        xs, ys = pos[:, 0], pos[:, 1]
        free = ~pinned
        converged = bool(steps == 0 or not free.any() or last_step < self.converge_tol * self.opt_dist)
        return LayoutResult(
            positions={nid: (float(pos[i, 0]), float(pos[i, 1])) for i, nid in enumerate(node_ids)},
            bounds=_bounds(xs, ys),
            converged=converged,
            iterations=steps,
        )

    def _run(
        self,
        pos: np.ndarray,
        pinned: np.ndarray,
        adj: np.ndarray,
        steps: int,
        temp_scale: float,
    ) -> float:
        n = pos.shape[0]
        if n < 2 or steps <= 0:
            return 0.0
        k = self.opt_dist
        x = pos[:, 0].copy()
        y = pos[:, 1].copy()
        extent = max(float(np.ptp(x)), float(np.ptp(y)), math.sqrt(n))
        t = self.temp_factor * extent * temp_scale
        dx = np.empty((n, n))
        dy = np.empty((n, n))
        dist2 = np.empty((n, n))
        force = np.empty((n, n))
        tmp = np.empty((n, n))
        last_step = 0.0
        for _ in range(steps):
            np.subtract(x[:, None], x[None, :], out=dx)
            np.subtract(y[:, None], y[None, :], out=dy)
            np.multiply(dx, dx, out=dist2)
            np.multiply(dy, dy, out=tmp)
            dist2 += tmp
            np.clip(dist2, 1e-4, None, out=dist2)
            np.divide(k * k, dist2, out=force)
            np.sqrt(dist2, out=tmp)
            np.multiply(adj, tmp, out=tmp)
            tmp /= k
            force -= tmp
            disp_x = (dx * force).sum(axis=1)
            disp_y = (dy * force).sum(axis=1)
            length = np.hypot(disp_x, disp_y)
            if not np.all(np.isfinite(length)):
                raise FloatingPointError("layout forces diverged to non-finite values")
            np.maximum(length, 1e-12, out=length)
            scale = np.minimum(length, t) / length
            scale[pinned] = 0.0
            x += disp_x * scale
            y += disp_y * scale
            last_step = float(np.max(length * scale)) if n else 0.0
            t *= self.cooling
        pos[:, 0] = x
        pos[:, 1] = y
        return last_step

    def refine(
        self,
        graph: SimilarityGraph,
        pins: Optional[Mapping[str, Point]],
        previous: Mapping[str, Point],
        seed: Optional[int] = None,
    ) -> LayoutResult:
        """Short reheated pass from existing positions after a small change."""
        return self.layout(
            graph,
            pins=pins,
            init=previous,
            iterations=self.warm_iterations,
            temp_scale=self.reheat,
            seed=seed,
        )


def points_in_disk(
    positions: Mapping[str, Point], center: Point, radius: float
) -> list[str]:
    """Ids whose point lies inside the closed disk, nearest first."""
    cx, cy = center
    r2 = radius * radius
    hits = []
    for nid, (px, py) in positions.items():
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        if d2 <= r2:
            hits.append((d2, nid))
    hits.sort()
    return [nid for _, nid in hits]
