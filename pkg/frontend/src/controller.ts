/** Turns pointer gestures and panel actions into REST calls.
 *
 * All mutations flow through per-kind latest-wins queues: rapid
 * concept drops or finder tweaks collapse so the server only sees the
 * newest value once the in-flight request settles. Clips are never
 * user-positionable; dragging one on the canvas does nothing.
 */

import { ApiClient } from "./api.js";
import { SceneState } from "./state.js";
import { Viewport, type Point } from "./transform.js";
import type { ConceptEnvelope, MemberSpec, Rgb } from "./types.js";

export const CONCEPT_SIDE = 22;
export const CLIP_SIDE = 10;
/** Paper only says clips under the Finder "become larger"; 2x side. */
export const FINDER_SCALE = 2;
const RIM_GRAB = 8;
const CLICK_SLOP = 4;

/** Coalesces writes: while one is in flight, only the newest queued
 * value survives, and it is sent when the running one settles. */
export class LatestWins<T> {
  private pending: T | undefined;
  private running: Promise<void> | null = null;

  constructor(private readonly send: (value: T) => Promise<void>) {}

  push(value: T): Promise<void> {
    this.pending = value;
    if (!this.running) {
      this.running = this.drain();
    }
    return this.running;
  }

  private async drain(): Promise<void> {
    try {
      while (this.pending !== undefined) {
        const value = this.pending;
        this.pending = undefined;
        await this.send(value);
      }
    } finally {
      this.running = null;
    }
  }

  idle(): Promise<void> {
    return this.running ?? Promise.resolve();
  }
}

type Drag =
  | { kind: "none" }
  | { kind: "pan"; lastX: number; lastY: number }
  | { kind: "clip"; id: string; downX: number; downY: number }
  | { kind: "concept"; id: string; downX: number; downY: number; moved: boolean }
  | { kind: "finder-move"; offsetX: number; offsetY: number }
  | { kind: "finder-resize" };

export class MapController {
  private drag: Drag = { kind: "none" };
  /** Optimistic concept position shown until the layout catches up. */
  ghost: { id: string; x: number; y: number } | null = null;
  private ghostUntilVersion = -1;
  private polling = false;
  errors: unknown[] = [];
  onError: (err: unknown) => void = (err) => {
    this.errors.push(err);
  };

  private readonly positionQueue: LatestWins<{ id: string; x: number; y: number }>;
  private readonly finderQueue: LatestWins<{ x: number; y: number; r: number }>;

  constructor(
    readonly api: ApiClient,
    readonly state: SceneState,
    readonly viewport: Viewport,
  ) {
    this.positionQueue = new LatestWins(async ({ id, x, y }) => {
      try {
        const res = await this.api.setPosition(id, x, y);
        this.ghostUntilVersion = res.layout_version;
        await this.pollNow();
      } catch (err) {
        this.ghost = null;
        this.onError(err);
      }
    });
    this.finderQueue = new LatestWins(async ({ x, y, r }) => {
      try {
        const res = await this.api.finder(x, y, r);
        this.state.setFinderResults(res.results);
      } catch (err) {
        this.onError(err);
      }
    });
  }

  /** Await every queued write and the poll that follows it. */
  async flush(): Promise<void> {
    await this.positionQueue.idle();
    await this.finderQueue.idle();
  }

  // ----- polling --------------------------------------------------

  async pollNow(): Promise<boolean> {
    if (this.polling) return false;
    this.polling = true;
    try {
      const since = this.state.layout ? this.state.version : undefined;
      const doc = await this.api.layout(since);
      const changed = this.state.applyLayout(doc);
      if (changed && this.ghost && this.state.version >= this.ghostUntilVersion) {
        this.ghost = null;
        this.state.notify();
      }
      return changed;
    } catch (err) {
      this.onError(err);
      return false;
    } finally {
      this.polling = false;
    }
  }

  async refreshConcepts(): Promise<void> {
    try {
      const res = await this.api.listConcepts();
      this.state.setConcepts(res.concepts);
    } catch (err) {
      this.onError(err);
    }
  }

  // ----- hit testing ----------------------------------------------

  private nodeSide(id: string, kind: string): number {
    if (kind === "concept") return CONCEPT_SIDE;
    return this.state.finderClipIds.has(id) ? CLIP_SIDE * FINDER_SCALE : CLIP_SIDE;
  }

  /** Topmost node whose square covers the screen point; concepts win. */
  hitNode(sx: number, sy: number): { id: string; kind: string } | null {
    const layout = this.state.layout;
    if (!layout) return null;
    let best: { id: string; kind: string } | null = null;
    for (const [id, node] of Object.entries(layout.nodes)) {
      const ghosted = this.ghost && this.ghost.id === id ? this.ghost : null;
      const s = this.viewport.toScreen(ghosted ?? node);
      const half = this.nodeSide(id, node.kind) / 2;
      if (Math.abs(sx - s.x) <= half && Math.abs(sy - s.y) <= half) {
        if (node.kind === "concept") return { id, kind: node.kind };
        best = best ?? { id, kind: node.kind };
      }
    }
    return best;
  }

  private hitFinder(sx: number, sy: number): "rim" | "inside" | null {
    const lens = this.state.finder;
    if (!lens) return null;
    const center = this.viewport.toScreen(lens);
    const dist = Math.hypot(sx - center.x, sy - center.y);
    const rPx = lens.r * this.viewport.zoom;
    if (Math.abs(dist - rPx) <= RIM_GRAB) return "rim";
    if (dist < rPx) return "inside";
    return null;
  }

  // ----- pointer gestures -----------------------------------------

  pointerDown(sx: number, sy: number): void {
    const rim = this.hitFinder(sx, sy);
    if (rim === "rim") {
      this.drag = { kind: "finder-resize" };
      return;
    }
    const hit = this.hitNode(sx, sy);
    if (hit && hit.kind === "concept") {
      this.drag = { kind: "concept", id: hit.id, downX: sx, downY: sy, moved: false };
      return;
    }
    if (hit) {
      this.drag = { kind: "clip", id: hit.id, downX: sx, downY: sy };
      return;
    }
    if (rim === "inside") {
      const center = this.viewport.toScreen(this.state.finder!);
      this.drag = { kind: "finder-move", offsetX: sx - center.x, offsetY: sy - center.y };
      return;
    }
    this.drag = { kind: "pan", lastX: sx, lastY: sy };
  }

  pointerMove(sx: number, sy: number): void {
    const drag = this.drag;
    switch (drag.kind) {
      case "pan": {
        this.viewport.panBy(sx - drag.lastX, sy - drag.lastY);
        drag.lastX = sx;
        drag.lastY = sy;
        this.state.notify();
        break;
      }
      case "concept": {
        if (!drag.moved && Math.hypot(sx - drag.downX, sy - drag.downY) <= CLICK_SLOP) {
          break;
        }
        drag.moved = true;
        const p = this.viewport.toLayout({ x: sx, y: sy });
        this.ghost = { id: drag.id, x: p.x, y: p.y };
        this.state.notify();
        break;
      }
      case "finder-move": {
        const p = this.viewport.toLayout({ x: sx - drag.offsetX, y: sy - drag.offsetY });
        this.moveFinder(p.x, p.y);
        break;
      }
      case "finder-resize": {
        const lens = this.state.finder;
        if (!lens) break;
        const center = this.viewport.toScreen(lens);
        const rPx = Math.max(Math.hypot(sx - center.x, sy - center.y), 2);
        this.resizeFinder(rPx / this.viewport.zoom);
        break;
      }
      default:
        break;
    }
  }

  pointerUp(sx: number, sy: number): void {
    const drag = this.drag;
    this.drag = { kind: "none" };
    switch (drag.kind) {
      case "concept": {
        if (!drag.moved) {
          this.state.startDraft(drag.id);
          break;
        }
        const p = this.viewport.toLayout({ x: sx, y: sy });
        this.ghost = { id: drag.id, x: p.x, y: p.y };
        this.state.notify();
        void this.positionQueue.push({ id: drag.id, x: p.x, y: p.y });
        break;
      }
      case "clip": {
        if (Math.hypot(sx - drag.downX, sy - drag.downY) <= CLICK_SLOP) {
          void this.selectClip(drag.id);
        }
        break;
      }
      default:
        break;
    }
  }

  wheel(deltaY: number, sx: number, sy: number): void {
    this.viewport.zoomAround(Math.exp(-deltaY * 0.0015), sx, sy);
    this.state.notify();
  }

  // ----- finder ---------------------------------------------------

  /** Place (or move) the lens at a screen point, keeping its radius. */
  placeFinderAt(sx: number, sy: number): void {
    const p = this.viewport.toLayout({ x: sx, y: sy });
    const r = this.state.finder ? this.state.finder.r : 80 / this.viewport.zoom;
    this.state.finder = { x: p.x, y: p.y, r };
    this.state.notify();
    void this.finderQueue.push({ x: p.x, y: p.y, r });
  }

  moveFinder(x: number, y: number): void {
    const lens = this.state.finder;
    if (!lens) return;
    this.state.finder = { x, y, r: lens.r };
    this.state.notify();
    void this.finderQueue.push({ x, y, r: lens.r });
  }

  resizeFinder(r: number): void {
    const lens = this.state.finder;
    if (!lens || !(r > 0)) return;
    this.state.finder = { x: lens.x, y: lens.y, r };
    this.state.notify();
    void this.finderQueue.push({ x: lens.x, y: lens.y, r });
  }

  dismissFinder(): void {
    this.state.finder = null;
    this.state.finderClipIds = new Set();
    if (this.state.detailsMode === "finder") {
      this.state.setDetails("search", []);
    } else {
      this.state.notify();
    }
  }

  // ----- details panel --------------------------------------------

  async search(q: string): Promise<void> {
    this.state.searchQuery = q;
    try {
      const res = await this.api.search(q);
      this.state.selectedClipId = null;
      this.state.setDetails("search", res.results);
    } catch (err) {
      this.onError(err);
    }
  }

  /** Show the clip atop its most similar clips. */
  async selectClip(clipId: string): Promise<void> {
    try {
      const node = this.state.node(clipId);
      const cards = [];
      if (node && node.page_id) {
        const page = await this.api.pageDetail(node.page_id);
        const clip = page.clips.find((c) => c.id === clipId);
        if (clip) cards.push({ page: page.page, clips: [clip] });
      }
      const similar = await this.api.similar(clipId);
      cards.push(...similar.results);
      this.state.selectedClipId = clipId;
      this.state.setDetails("similar", cards);
    } catch (err) {
      this.onError(err);
    }
  }

  // ----- concept operations ---------------------------------------

  /** POST a new concept or PATCH the edited one from the draft. */
  async commitDraft(): Promise<ConceptEnvelope | null> {
    const draft = this.state.draft;
    if (!draft || !draft.name.trim() || draft.members.length === 0) return null;
    try {
      let envelope: ConceptEnvelope;
      if (draft.conceptId === null) {
        const members: MemberSpec[] = draft.members.map((m) => ({
          clip_id: m.clip_id,
          stars: m.stars,
        }));
        envelope = await this.api.createConcept(draft.name.trim(), members);
      } else {
        const before = this.state.concept(draft.conceptId);
        const patch: Parameters<ApiClient["patchConcept"]>[1] = {};
        if (before && draft.name.trim() !== before.name) patch.name = draft.name.trim();
        const beforeIds = new Map((before ? before.members : []).map((m) => [m.clip_id, m.stars]));
        const add = draft.members
          .filter((m) => !beforeIds.has(m.clip_id))
          .map((m) => ({ clip_id: m.clip_id, stars: m.stars }));
        const draftIds = new Set(draft.members.map((m) => m.clip_id));
        const remove = [...beforeIds.keys()].filter((id) => !draftIds.has(id));
        const restar: Record<string, number> = {};
        for (const m of draft.members) {
          const old = beforeIds.get(m.clip_id);
          if (old !== undefined && old !== m.stars) restar[m.clip_id] = m.stars;
        }
        if (add.length) patch.add = add;
        if (remove.length) patch.remove = remove;
        if (Object.keys(restar).length) patch.restar = restar;
        envelope = await this.api.patchConcept(draft.conceptId, patch);
      }
      this.state.clearDraft();
      await this.refreshConcepts();
      await this.pollNow();
      return envelope;
    } catch (err) {
      this.onError(err);
      return null;
    }
  }

  /** Card dragged from the Details panel onto an existing concept. */
  async dropClipOnConcept(conceptId: string, clipId: string): Promise<void> {
    try {
      await this.api.patchConcept(conceptId, { add: [{ clip_id: clipId, stars: 1 }] });
      await this.refreshConcepts();
      await this.pollNow();
    } catch (err) {
      this.onError(err);
    }
  }

  async toggleVisibility(conceptId: string): Promise<void> {
    const concept = this.state.concept(conceptId);
    if (!concept) return;
    try {
      await this.api.setVisibility(conceptId, !concept.visible);
      await this.refreshConcepts();
      await this.pollNow();
    } catch (err) {
      this.onError(err);
    }
  }

  async setConceptColor(conceptId: string, color: Rgb): Promise<void> {
    try {
      await this.api.setColor(conceptId, color);
      await this.refreshConcepts();
      await this.pollNow();
    } catch (err) {
      this.onError(err);
    }
  }

  async deleteConcept(conceptId: string): Promise<void> {
    try {
      await this.api.deleteConcept(conceptId);
      if (this.state.draft?.conceptId === conceptId) this.state.clearDraft();
      await this.refreshConcepts();
      await this.pollNow();
    } catch (err) {
      this.onError(err);
    }
  }
}
