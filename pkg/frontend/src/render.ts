/** Canvas renderer for the Concept Map scene.
 *
 * Draws straight from SceneState through the Viewport: concepts as
 * large colored squares with labels, clips as small squares in their
 * server-assigned colors, and the Finder as a circle that enlarges
 * the clips inside it. Position changes tween briefly so drops read
 * as motion instead of teleports.
 */

import { CLIP_SIDE, CONCEPT_SIDE, FINDER_SCALE, MapController } from "./controller.js";
import { SceneState } from "./state.js";
import { Viewport } from "./transform.js";
import type { Rgb } from "./types.js";

const TWEEN_MS = 200;
const BACKGROUND = "#faf9f6";
const LABEL_FONT = "12px system-ui, sans-serif";

export function cssColor(color: Rgb, alpha = 1): string {
  const [r, g, b] = color;
  return `rgba(${r}, ${g}, ${b}, ${alpha})`;
}

/** Side length of a node's square, honoring finder enlargement. */
export function nodeSide(kind: string, underFinder: boolean): number {
  if (kind === "concept") return CONCEPT_SIDE;
  return underFinder ? CLIP_SIDE * FINDER_SCALE : CLIP_SIDE;
}

interface Tween {
  fromX: number;
  fromY: number;
  toX: number;
  toY: number;
  start: number;
}

export class CanvasRenderer {
  private readonly ctx: CanvasRenderingContext2D;
  private tweens = new Map<string, Tween>();
  private shown = new Map<string, { x: number; y: number }>();
  private raf = 0;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly state: SceneState,
    private readonly viewport: Viewport,
    private readonly controller: MapController,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
    state.onChange(() => this.scheduleDraw());
  }

  scheduleDraw(): void {
    if (this.raf) return;
    this.raf = requestAnimationFrame(() => {
      this.raf = 0;
      this.draw();
    });
  }

  private targetFor(id: string, now: number): { x: number; y: number } {
    const node = this.state.layout!.nodes[id]!;
    const ghost = this.controller.ghost;
    if (ghost && ghost.id === id) {
      this.tweens.delete(id);
      return { x: ghost.x, y: ghost.y };
    }
    const prev = this.shown.get(id);
    if (prev && (prev.x !== node.x || prev.y !== node.y)) {
      const tween = this.tweens.get(id);
      if (!tween || tween.toX !== node.x || tween.toY !== node.y) {
        this.tweens.set(id, { fromX: prev.x, fromY: prev.y, toX: node.x, toY: node.y, start: now });
      }
    }
    const tween = this.tweens.get(id);
    if (tween) {
      const t = Math.min((now - tween.start) / TWEEN_MS, 1);
      if (t >= 1) {
        this.tweens.delete(id);
        return { x: node.x, y: node.y };
      }
      const ease = t * (2 - t);
      return {
        x: tween.fromX + (tween.toX - tween.fromX) * ease,
        y: tween.fromY + (tween.toY - tween.fromY) * ease,
      };
    }
    return { x: node.x, y: node.y };
  }

  draw(): void {
    const { canvas, ctx, state, viewport } = this;
    const now = performance.now();
    ctx.fillStyle = BACKGROUND;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!state.layout) return;

    const entries = Object.entries(state.layout.nodes);
    const clips = entries.filter(([, n]) => n.kind !== "concept");
    const concepts = entries.filter(([, n]) => n.kind === "concept");

    for (const [id, node] of clips) {
      const pos = this.targetFor(id, now);
      this.shown.set(id, pos);
      const s = viewport.toScreen(pos);
      const side = nodeSide(node.kind, state.finderClipIds.has(id));
      ctx.fillStyle = cssColor(node.color);
      ctx.fillRect(s.x - side / 2, s.y - side / 2, side, side);
      if (id === state.selectedClipId) {
        ctx.strokeStyle = "#1a1a1a";
        ctx.lineWidth = 2;
        ctx.strokeRect(s.x - side / 2 - 2, s.y - side / 2 - 2, side + 4, side + 4);
      }
    }

    for (const [id, node] of concepts) {
      const pos = this.targetFor(id, now);
      this.shown.set(id, pos);
      const s = viewport.toScreen(pos);
      ctx.fillStyle = cssColor(node.color);
      ctx.fillRect(s.x - CONCEPT_SIDE / 2, s.y - CONCEPT_SIDE / 2, CONCEPT_SIDE, CONCEPT_SIDE);
      ctx.strokeStyle = "rgba(0, 0, 0, 0.35)";
      ctx.lineWidth = 1.5;
      ctx.strokeRect(s.x - CONCEPT_SIDE / 2, s.y - CONCEPT_SIDE / 2, CONCEPT_SIDE, CONCEPT_SIDE);
      ctx.fillStyle = "#1a1a1a";
      ctx.font = LABEL_FONT;
      ctx.textAlign = "center";
      ctx.fillText(node.label, s.x, s.y - CONCEPT_SIDE / 2 - 6);
    }

    const dead = new Set(this.shown.keys());
    for (const [id] of entries) dead.delete(id);
    for (const id of dead) {
      this.shown.delete(id);
      this.tweens.delete(id);
    }

    const lens = state.finder;
    if (lens) {
      const c = viewport.toScreen(lens);
      const rPx = lens.r * viewport.zoom;
      ctx.beginPath();
      ctx.arc(c.x, c.y, rPx, 0, Math.PI * 2);
      ctx.strokeStyle = "rgba(30, 90, 190, 0.9)";
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.fillStyle = "rgba(30, 90, 190, 0.06)";
      ctx.fill();
    }

    if (this.tweens.size > 0) this.scheduleDraw();
  }
}
