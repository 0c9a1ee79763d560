/** Client-side mirror of server state plus transient UI state.
 *
 * Nothing here is authoritative: the layout doc, concept list, and
 * panel contents are verbatim server responses, and a hard refresh
 * rebuilds the identical scene from the server alone. The only fields
 * that never touch the wire are the selection, the finder lens
 * geometry, and an in-progress concept draft.
 */

import type { ConceptDoc, LayoutDoc, LayoutNode, PageCard } from "./types.js";

export type DetailsMode = "finder" | "search" | "similar";

export interface FinderLens {
  x: number;
  y: number;
  r: number;
}

export interface DraftMember {
  clip_id: string;
  stars: number;
}

export interface ConceptDraft {
  /** Concept id when editing an existing concept, null for a new one. */
  conceptId: string | null;
  name: string;
  members: DraftMember[];
}

export class SceneState {
  layout: LayoutDoc | null = null;
  concepts: ConceptDoc[] = [];
  details: PageCard[] = [];
  detailsMode: DetailsMode = "search";
  searchQuery = "";
  selectedClipId: string | null = null;
  finder: FinderLens | null = null;
  /** Clip ids inside the finder, used to enlarge their squares. */
  finderClipIds: Set<string> = new Set();
  draft: ConceptDraft | null = null;

  private listeners: (() => void)[] = [];

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  notify(): void {
    for (const fn of this.listeners) fn();
  }

  get version(): number {
    return this.layout ? this.layout.version : -1;
  }

  /** Apply a poll result; null means 204 and the scene stays as is. */
  applyLayout(doc: LayoutDoc | null): boolean {
    if (doc === null) {
      return false;
    }
    this.layout = doc;
    if (this.finder) {
      this.pruneFinder();
    }
    this.notify();
    return true;
  }

  setConcepts(concepts: ConceptDoc[]): void {
    this.concepts = concepts;
    this.notify();
  }

  setDetails(mode: DetailsMode, cards: PageCard[]): void {
    this.detailsMode = mode;
    this.details = cards;
    this.notify();
  }

  setFinderResults(cards: PageCard[]): void {
    this.finderClipIds = new Set(cards.flatMap((c) => c.clips.map((clip) => clip.id)));
    this.setDetails("finder", cards);
  }

  /** Drop finder ids whose nodes left the current layout doc. */
  private pruneFinder(): void {
    if (!this.layout) return;
    const nodes = this.layout.nodes;
    this.finderClipIds = new Set([...this.finderClipIds].filter((id) => id in nodes));
  }

  node(id: string): LayoutNode | undefined {
    return this.layout?.nodes[id];
  }

  concept(id: string): ConceptDoc | undefined {
    return this.concepts.find((c) => c.id === id);
  }

  startDraft(conceptId: string | null = null): void {
    if (conceptId) {
      const existing = this.concept(conceptId);
      this.draft = {
        conceptId,
        name: existing ? existing.name : "",
        members: existing ? existing.members.map((m) => ({ ...m })) : [],
      };
    } else {
      this.draft = { conceptId: null, name: "", members: [] };
    }
    this.notify();
  }

  dropOnDraft(clipId: string): boolean {
    if (!this.draft) return false;
    if (this.draft.members.some((m) => m.clip_id === clipId)) return false;
    this.draft.members.push({ clip_id: clipId, stars: 1 });
    this.notify();
    return true;
  }

  setDraftStars(clipId: string, stars: number): boolean {
    const member = this.draft?.members.find((m) => m.clip_id === clipId);
    if (!member || stars < 1 || stars > 3) return false;
    member.stars = stars;
    this.notify();
    return true;
  }

  removeFromDraft(clipId: string): void {
    if (!this.draft) return;
    this.draft.members = this.draft.members.filter((m) => m.clip_id !== clipId);
    this.notify();
  }

  clearDraft(): void {
    this.draft = null;
    this.notify();
  }
}
