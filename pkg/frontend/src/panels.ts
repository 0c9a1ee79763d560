/** Details and Concept panels.
 *
 * The Details panel lists page cards for whichever source is active:
 * finder overlap, keyword search, or a selected clip atop its
 * similars. Clip cards are draggable; dropping one on the Concept
 * panel's draft zone or on an existing concept row adds it there.
 * The Concept panel lists concepts with eye toggle and color swatch
 * and hosts the draft editor.
 */

import { MapController } from "./controller.js";
import { SceneState } from "./state.js";
import { cssColor } from "./render.js";
import type { ClipDoc, PageCard, Rgb } from "./types.js";

const DRAG_MIME = "application/x-clip-id";

const SWATCHES: Rgb[] = [
  [214, 102, 65],
  [65, 143, 214],
  [92, 171, 94],
  [171, 92, 171],
  [214, 174, 61],
  [65, 196, 190],
  [214, 65, 143],
  [120, 120, 200],
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function clipCard(clip: ClipDoc, state: SceneState): HTMLElement {
  const card = el("div", "clip-card");
  card.draggable = true;
  card.dataset["clipId"] = clip.id;
  card.addEventListener("dragstart", (ev) => {
    ev.dataTransfer?.setData(DRAG_MIME, clip.id);
  });
  const swatch = el("span", "clip-swatch");
  swatch.style.background = cssColor(clip.color);
  card.append(swatch);
  const body = el("div", "clip-body");
  const text = el("div", "clip-text", clip.text);
  body.append(text);
  const meta = el("div", "clip-meta");
  if (clip.kind !== "extracted") meta.append(el("span", "clip-kind", clip.kind));
  if (clip.similarity !== undefined) {
    meta.append(el("span", "clip-sim", clip.similarity.toFixed(3)));
  }
  if (clip.keywords.length) meta.append(el("span", "clip-keywords", clip.keywords.join(", ")));
  body.append(meta);
  card.append(body);
  if (clip.id === state.selectedClipId) card.classList.add("selected");
  return card;
}

export class DetailsPanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly state: SceneState,
    private readonly controller: MapController,
  ) {
    state.onChange(() => this.render());
  }

  render(): void {
    const { state, root } = this;
    root.textContent = "";
    const heading =
      state.detailsMode === "finder"
        ? "Clips under the Finder"
        : state.detailsMode === "similar"
          ? "Selected clip and similars"
          : state.searchQuery
            ? `Results for "${state.searchQuery}"`
            : "Search or drop the Finder to see clips";
    root.append(el("h2", "panel-title", heading));
    for (const card of state.details) {
      root.append(this.pageCard(card));
    }
    if (state.details.length === 0 && (state.detailsMode !== "search" || state.searchQuery)) {
      root.append(el("p", "panel-empty", "No clips here."));
    }
  }

  private pageCard(card: PageCard): HTMLElement {
    const box = el("div", "page-card");
    const head = el("div", "page-head");
    const link = el("a", "page-title", card.page.title ?? card.page.url);
    link.href = card.page.url;
    link.target = "_blank";
    link.rel = "noopener";
    head.append(link);
    if (card.page.visited_at) {
      head.append(el("span", "page-visited", new Date(card.page.visited_at).toLocaleString()));
    }
    box.append(head);
    for (const clip of card.clips) {
      const node = clipCard(clip, this.state);
      node.addEventListener("click", () => void this.controller.selectClip(clip.id));
      box.append(node);
    }
    return box;
  }
}

export class ConceptPanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly state: SceneState,
    private readonly controller: MapController,
  ) {
    state.onChange(() => this.render());
  }

  render(): void {
    const { state, root, controller } = this;
    root.textContent = "";
    root.append(el("h2", "panel-title", "Concepts"));

    for (const concept of state.concepts) {
      const row = el("div", "concept-row");
      if (!concept.visible) row.classList.add("hidden-concept");
      const swatch = el("span", "concept-swatch");
      swatch.style.background = cssColor(concept.color);
      swatch.title = "Cycle color";
      swatch.addEventListener("click", () => {
        const idx = SWATCHES.findIndex(
          (c) => c[0] === concept.color[0] && c[1] === concept.color[1] && c[2] === concept.color[2],
        );
        const next = SWATCHES[(idx + 1) % SWATCHES.length]!;
        void controller.setConceptColor(concept.id, next);
      });
      row.append(swatch);
      const name = el("span", "concept-name", concept.name);
      name.addEventListener("click", () => state.startDraft(concept.id));
      row.append(name);
      row.append(el("span", "concept-count", `${concept.members.length}`));
      const eye = el("button", "eye-toggle", concept.visible ? "\u{1F441}" : "\u{1F441}\u{200D}\u{1F5E8}");
      eye.title = concept.visible ? "Hide from map" : "Show on map";
      eye.addEventListener("click", () => void controller.toggleVisibility(concept.id));
      row.append(eye);
      row.addEventListener("dragover", (ev) => ev.preventDefault());
      row.addEventListener("drop", (ev) => {
        ev.preventDefault();
        const clipId = ev.dataTransfer?.getData(DRAG_MIME);
        if (clipId) void controller.dropClipOnConcept(concept.id, clipId);
      });
      root.append(row);
    }

    root.append(this.draftEditor());
  }

  private draftEditor(): HTMLElement {
    const { state, controller } = this;
    const box = el("div", "draft-editor");
    if (!state.draft) {
      const start = el("button", "draft-start", "New concept");
      start.addEventListener("click", () => state.startDraft());
      box.append(start);
      return box;
    }
    const draft = state.draft;
    box.append(el("h3", "panel-title", draft.conceptId ? "Edit concept" : "New concept"));
    const name = el("input", "draft-name") as HTMLInputElement;
    name.placeholder = "Concept name";
    name.value = draft.name;
    name.addEventListener("input", () => {
      draft.name = name.value;
    });
    box.append(name);

    const zone = el("div", "drop-zone", "Drag clip cards here");
    zone.addEventListener("dragover", (ev) => {
      ev.preventDefault();
      zone.classList.add("over");
    });
    zone.addEventListener("dragleave", () => zone.classList.remove("over"));
    zone.addEventListener("drop", (ev) => {
      ev.preventDefault();
      zone.classList.remove("over");
      const clipId = ev.dataTransfer?.getData(DRAG_MIME);
      if (clipId) state.dropOnDraft(clipId);
    });
    box.append(zone);

    for (const member of draft.members) {
      const row = el("div", "draft-member");
      row.append(el("span", "draft-clip", member.clip_id));
      const stars = el("span", "star-row");
      for (let s = 1; s <= 3; s++) {
        const star = el("button", "star", s <= member.stars ? "★" : "☆");
        star.addEventListener("click", () => state.setDraftStars(member.clip_id, s));
        stars.append(star);
      }
      row.append(stars);
      const drop = el("button", "draft-remove", "×");
      drop.addEventListener("click", () => state.removeFromDraft(member.clip_id));
      row.append(drop);
      box.append(row);
    }

    const actions = el("div", "draft-actions");
    const save = el("button", "draft-save", draft.conceptId ? "Save changes" : "Create");
    save.addEventListener("click", () => void controller.commitDraft());
    actions.append(save);
    const cancel = el("button", "draft-cancel", "Cancel");
    cancel.addEventListener("click", () => state.clearDraft());
    actions.append(cancel);
    if (draft.conceptId) {
      const remove = el("button", "draft-delete", "Delete concept");
      remove.addEventListener("click", () => void controller.deleteConcept(draft.conceptId!));
      actions.append(remove);
    }
    box.append(actions);
    return box;
  }
}
