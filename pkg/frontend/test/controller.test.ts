import { describe, expect, it } from "vitest";

import type { ApiClient } from "../src/api.js";
import { LatestWins, MapController } from "../src/controller.js";
import { SceneState } from "../src/state.js";
import { Viewport } from "../src/transform.js";
import type { ConceptDoc, LayoutDoc } from "../src/types.js";

function layoutDoc(version: number, nodes: Record<string, [number, number, string]>): LayoutDoc {
  const out: LayoutDoc["nodes"] = {};
  for (const [id, [x, y, kind]] of Object.entries(nodes)) {
    out[id] = {
      x,
      y,
      kind: kind as LayoutDoc["nodes"][string]["kind"],
      color: [148, 148, 148],
      page_id: kind === "concept" ? null : "p1",
      label: id,
    };
  }
  return { version, bounds: [-10, -10, 10, 10], converged: true, nodes: out };
}

interface Call {
  method: string;
  args: unknown[];
}

class FakeApi {
  calls: Call[] = [];
  nextLayout: LayoutDoc | null = null;
  /** When set, setPosition resolves only when the gate opens. */
  positionGate: Promise<void> | null = null;
  finderGate: Promise<void> | null = null;

  private log(method: string, ...args: unknown[]) {
    this.calls.push({ method, args });
  }

  of(method: string): Call[] {
    return this.calls.filter((c) => c.method === method);
  }

  async setPosition(id: string, x: number, y: number) {
    this.log("setPosition", id, x, y);
    if (this.positionGate) await this.positionGate;
    return { layout_version: 99 };
  }

  async finder(x: number, y: number, r: number) {
    this.log("finder", x, y, r);
    if (this.finderGate) await this.finderGate;
    return { results: [] };
  }

  async layout(since?: number) {
    this.log("layout", since);
    return this.nextLayout;
  }

  async listConcepts() {
    this.log("listConcepts");
    return { concepts: [] as ConceptDoc[] };
  }

  async createConcept(name: string, members: unknown[]) {
    this.log("createConcept", name, members);
    return {
      concept: {
        id: "k0000001",
        name,
        members,
        position: [0, 0],
        visible: true,
        color: [1, 2, 3],
        revision: 1,
      },
      layout_version: 5,
    };
  }

  async patchConcept(id: string, patch: unknown) {
    this.log("patchConcept", id, patch);
    return { concept: {}, layout_version: 6 };
  }

  async deleteConcept(id: string) {
    this.log("deleteConcept", id);
    return { layout_version: 7 };
  }

  async setVisibility(id: string, visible: boolean) {
    this.log("setVisibility", id, visible);
    return { layout_version: 8 };
  }

  async setColor(id: string, color: unknown) {
    this.log("setColor", id, color);
    return { layout_version: 9 };
  }

  async pageDetail(pageId: string) {
    this.log("pageDetail", pageId);
    return {
      page: { id: pageId, url: "https://example.com", title: "t", visited_at: null },
      clips: [
        { id: "c1", text: "x", kind: "extracted", page_id: pageId, keywords: [], color: [1, 1, 1] },
      ],
    };
  }

  async similar(clipId: string) {
    this.log("similar", clipId);
    return { results: [] };
  }

  async search(q: string) {
    this.log("search", q);
    return { results: [], next_cursor: null };
  }
}

function setup(nodes: Record<string, [number, number, string]>) {
  const api = new FakeApi();
  const state = new SceneState();
  state.applyLayout(layoutDoc(1, nodes));
  const viewport = new Viewport(10, 0, 0);
  const controller = new MapController(api as unknown as ApiClient, state, viewport);
  return { api, state, viewport, controller };
}

function gate() {
  let open!: () => void;
  const promise = new Promise<void>((res) => (open = res));
  return { promise, open };
}

describe("concept dragging", () => {
  it("a drop issues exactly one position update in layout coordinates", async () => {
    const { api, controller } = setup({ k1: [2, 1, "concept"], c1: [0, 0, "extracted"] });
    controller.pointerDown(20, -10);
    controller.pointerMove(60, 30);
    controller.pointerMove(100, 50);
    controller.pointerUp(100, 50);
    await controller.flush();
    const puts = api.of("setPosition");
    expect(puts).toHaveLength(1);
    expect(puts[0]!.args).toEqual(["k1", 10, -5]);
  });

  it("dragging a clip never issues a position update", async () => {
    const { api, controller } = setup({ c1: [0, 0, "extracted"] });
    controller.pointerDown(0, 0);
    controller.pointerMove(50, 50);
    controller.pointerUp(50, 50);
    await controller.flush();
    expect(api.of("setPosition")).toHaveLength(0);
    expect(api.of("similar")).toHaveLength(0);
  });

  it("clicking a clip selects it and fetches its similars", async () => {
    const { api, controller } = setup({ c1: [0, 0, "extracted"] });
    controller.pointerDown(0, 0);
    controller.pointerUp(1, 1);
    await new Promise((res) => setTimeout(res, 0));
    expect(api.of("similar")).toHaveLength(1);
    expect(api.of("pageDetail")).toHaveLength(1);
    expect(api.of("setPosition")).toHaveLength(0);
  });

  it("rapid drops coalesce: only the first and the latest reach the server", async () => {
    const { api, controller } = setup({ k1: [2, 1, "concept"] });
    const g = gate();
    api.positionGate = g.promise;

    const drop = (fromX: number, fromY: number, toX: number, toY: number) => {
      controller.pointerDown(fromX, fromY);
      controller.pointerMove(toX, toY);
      controller.pointerUp(toX, toY);
    };
    drop(20, -10, 100, 50);
    drop(100, 50, 200, 50);
    drop(200, 50, 300, 50);

    expect(api.of("setPosition")).toHaveLength(1);
    g.open();
    await controller.flush();

    const puts = api.of("setPosition");
    expect(puts).toHaveLength(2);
    expect(puts[0]!.args).toEqual(["k1", 10, -5]);
    expect(puts[1]!.args).toEqual(["k1", 30, -5]);
  });

  it("a ghost pins the square at the drop point until the layout catches up", async () => {
    const { api, controller, state } = setup({ k1: [2, 1, "concept"] });
    controller.pointerDown(20, -10);
    controller.pointerMove(100, 50);
    controller.pointerUp(100, 50);
    expect(controller.ghost).toEqual({ id: "k1", x: 10, y: -5 });
    api.nextLayout = layoutDoc(99, { k1: [10, -5, "concept"] });
    await controller.flush();
    await controller.pollNow();
    expect(controller.ghost).toBeNull();
    expect(state.node("k1")!.x).toBe(10);
  });
});

describe("finder gestures", () => {
  it("placing and resizing query the server with layout-space geometry", async () => {
    const { api, controller } = setup({ c1: [0, 0, "extracted"] });
    controller.placeFinderAt(0, 0);
    await controller.flush();
    controller.resizeFinder(12.5);
    await controller.flush();
    const calls = api.of("finder");
    expect(calls).toHaveLength(2);
    expect(calls[0]!.args).toEqual([0, 0, 8]);
    expect(calls[1]!.args).toEqual([0, 0, 12.5]);
  });

  it("rapid resizes coalesce to the newest radius", async () => {
    const { api, controller } = setup({ c1: [0, 0, "extracted"] });
    const g = gate();
    api.finderGate = g.promise;
    controller.placeFinderAt(0, 0);
    controller.resizeFinder(9);
    controller.resizeFinder(10);
    controller.resizeFinder(11);
    g.open();
    await controller.flush();
    const calls = api.of("finder");
    expect(calls).toHaveLength(2);
    expect(calls[1]!.args).toEqual([0, 0, 11]);
  });

  it("growing the radius keeps the center fixed", async () => {
    const { api, controller } = setup({});
    controller.placeFinderAt(35, -42);
    controller.resizeFinder(20);
    await controller.flush();
    const calls = api.of("finder");
    expect(calls[1]!.args[0]).toBeCloseTo(3.5, 9);
    expect(calls[1]!.args[1]).toBeCloseTo(4.2, 9);
    expect(calls[1]!.args[2]).toBe(20);
  });
});

describe("concept panel actions", () => {
  it("committing a new draft posts name and members verbatim", async () => {
    const { api, controller, state } = setup({});
    state.startDraft();
    state.draft!.name = "foods";
    state.dropOnDraft("c1");
    state.dropOnDraft("c2");
    state.setDraftStars("c1", 3);
    const envelope = await controller.commitDraft();
    expect(envelope).not.toBeNull();
    const posts = api.of("createConcept");
    expect(posts).toHaveLength(1);
    expect(posts[0]!.args).toEqual([
      "foods",
      [
        { clip_id: "c1", stars: 3 },
        { clip_id: "c2", stars: 1 },
      ],
    ]);
    expect(state.draft).toBeNull();
  });

  it("an empty draft refuses to commit", async () => {
    const { api, controller, state } = setup({});
    state.startDraft();
    state.draft!.name = "foods";
    expect(await controller.commitDraft()).toBeNull();
    expect(api.of("createConcept")).toHaveLength(0);
  });

  it("editing sends only the difference as a patch", async () => {
    const { api, controller, state } = setup({});
    state.setConcepts([
      {
        id: "k1",
        name: "foods",
        members: [
          { clip_id: "c1", stars: 2 },
          { clip_id: "c2", stars: 1 },
        ],
        position: [0, 0],
        visible: true,
        color: [1, 2, 3],
        revision: 1,
      },
    ]);
    state.startDraft("k1");
    state.draft!.name = "renamed";
    state.removeFromDraft("c2");
    state.dropOnDraft("c3");
    state.setDraftStars("c1", 1);
    await controller.commitDraft();
    const patches = api.of("patchConcept");
    expect(patches).toHaveLength(1);
    expect(patches[0]!.args).toEqual([
      "k1",
      {
        name: "renamed",
        add: [{ clip_id: "c3", stars: 1 }],
        remove: ["c2"],
        restar: { c1: 1 },
      },
    ]);
  });

  it("dropping a details card on a concept row adds the clip at one star", async () => {
    const { api, controller } = setup({});
    await controller.dropClipOnConcept("k1", "c7");
    const patches = api.of("patchConcept");
    expect(patches).toHaveLength(1);
    expect(patches[0]!.args).toEqual(["k1", { add: [{ clip_id: "c7", stars: 1 }] }]);
  });

  it("the eye toggle flips visibility through the API", async () => {
    const { api, controller, state } = setup({});
    state.setConcepts([
      {
        id: "k1",
        name: "foods",
        members: [{ clip_id: "c1", stars: 1 }],
        position: [0, 0],
        visible: true,
        color: [1, 2, 3],
        revision: 1,
      },
    ]);
    await controller.toggleVisibility("k1");
    expect(api.of("setVisibility")[0]!.args).toEqual(["k1", false]);
  });
});

describe("polling", () => {
  it("passes the held version as since and accepts a 204 quietly", async () => {
    const { api, controller, state } = setup({ c1: [0, 0, "extracted"] });
    await controller.pollNow();
    expect(api.of("layout")[0]!.args).toEqual([1]);
    expect(state.version).toBe(1);
    api.nextLayout = layoutDoc(2, { c1: [1, 1, "extracted"] });
    await controller.pollNow();
    expect(state.version).toBe(2);
  });
});

describe("LatestWins", () => {
  it("never drops the newest value under load", async () => {
    const seen: number[] = [];
    let release!: () => void;
    const first = new Promise<void>((res) => (release = res));
    const queue = new LatestWins<number>(async (v) => {
      seen.push(v);
      if (seen.length === 1) await first;
    });
    void queue.push(1);
    void queue.push(2);
    void queue.push(3);
    void queue.push(4);
    release();
    await queue.idle();
    expect(seen).toEqual([1, 4]);
  });
});
