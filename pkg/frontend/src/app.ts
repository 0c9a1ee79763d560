/** Wires the map canvas, panels, and polling loop to a server.
 *
 * The server base URL defaults to same-origin and can be overridden
 * with ?server=http://host:port for a UI served from a file or a
 * different port during development.
 */

import { ApiClient } from "./api.js";
import { MapController } from "./controller.js";
import { ConceptPanel, DetailsPanel } from "./panels.js";
import { CanvasRenderer } from "./render.js";
import { SceneState } from "./state.js";
import { Viewport } from "./transform.js";

const POLL_MS = 750;

function serverBase(): string {
  const override = new URLSearchParams(window.location.search).get("server");
  return (override ?? window.location.origin).replace(/\/$/, "");
}

function sizeCanvas(canvas: HTMLCanvasElement): void {
  const rect = canvas.getBoundingClientRect();
  canvas.width = Math.max(1, Math.floor(rect.width));
  canvas.height = Math.max(1, Math.floor(rect.height));
}

export function boot(): void {
  const canvas = document.getElementById("map") as HTMLCanvasElement;
  const details = document.getElementById("details")!;
  const conceptBox = document.getElementById("concepts")!;
  const searchInput = document.getElementById("search") as HTMLInputElement;
  const status = document.getElementById("status")!;

  const api = new ApiClient(serverBase());
  const state = new SceneState();
  const viewport = new Viewport();
  const controller = new MapController(api, state, viewport);
  const renderer = new CanvasRenderer(canvas, state, viewport, controller);
  new DetailsPanel(details, state, controller);
  new ConceptPanel(conceptBox, state, controller);

  controller.onError = (err) => {
    status.textContent = err instanceof Error ? err.message : String(err);
    status.classList.add("error");
    window.setTimeout(() => {
      status.textContent = "";
      status.classList.remove("error");
    }, 4000);
  };

  sizeCanvas(canvas);
  window.addEventListener("resize", () => {
    sizeCanvas(canvas);
    renderer.scheduleDraw();
  });

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    controller.pointerDown(ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener("pointermove", (ev) => controller.pointerMove(ev.offsetX, ev.offsetY));
  canvas.addEventListener("pointerup", (ev) => controller.pointerUp(ev.offsetX, ev.offsetY));
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    controller.wheel(ev.deltaY, ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener("dblclick", (ev) => controller.placeFinderAt(ev.offsetX, ev.offsetY));
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape") controller.dismissFinder();
  });

  searchInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter" && searchInput.value.trim()) {
      void controller.search(searchInput.value.trim());
    }
  });

  void (async () => {
    await controller.pollNow();
    await controller.refreshConcepts();
    if (state.layout) {
      viewport.fitBounds(state.layout.bounds, canvas.width, canvas.height);
      renderer.scheduleDraw();
    }
    window.setInterval(() => void controller.pollNow(), POLL_MS);
  })();
}

boot();
