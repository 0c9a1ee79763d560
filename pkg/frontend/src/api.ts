/** Thin typed client over the clipmap REST routes.
 *
 * Every method is one request; no caching, no retries, no client-side
 * state. Error responses become ApiError with the server's detail text
 * so panels can surface it verbatim.
 */

import type {
  ConceptDetail,
  ConceptDoc,
  ConceptEnvelope,
  InfoDoc,
  LayoutDoc,
  MemberSpec,
  PageCard,
  PageCreated,
  PageIn,
  Rgb,
  SearchPage,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.status = status;
    this.detail = detail;
  }
}

async function parse<T>(res: Response): Promise<T> {
  if (res.status === 204) {
    return null as T;
  }
  const body = await res.json().catch(() => null);
  if (!res.ok) {
    throw new ApiError(res.status, body && typeof body === "object" && "detail" in body ? (body as { detail: unknown }).detail : body);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return this.fetchFn(this.base + path, init).then((res) => parse<T>(res));
  }

  info(): Promise<InfoDoc> {
    return this.call("GET", "/info");
  }

  createPage(page: PageIn): Promise<PageCreated> {
    return this.call("POST", "/pages", page);
  }

  pageDetail(pageId: string): Promise<{ page: PageCard["page"]; clips: PageCard["clips"] }> {
    return this.call("GET", `/pages/${encodeURIComponent(pageId)}`);
  }

  addNote(pageId: string, text: string): Promise<{ clip: PageCard["clips"][number]; layout_version: number }> {
    return this.call("POST", `/pages/${encodeURIComponent(pageId)}/notes`, { text });
  }

  search(q: string, cursor?: string, limit?: number): Promise<SearchPage> {
    const params = new URLSearchParams({ q });
    if (cursor) params.set("cursor", cursor);
    if (limit !== undefined) params.set("limit", String(limit));
    return this.call("GET", `/clips?${params}`);
  }

  similar(clipId: string, limit = 10): Promise<{ results: PageCard[] }> {
    return this.call("GET", `/clips/${encodeURIComponent(clipId)}/similar?limit=${limit}`);
  }

  listConcepts(): Promise<{ concepts: ConceptDoc[] }> {
    return this.call("GET", "/concepts");
  }

  conceptDetail(conceptId: string): Promise<ConceptDetail> {
    return this.call("GET", `/concepts/${encodeURIComponent(conceptId)}`);
  }

  createConcept(name: string, members: MemberSpec[]): Promise<ConceptEnvelope> {
    return this.call("POST", "/concepts", { name, members });
  }

  patchConcept(
    conceptId: string,
    patch: { name?: string; add?: MemberSpec[]; remove?: string[]; restar?: Record<string, number> },
  ): Promise<ConceptEnvelope> {
    return this.call("PATCH", `/concepts/${encodeURIComponent(conceptId)}`, patch);
  }

  deleteConcept(conceptId: string): Promise<{ layout_version: number }> {
    return this.call("DELETE", `/concepts/${encodeURIComponent(conceptId)}`);
  }

  setPosition(conceptId: string, x: number, y: number): Promise<{ layout_version: number }> {
    return this.call("PUT", `/concepts/${encodeURIComponent(conceptId)}/position`, { x, y });
  }

  setVisibility(conceptId: string, visible: boolean): Promise<{ layout_version: number }> {
    return this.call("PUT", `/concepts/${encodeURIComponent(conceptId)}/visibility`, { visible });
  }

  setColor(conceptId: string, color: Rgb): Promise<{ layout_version: number }> {
    return this.call("PUT", `/concepts/${encodeURIComponent(conceptId)}/color`, { color });
  }

  /** Returns null when the server answers 204 (nothing newer than since). */
  layout(since?: number): Promise<LayoutDoc | null> {
    const suffix = since === undefined ? "" : `?since=${since}`;
    return this.call("GET", `/layout${suffix}`);
  }

  finder(x: number, y: number, r: number): Promise<{ results: PageCard[] }> {
    return this.call("GET", `/finder?x=${x}&y=${y}&r=${r}`);
  }
}
