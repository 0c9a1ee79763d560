/** Wire types for the clipmap REST API. */

export type Rgb = [number, number, number];

export type ClipKind = "extracted" | "note" | "custom";

export interface PageDoc {
  id: string;
  url: string;
  title: string | null;
  visited_at: string | null;
}

export interface ClipDoc {
  id: string;
  text: string;
  kind: ClipKind;
  page_id: string | null;
  keywords: string[];
  color: Rgb;
  /** Present only in similar-clip results. */
  similarity?: number;
}

/** Details-panel grouping of clips under their source page. */
export interface PageCard {
  page: PageDoc;
  clips: ClipDoc[];
}

export interface SearchPage {
  results: PageCard[];
  next_cursor: string | null;
}

export interface ConceptMember {
  clip_id: string;
  stars: number;
}

export interface ConceptDoc {
  id: string;
  name: string;
  members: ConceptMember[];
  position: [number, number] | null;
  visible: boolean;
  color: Rgb;
  revision: number;
}

export type NodeKind = ClipKind | "concept";

export interface LayoutNode {
  x: number;
  y: number;
  kind: NodeKind;
  color: Rgb;
  page_id: string | null;
  label: string;
}

export interface LayoutDoc {
  version: number;
  bounds: [number, number, number, number];
  converged: boolean;
  nodes: Record<string, LayoutNode>;
}

export interface InfoDoc {
  provider: string;
  dimension: number;
  page_count: number;
  clip_count: number;
  concept_count: number;
  layout_version: number;
}

export interface PageCreated {
  page: PageDoc;
  created: boolean;
  clip_count: number;
  layout_version: number;
}

export interface ConceptEnvelope {
  concept: ConceptDoc;
  layout_version: number;
}

export interface ConceptDetail {
  concept: ConceptDoc;
  neighbors: { clip_id: string; similarity: number }[];
}

export interface MemberSpec {
  clip_id?: string;
  text?: string;
  stars: number;
}

export interface PageIn {
  url: string;
  html: string;
  title?: string;
  visited_at?: string;
  note?: string;
}
