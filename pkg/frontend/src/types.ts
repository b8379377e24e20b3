// Wire types for the review service API. Field names match the JSON
// the server emits; nothing here is renamed client-side.

export type StageStatus = 'pending' | 'running' | 'done' | 'failed' | 'overridden';
export type DamageGrade = 'light' | 'medium' | 'severe';

/** [x_min, y_min, x_max, y_max] in image pixel coordinates. */
export type Quad = [number, number, number, number];

export interface StageEntry {
  status: StageStatus;
  error: string | null;
  updated_at: string;
}

export interface JobSummary {
  job_id: string;
  version: number;
  updated_at: string;
  stages: Record<string, StageStatus>;
}

export interface JobMeta {
  schema_version: number;
  job_id: string;
  created_at: string;
  updated_at: string;
  version: number;
  width: number;
  height: number;
  layout: string;
  files: Record<string, string>;
  stages: Record<string, StageEntry>;
}

export interface LegibleChar {
  index_in_annotation: number;
  box: Quad;
  label: string;
  confidence: number;
  candidates: [string, number][];
  source: string;
  gt_label: string | null;
}

export interface FusedBox {
  id: number;
  box: Quad;
  grade: DamageGrade | null;
  origin: string;
  gt_label: string | null;
}

export interface ReadingRef {
  kind: 'legible' | 'damaged';
  index: number;
}

export interface SlotRef {
  slot: number;
  damage_index: number;
  box: Quad;
}

export interface Stage1Artifact {
  schema_version: number;
  layout: string;
  legible: LegibleChar[];
  fused_boxes: FusedBox[];
  reading_order: ReadingRef[];
  masked_text: string;
  slots: SlotRef[];
}

export interface ScoredCandidate {
  label: string;
  p_o: number;
  p_l: number;
  r_o: number;
  r_l: number;
  base: number;
  rank_score: number;
  bonus_applied: boolean;
  composite: number;
}

export interface SlotPrediction {
  slot: number;
  damage_index: number;
  label: string | null;
  via: 'shortcut' | 'fused' | 'failed' | 'human';
  error: string | null;
  ocr: [string, number][];
  lm: [string, number][];
  scored: ScoredCandidate[];
  alternatives: [string, number][];
}

export interface Stage2Artifact {
  schema_version: number;
  params: {
    tau: number;
    w_o: number;
    w_l: number;
    alpha: number;
    beta: number;
    k: number;
  };
  slots: SlotPrediction[];
}

export interface PatchStep {
  window: Quad;
  contained: number[];
  deferred: number[];
  corner: string;
}

export interface Stage3Artifact {
  schema_version: number;
  params: { patch_size: number; stride: number };
  start_corner: string;
  steps: PatchStep[];
  labels: Record<string, string | null>;
  warnings: string[];
  restored_image: string;
}

export interface StagePayload<A> {
  job_id: string;
  stage: number;
  status: StageStatus;
  error: string | null;
  version: number;
  artifact: A | null;
  detail?: string;
}

export interface BoxAdd {
  box: Quad;
  grade?: DamageGrade;
}

export interface BoxMove {
  id: number;
  box: Quad;
}

export interface BoxDelete {
  id: number;
}

export interface BoxEdits {
  add?: BoxAdd[];
  move?: BoxMove[];
  delete?: BoxDelete[];
}

/** One candidate choice for one slot; free text allowed. */
export interface Selection {
  slot: number;
  label: string;
}

export interface EditBody {
  expected_version?: number;
  boxes?: BoxEdits;
  selections?: Selection[];
}

export interface EditResponse {
  job_id: string;
  version: number;
  conflict: boolean;
  stages: Record<string, StageStatus>;
}
