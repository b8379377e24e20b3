import type {
  BoxEdits,
  EditResponse,
  JobMeta,
  Selection,
  StageStatus,
} from './types.js';
import type { Transform } from './overlay.js';
import { IDENTITY } from './overlay.js';

export type StageNumber = 1 | 2 | 3;

export interface PendingEdits {
  boxes: BoxEdits | null;
  selections: Selection[];
}

/**
 * Client-side session state for one job.
 *
 * Pending edits survive failed saves and server round-trips; they are
 * cleared only when the server acknowledges the patch. Stages
 * downstream of an accepted edit are marked stale until a rerun brings
 * them back, so the operator can batch several edits before one rerun.
 */
export class ViewState {
  job: JobMeta | null = null;
  transform: Transform = { ...IDENTITY };
  selected: { kind: 'box' | 'slot'; id: number } | null = null;
  pending: PendingEdits = { boxes: null, selections: [] };
  stale = new Set<StageNumber>();
  conflict = false;

  get version(): number {
    return this.job ? this.job.version : -1;
  }

  stageStatus(stage: StageNumber): StageStatus | null {
    if (!this.job) {
      return null;
    }
    const entry = this.job.stages[String(stage)];
    return entry ? entry.status : null;
  }

  loadJob(meta: JobMeta): void {
    this.job = meta;
    for (const n of [...this.stale]) {
      const entry = meta.stages[String(n)];
      if (entry && (entry.status === 'done' || entry.status === 'overridden')) {
        this.stale.delete(n);
      }
    }
  }

  select(kind: 'box' | 'slot', id: number): void {
    this.selected = { kind, id };
  }

  clearSelection(): void {
    this.selected = null;
  }

  queueBoxEdits(edits: BoxEdits): void {
    this.pending.boxes = edits;
  }

  /** One pending choice per slot; a later choice replaces the earlier. */
  queueSelection(sel: Selection): void {
    this.pending.selections = this.pending.selections.filter((s) => s.slot !== sel.slot);
    this.pending.selections.push(sel);
  }

  hasPending(): boolean {
    return this.pending.boxes !== null || this.pending.selections.length > 0;
  }

  /**
   * Server acknowledged a patch: drop the acked edits, adopt the new
   * version and statuses, and mark everything downstream stale.
   */
  ackEdit(stage: StageNumber, resp: EditResponse): void {
    if (stage === 1) {
      this.pending.boxes = null;
    } else {
      this.pending.selections = [];
    }
    this.conflict = resp.conflict;
    for (let n = stage + 1; n <= 3; n += 1) {
      this.stale.add(n as StageNumber);
    }
    if (this.job) {
      this.job.version = resp.version;
      for (const [key, status] of Object.entries(resp.stages)) {
        const entry = this.job.stages[key];
        if (entry) {
          entry.status = status;
        }
      }
    }
  }

  isStale(stage: StageNumber): boolean {
    return this.stale.has(stage);
  }
}
