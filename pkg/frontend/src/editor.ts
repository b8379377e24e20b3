import type { BoxEdits, DamageGrade, FusedBox, Quad } from './types.js';

export class BoxEditError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'BoxEditError';
  }
}

interface Bounds {
  width: number;
  height: number;
}

interface LocalAdd {
  box: Quad;
  grade: DamageGrade | null;
}

/**
 * Working copy of the fused damage boxes with unsaved local edits.
 *
 * Ids follow the stage-1 artifact as served. Boxes added locally get
 * provisional ids above the served range; they are renumbered by the
 * server on save, so the editor must be rebuilt from the fresh artifact
 * afterwards. Degenerate and out-of-bounds boxes are rejected here
 * before they ever reach the server (which revalidates anyway).
 */
export class BoxEditor {
  private served: FusedBox[];
  private moves = new Map<number, Quad>();
  private deletes = new Set<number>();
  private adds: LocalAdd[] = [];

  constructor(
    boxes: FusedBox[],
    private bounds: Bounds,
  ) {
    this.served = boxes.map((b) => ({ ...b }));
  }

  private checkBox(box: Quad): Quad {
    if (box.length !== 4 || !box.every((v) => Number.isFinite(v))) {
      throw new BoxEditError('box: expected four finite coordinates');
    }
    const [x0, y0, x1, y1] = box;
    if (x0 >= x1 || y0 >= y1) {
      throw new BoxEditError('box: degenerate, zero or negative area');
    }
    if (x0 < 0 || y0 < 0 || x1 > this.bounds.width || y1 > this.bounds.height) {
      throw new BoxEditError('box: outside image bounds');
    }
    return [x0, y0, x1, y1];
  }

  /** Returns the provisional id of the new box. */
  add(box: Quad, grade: DamageGrade | null = null): number {
    this.adds.push({ box: this.checkBox(box), grade });
    return this.served.length + this.adds.length - 1;
  }

  move(id: number, box: Quad): void {
    const checked = this.checkBox(box);
    const addIndex = id - this.served.length;
    if (addIndex >= 0) {
      const local = this.adds[addIndex];
      if (!local) {
        throw new BoxEditError(`unknown box id ${id}`);
      }
      local.box = checked;
      return;
    }
    if (!this.served[id]) {
      throw new BoxEditError(`unknown box id ${id}`);
    }
    if (this.deletes.has(id)) {
      throw new BoxEditError(`box ${id} is already deleted`);
    }
    this.moves.set(id, checked);
  }

  delete(id: number): void {
    const addIndex = id - this.served.length;
    if (addIndex >= 0) {
      if (!this.adds[addIndex]) {
        throw new BoxEditError(`unknown box id ${id}`);
      }
      this.adds.splice(addIndex, 1);
      return;
    }
    if (!this.served[id]) {
      throw new BoxEditError(`unknown box id ${id}`);
    }
    this.moves.delete(id);
    this.deletes.add(id);
  }

  /** Boxes as they would look after a successful save. */
  boxes(): { id: number; box: Quad; grade: DamageGrade | null; origin: string }[] {
    const out: { id: number; box: Quad; grade: DamageGrade | null; origin: string }[] = [];
    for (const entry of this.served) {
      if (this.deletes.has(entry.id)) {
        continue;
      }
      out.push({
        id: entry.id,
        box: this.moves.get(entry.id) ?? entry.box,
        grade: entry.grade,
        origin: entry.origin,
      });
    }
    this.adds.forEach((local, i) => {
      out.push({
        id: this.served.length + i,
        box: local.box,
        grade: local.grade,
        origin: 'human',
      });
    });
    return out;
  }

  hasEdits(): boolean {
    return this.moves.size > 0 || this.deletes.size > 0 || this.adds.length > 0;
  }

  reset(): void {
    this.moves.clear();
    this.deletes.clear();
    this.adds = [];
  }

  /** Stage-1 edit payload; only non-empty op lists are included. */
  toEdits(): BoxEdits {
    const edits: BoxEdits = {};
    if (this.deletes.size > 0) {
      edits.delete = [...this.deletes].sort((a, b) => a - b).map((id) => ({ id }));
    }
    if (this.moves.size > 0) {
      edits.move = [...this.moves.entries()].map(([id, box]) => ({ id, box }));
    }
    if (this.adds.length > 0) {
      edits.add = this.adds.map((a) => (a.grade ? { box: a.box, grade: a.grade } : { box: a.box }));
    }
    return edits;
  }
}
