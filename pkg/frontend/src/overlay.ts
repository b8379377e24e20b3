import type { DamageGrade, Quad, Stage1Artifact } from './types.js';

// Damage grade palette: severe orange, medium green, light blue.
export const GRADE_COLORS: Record<DamageGrade, string> = {
  severe: '#ff8c00',
  medium: '#2eaa5e',
  light: '#3b82f6',
};

export const UNGRADED_COLOR = '#8a8a8a';
export const LEGIBLE_COLOR = '#bbbbbb';

export function colorFor(grade: DamageGrade | null | undefined): string {
  return grade ? GRADE_COLORS[grade] : UNGRADED_COLOR;
}

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const IDENTITY: Transform = { scale: 1, offsetX: 0, offsetY: 0 };

export function toScreen(box: Quad, t: Transform): Quad {
  return [
    box[0] * t.scale + t.offsetX,
    box[1] * t.scale + t.offsetY,
    box[2] * t.scale + t.offsetX,
    box[3] * t.scale + t.offsetY,
  ];
}

export function toImage(point: { x: number; y: number }, t: Transform): { x: number; y: number } {
  return { x: (point.x - t.offsetX) / t.scale, y: (point.y - t.offsetY) / t.scale };
}

export interface OverlayBox {
  kind: 'damage' | 'legible';
  id: number;
  box: Quad;
  screen: Quad;
  color: string;
  grade: DamageGrade | null;
  label: string | null;
}

export interface OverlayOptions {
  showLegible?: boolean;
  transform?: Transform;
}

/**
 * Flatten a stage-1 artifact into drawable boxes. Damage boxes are
 * always included and colored by grade; legible character boxes come
 * along only when toggled on. `box` stays in server pixel coordinates,
 * `screen` is after the view transform.
 */
export function buildOverlay(stage1: Stage1Artifact, opts: OverlayOptions = {}): OverlayBox[] {
  const t = opts.transform ?? IDENTITY;
  const out: OverlayBox[] = [];
  for (const entry of stage1.fused_boxes) {
    out.push({
      kind: 'damage',
      id: entry.id,
      box: entry.box,
      screen: toScreen(entry.box, t),
      color: colorFor(entry.grade),
      grade: entry.grade,
      label: entry.gt_label,
    });
  }
  if (opts.showLegible) {
    for (const ch of stage1.legible) {
      out.push({
        kind: 'legible',
        id: ch.index_in_annotation,
        box: ch.box,
        screen: toScreen(ch.box, t),
        color: LEGIBLE_COLOR,
        grade: null,
        label: ch.label,
      });
    }
  }
  return out;
}

// Just the bits of CanvasRenderingContext2D the overlay needs, so tests
// can hand in a recording stub instead of a real canvas.
export interface StrokeSurface {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  strokeRect(x: number, y: number, w: number, h: number): void;
}

export function drawOverlay(ctx: StrokeSurface, boxes: OverlayBox[], lineWidth = 2): void {
  for (const b of boxes) {
    ctx.strokeStyle = b.color;
    ctx.lineWidth = b.kind === 'legible' ? 1 : lineWidth;
    const [x0, y0, x1, y1] = b.screen;
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
  }
}

/** Topmost box whose screen rect contains the point; damage wins ties. */
export function hitTest(boxes: OverlayBox[], x: number, y: number): OverlayBox | null {
  let hit: OverlayBox | null = null;
  for (const b of boxes) {
    const [x0, y0, x1, y1] = b.screen;
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) {
      if (!hit || (hit.kind === 'legible' && b.kind === 'damage')) {
        hit = b;
      }
    }
  }
  return hit;
}
