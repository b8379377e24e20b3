import type { Selection, SlotPrediction } from './types.js';

export interface CandidateRow {
  rank: number;
  label: string;
  score: number;
  p_o: number | null;
  p_l: number | null;
  r_o: number | null;
  r_l: number | null;
  bonus: boolean;
  chosen: boolean;
}

/**
 * Ranked rows for the slot panel, at most five deep, mirroring the
 * alternatives the server stores. Fused slots carry the component
 * scores so the panel can show why a candidate won; shortcut slots
 * fall back to the recognizer list and have no breakdown.
 */
export function candidateRows(slot: SlotPrediction): CandidateRow[] {
  const detail = new Map(slot.scored.map((s) => [s.label, s]));
  const ranked: [string, number][] = slot.scored.length
    ? slot.scored.slice(0, 5).map((s) => [s.label, s.composite])
    : slot.ocr.slice(0, 5);
  return ranked.map(([label, score], rank) => {
    const d = detail.get(label);
    return {
      rank,
      label,
      score,
      p_o: d ? d.p_o : null,
      p_l: d ? d.p_l : null,
      r_o: d ? d.r_o : null,
      r_l: d ? d.r_l : null,
      bonus: d ? d.bonus_applied : false,
      chosen: label === slot.label,
    };
  });
}

/** Label of the candidate at a 0-based rank; throws past the end. */
export function labelAtRank(slot: SlotPrediction, rank: number): string {
  const rows = candidateRows(slot);
  const row = rows[rank];
  if (!row) {
    throw new Error(`slot ${slot.slot} has no candidate at rank ${rank}`);
  }
  return row.label;
}

/**
 * Build the edit payload for choosing one label on one slot. Free-text
 * overrides use the same shape; the server records both as "human".
 */
export function selectionFor(slot: SlotPrediction, label: string): Selection {
  if (!label) {
    throw new Error('selection label must be non-empty');
  }
  return { slot: slot.slot, label };
}
