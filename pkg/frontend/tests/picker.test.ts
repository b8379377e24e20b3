import { describe, expect, it } from 'vitest';

import { candidateRows, labelAtRank, selectionFor } from '../src/picker.js';
import type { ScoredCandidate, SlotPrediction } from '../src/types.js';

function scored(label: string, composite: number, extra: Partial<ScoredCandidate> = {}): ScoredCandidate {
  return {
    label,
    p_o: 0.5,
    p_l: 0.2,
    r_o: 0,
    r_l: 1,
    base: 0.38,
    rank_score: 0.45,
    bonus_applied: false,
    composite,
    ...extra,
  };
}

function fusedSlot(): SlotPrediction {
  return {
    slot: 3,
    damage_index: 7,
    label: 'X',
    via: 'fused',
    error: null,
    ocr: [
      ['X', 0.5],
      ['Y', 0.3],
    ],
    lm: [
      ['Z', 0.6],
      ['X', 0.2],
    ],
    scored: [
      scored('X', 1.245, { bonus_applied: true }),
      scored('Z', 0.49, { p_o: 0, p_l: 0.6, r_o: 5, r_l: 0 }),
      scored('Y', 0.38, { p_o: 0.3, p_l: 0, r_o: 1, r_l: 5 }),
    ],
    alternatives: [
      ['X', 1.245],
      ['Z', 0.49],
      ['Y', 0.38],
    ],
  };
}

function shortcutSlot(): SlotPrediction {
  return {
    slot: 1,
    damage_index: 2,
    label: 'A',
    via: 'shortcut',
    error: null,
    ocr: [
      ['A', 0.95],
      ['B', 0.03],
    ],
    lm: [],
    scored: [],
    alternatives: [
      ['A', 0.95],
      ['B', 0.03],
    ],
  };
}

describe('candidateRows', () => {
  it('ranks fused slots by composite with full component detail', () => {
    const rows = candidateRows(fusedSlot());
    expect(rows.map((r) => r.label)).toEqual(['X', 'Z', 'Y']);
    expect(rows.map((r) => r.rank)).toEqual([0, 1, 2]);
    expect(rows[0].score).toBeCloseTo(1.245, 9);
    expect(rows[0].bonus).toBe(true);
    expect(rows[0].chosen).toBe(true);
    expect(rows[1].p_l).toBeCloseTo(0.6);
    expect(rows[1].chosen).toBe(false);
  });

  it('falls back to the recognizer list for shortcut slots', () => {
    const rows = candidateRows(shortcutSlot());
    expect(rows.map((r) => r.label)).toEqual(['A', 'B']);
    expect(rows[0].score).toBeCloseTo(0.95);
    expect(rows[0].p_o).toBeNull();
    expect(rows[0].chosen).toBe(true);
  });

  it('caps the list at five rows', () => {
    const slot = fusedSlot();
    slot.scored = 'ABCDEFG'
      .split('')
      .map((c, i) => scored(c, 1 - i * 0.1));
    expect(candidateRows(slot)).toHaveLength(5);
  });
});

describe('labelAtRank', () => {
  it('returns the rank-2 candidate as the second row', () => {
    expect(labelAtRank(fusedSlot(), 1)).toBe('Z');
  });

  it('throws past the end of the list', () => {
    expect(() => labelAtRank(shortcutSlot(), 5)).toThrow(/no candidate at rank 5/);
  });
});

describe('selectionFor', () => {
  it('builds the edit payload with the slot id and chosen label', () => {
    const slot = fusedSlot();
    expect(selectionFor(slot, labelAtRank(slot, 1))).toEqual({ slot: 3, label: 'Z' });
  });

  it('accepts free text as the same payload shape', () => {
    expect(selectionFor(fusedSlot(), '改')).toEqual({ slot: 3, label: '改' });
  });

  it('rejects an empty label', () => {
    expect(() => selectionFor(fusedSlot(), '')).toThrow(/non-empty/);
  });
});
