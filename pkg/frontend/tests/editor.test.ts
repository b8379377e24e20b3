import { describe, expect, it } from 'vitest';

import { BoxEditError, BoxEditor } from '../src/editor.js';
import type { FusedBox } from '../src/types.js';

const BOUNDS = { width: 100, height: 200 };

function served(): FusedBox[] {
  return [
    { id: 0, box: [10, 10, 20, 20], grade: 'severe', origin: 'detector', gt_label: null },
    { id: 1, box: [30, 10, 40, 20], grade: 'light', origin: 'detector', gt_label: null },
  ];
}

describe('BoxEditor', () => {
  it('starts as a faithful copy with no edits', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    expect(ed.hasEdits()).toBe(false);
    expect(ed.boxes()).toHaveLength(2);
    expect(ed.boxes()[0].box).toEqual([10, 10, 20, 20]);
    expect(ed.toEdits()).toEqual({});
  });

  it('add appends a human box with a provisional id', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    const id = ed.add([50, 50, 60, 60], 'medium');
    expect(id).toBe(2);
    const boxes = ed.boxes();
    expect(boxes).toHaveLength(3);
    expect(boxes[2]).toEqual({
      id: 2,
      box: [50, 50, 60, 60],
      grade: 'medium',
      origin: 'human',
    });
    expect(ed.toEdits()).toEqual({ add: [{ box: [50, 50, 60, 60], grade: 'medium' }] });
  });

  it('add without a grade omits the field from the payload', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.add([50, 50, 60, 60]);
    expect(ed.toEdits()).toEqual({ add: [{ box: [50, 50, 60, 60] }] });
  });

  it('rejects degenerate boxes client-side', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    expect(() => ed.add([5, 5, 5, 9])).toThrow(BoxEditError);
    expect(() => ed.add([5, 5, 9, 5])).toThrow(/degenerate/);
    expect(() => ed.add([9, 9, 5, 5])).toThrow(/degenerate/);
    expect(ed.hasEdits()).toBe(false);
  });

  it('rejects out-of-bounds and non-finite boxes', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    expect(() => ed.add([-1, 0, 10, 10])).toThrow(/bounds/);
    expect(() => ed.add([0, 0, 101, 10])).toThrow(/bounds/);
    expect(() => ed.add([0, 0, 10, 201])).toThrow(/bounds/);
    expect(() => ed.add([0, 0, NaN, 10])).toThrow(/finite/);
  });

  it('move rewrites a served box and shows up in the payload', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.move(1, [35, 15, 45, 25]);
    expect(ed.boxes()[1].box).toEqual([35, 15, 45, 25]);
    expect(ed.toEdits()).toEqual({ move: [{ id: 1, box: [35, 15, 45, 25] }] });
  });

  it('move validates the target rectangle too', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    expect(() => ed.move(0, [10, 10, 10, 20])).toThrow(/degenerate/);
    expect(() => ed.move(7, [1, 1, 2, 2])).toThrow(/unknown box/);
  });

  it('delete hides the box and serializes sorted ids', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.delete(1);
    ed.delete(0);
    expect(ed.boxes()).toHaveLength(0);
    expect(ed.toEdits()).toEqual({ delete: [{ id: 0 }, { id: 1 }] });
  });

  it('moving a deleted box is refused', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.delete(0);
    expect(() => ed.move(0, [1, 1, 2, 2])).toThrow(/deleted/);
  });

  it('deleting a local add just drops it from the payload', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    const id = ed.add([50, 50, 60, 60]);
    ed.delete(id);
    expect(ed.boxes()).toHaveLength(2);
    expect(ed.toEdits()).toEqual({});
    expect(ed.hasEdits()).toBe(false);
  });

  it('moving a local add updates it in place', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    const id = ed.add([50, 50, 60, 60]);
    ed.move(id, [55, 55, 65, 65]);
    expect(ed.toEdits()).toEqual({ add: [{ box: [55, 55, 65, 65] }] });
  });

  it('combined edits serialize with only the used op lists', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.delete(0);
    ed.move(1, [31, 11, 41, 21]);
    ed.add([70, 70, 80, 80], 'severe');
    expect(ed.toEdits()).toEqual({
      delete: [{ id: 0 }],
      move: [{ id: 1, box: [31, 11, 41, 21] }],
      add: [{ box: [70, 70, 80, 80], grade: 'severe' }],
    });
  });

  it('reset discards all local edits', () => {
    const ed = new BoxEditor(served(), BOUNDS);
    ed.delete(0);
    ed.add([50, 50, 60, 60]);
    ed.reset();
    expect(ed.hasEdits()).toBe(false);
    expect(ed.boxes()).toHaveLength(2);
  });
});
