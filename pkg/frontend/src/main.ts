/**
 * Browser entry point: wires the connect form, job list, overlay
 * canvas, box editor, and candidate picker to the review service.
 */

import { ApiError, ReviewClient, pollJob } from './api.js';
import { BoxEditError, BoxEditor } from './editor.js';
import {
  GRADE_COLORS,
  IDENTITY,
  buildOverlay,
  colorFor,
  drawOverlay,
  hitTest,
  toImage,
} from './overlay.js';
import type { OverlayBox, Transform } from './overlay.js';
import { candidateRows, selectionFor } from './picker.js';
import { ViewState } from './state.js';
import type { StageNumber } from './state.js';
import type {
  DamageGrade,
  Quad,
  SlotPrediction,
  Stage1Artifact,
  Stage2Artifact,
  Stage3Artifact,
  StagePayload,
} from './types.js';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function escapeHtml(text: string): string {
  const div = document.createElement('div');
  div.textContent = text;
  return div.innerHTML;
}

const state = new ViewState();
let client: ReviewClient | null = null;
let jobId: string | null = null;
let stage1: StagePayload<Stage1Artifact> | null = null;
let stage2: StagePayload<Stage2Artifact> | null = null;
let stage3: StagePayload<Stage3Artifact> | null = null;
let editor: BoxEditor | null = null;
let pageImage: HTMLImageElement | null = null;
let overlayBoxes: OverlayBox[] = [];
let activeSlot: SlotPrediction | null = null;
let pollTimer: number | null = null;

const canvas = () => el<HTMLCanvasElement>('page-canvas');
const statusLine = (text: string) => {
  el('status-line').textContent = text;
};

function currentTransform(): Transform {
  const zoom = Number(el<HTMLInputElement>('zoom-input').value) || 1;
  return { scale: zoom, offsetX: 0, offsetY: 0 };
}

function redraw(): void {
  const cv = canvas();
  const ctx = cv.getContext('2d');
  if (!ctx || !stage1 || !stage1.artifact) {
    return;
  }
  const t = currentTransform();
  if (pageImage) {
    cv.width = Math.round(pageImage.width * t.scale);
    cv.height = Math.round(pageImage.height * t.scale);
    ctx.clearRect(0, 0, cv.width, cv.height);
    ctx.drawImage(pageImage, 0, 0, cv.width, cv.height);
  } else {
    ctx.clearRect(0, 0, cv.width, cv.height);
  }

  // Draw from the editor's working copy so unsaved edits are visible.
  const artifact = editor
    ? { ...stage1.artifact, fused_boxes: editor.boxes().map((b) => ({ ...b, gt_label: null })) }
    : stage1.artifact;
  overlayBoxes = buildOverlay(artifact, {
    showLegible: el<HTMLInputElement>('legible-toggle').checked,
    transform: t,
  });
  drawOverlay(ctx, overlayBoxes);

  if (state.selected && state.selected.kind === 'box') {
    const hit = overlayBoxes.find((b) => b.kind === 'damage' && b.id === state.selected!.id);
    if (hit) {
      ctx.strokeStyle = '#000000';
      ctx.lineWidth = 1;
      ctx.setLineDash([4, 3]);
      const [x0, y0, x1, y1] = hit.screen;
      ctx.strokeRect(x0 - 3, y0 - 3, x1 - x0 + 6, y1 - y0 + 6);
      ctx.setLineDash([]);
    }
  }
}

function stageBadge(stage: StageNumber): string {
  const status = state.stageStatus(stage) ?? 'unknown';
  const stale = state.isStale(stage) ? ' <span class="stale">stale</span>' : '';
  return `<li>stage ${stage}: <span class="st-${status}">${status}</span>${stale}</li>`;
}

function renderStages(): void {
  el('stage-list').innerHTML = [1, 2, 3]
    .map((n) => stageBadge(n as StageNumber))
    .join('');
  el('version-line').textContent = state.job
    ? `version ${state.job.version}${state.conflict ? ' (conflict: edited elsewhere)' : ''}`
    : '';
}

function renderSlots(): void {
  const listNode = el('slot-list');
  if (!stage2 || !stage2.artifact) {
    listNode.innerHTML = `<p class="muted">${stage2 ? 'stage 2 not yet computed' : ''}</p>`;
    return;
  }
  const rows = stage2.artifact.slots
    .map((slot) => {
      const label = slot.label === null ? '?' : escapeHtml(slot.label);
      const pendingSel = state.pending.selections.find((s) => s.slot === slot.slot);
      const mark = pendingSel ? ` -> ${escapeHtml(pendingSel.label)} (unsaved)` : '';
      return `<li data-slot="${slot.slot}">#${slot.slot} ${label} <em>${slot.via}</em>${mark}</li>`;
    })
    .join('');
  listNode.innerHTML = `<ul>${rows}</ul>`;
  listNode.querySelectorAll('li').forEach((item) => {
    item.addEventListener('click', () => {
      const slotNo = Number(item.getAttribute('data-slot'));
      const slot = stage2?.artifact?.slots.find((s) => s.slot === slotNo) ?? null;
      activeSlot = slot;
      if (slot) {
        state.select('slot', slot.slot);
      }
      renderPicker();
    });
  });
}

function renderPicker(): void {
  const panel = el('picker-panel');
  if (!activeSlot) {
    panel.innerHTML = '<p class="muted">select a slot</p>';
    return;
  }
  const rows = candidateRows(activeSlot)
    .map((row) => {
      const parts = [
        `<td>${row.rank}</td>`,
        `<td>${escapeHtml(row.label)}</td>`,
        `<td>${row.score.toFixed(3)}</td>`,
        `<td>${row.p_o === null ? '-' : row.p_o.toFixed(3)}</td>`,
        `<td>${row.p_l === null ? '-' : row.p_l.toFixed(3)}</td>`,
        `<td>${row.bonus ? 'x' : ''}</td>`,
      ];
      const cls = row.chosen ? ' class="chosen"' : '';
      return `<tr data-label="${escapeHtml(row.label)}"${cls}>${parts.join('')}</tr>`;
    })
    .join('');
  panel.innerHTML = `
    <h3>slot #${activeSlot.slot} (${activeSlot.via})</h3>
    <table>
      <tr><th>rank</th><th>label</th><th>score</th><th>p_o</th><th>p_l</th><th>bonus</th></tr>
      ${rows}
    </table>
    <div>
      <input id="free-text" placeholder="free-text override" maxlength="4" />
      <button id="free-text-apply">apply</button>
    </div>`;
  panel.querySelectorAll('tr[data-label]').forEach((row) => {
    row.addEventListener('click', () => {
      if (!activeSlot) {
        return;
      }
      const label = row.getAttribute('data-label') ?? '';
      state.queueSelection(selectionFor(activeSlot, label));
      renderSlots();
      statusLine(`queued slot #${activeSlot.slot} -> ${label}; save selections to apply`);
    });
  });
  el('free-text-apply').addEventListener('click', () => {
    const text = el<HTMLInputElement>('free-text').value.trim();
    if (!activeSlot || !text) {
      return;
    }
    state.queueSelection(selectionFor(activeSlot, text));
    renderSlots();
    statusLine(`queued free-text override for slot #${activeSlot.slot}`);
  });
}

async function refreshRestored(): Promise<void> {
  const img = el<HTMLImageElement>('restored-img');
  if (!client || !jobId) {
    return;
  }
  try {
    const bytes = await client.fetchRestored(jobId);
    img.src = URL.createObjectURL(new Blob([bytes], { type: 'image/png' }));
    img.style.display = 'block';
    el('restored-note').textContent = '';
  } catch (err) {
    img.style.display = 'none';
    el('restored-note').textContent =
      err instanceof ApiError && err.status === 404 ? 'not yet computed' : String(err);
  }
}

async function openJob(id: string): Promise<void> {
  if (!client) {
    return;
  }
  jobId = id;
  activeSlot = null;
  state.clearSelection();
  state.loadJob(await client.getJob(id));
  stage1 = await client.getStage<Stage1Artifact>(id, 1);
  stage2 = await client.getStage<Stage2Artifact>(id, 2);
  stage3 = await client.getStage<Stage3Artifact>(id, 3);
  editor = stage1.artifact && state.job
    ? new BoxEditor(stage1.artifact.fused_boxes, state.job)
    : null;

  const bytes = await client.fetchImage(id);
  pageImage = new Image();
  pageImage.onload = () => redraw();
  pageImage.src = URL.createObjectURL(new Blob([bytes], { type: 'image/png' }));

  renderStages();
  renderSlots();
  renderPicker();
  void refreshRestored();
  statusLine(`opened job ${id}`);
  startPolling();
}

async function refreshJobList(): Promise<void> {
  if (!client) {
    return;
  }
  const jobs = await client.listJobs();
  const items = jobs
    .map(
      (j) =>
        `<li data-job="${j.job_id}">${j.job_id} v${j.version} ` +
        `[${j.stages['1']}/${j.stages['2']}/${j.stages['3']}]</li>`,
    )
    .join('');
  el('job-list').innerHTML = `<ul>${items}</ul>`;
  el('job-list')
    .querySelectorAll('li')
    .forEach((item) => {
      item.addEventListener('click', () => {
        void openJob(item.getAttribute('data-job') ?? '');
      });
    });
}

function startPolling(): void {
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
  }
  pollTimer = window.setInterval(async () => {
    if (!client || !jobId || !state.job) {
      return;
    }
    try {
      const meta = await client.getJob(jobId);
      if (meta.version !== state.job.version) {
        statusLine(`job updated elsewhere (v${meta.version}); reloading`);
        await openJob(jobId);
      }
    } catch {
      // transient poll failures are fine; the next tick retries
    }
  }, 3000);
}

function wireCanvas(): void {
  const cv = canvas();
  let dragStart: { x: number; y: number } | null = null;

  cv.addEventListener('mousedown', (ev) => {
    const rect = cv.getBoundingClientRect();
    dragStart = { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  });

  cv.addEventListener('mouseup', (ev) => {
    const rect = cv.getBoundingClientRect();
    const x = ev.clientX - rect.left;
    const y = ev.clientY - rect.top;
    const start = dragStart;
    dragStart = null;
    if (!editor) {
      return;
    }
    const t = currentTransform();
    const moved = start && (Math.abs(x - start.x) > 4 || Math.abs(y - start.y) > 4);
    if (moved && start) {
      // Drag draws a new damage box.
      const a = toImage(start, t);
      const b = toImage({ x, y }, t);
      const box: Quad = [
        Math.min(a.x, b.x),
        Math.min(a.y, b.y),
        Math.max(a.x, b.x),
        Math.max(a.y, b.y),
      ];
      const grade = el<HTMLSelectElement>('grade-select').value as DamageGrade | '';
      try {
        const id = editor.add(box, grade === '' ? null : grade);
        state.select('box', id);
        statusLine(`added box ${id}; save boxes to apply`);
      } catch (err) {
        statusLine(err instanceof BoxEditError ? err.message : String(err));
      }
    } else {
      const hit = hitTest(
        overlayBoxes.filter((b) => b.kind === 'damage'),
        x,
        y,
      );
      if (hit) {
        state.select('box', hit.id);
        statusLine(`selected box ${hit.id}`);
      } else {
        state.clearSelection();
      }
    }
    redraw();
  });
}

function wireControls(): void {
  el('connect-btn').addEventListener('click', () => {
    client = new ReviewClient({
      baseUrl: el<HTMLInputElement>('base-url').value,
      token: el<HTMLInputElement>('token-input').value,
    });
    refreshJobList().then(
      () => statusLine('connected'),
      (err) => statusLine(`connect failed: ${err}`),
    );
  });

  el('legible-toggle').addEventListener('change', redraw);
  el('zoom-input').addEventListener('change', redraw);

  el('delete-btn').addEventListener('click', () => {
    if (!editor || !state.selected || state.selected.kind !== 'box') {
      statusLine('select a box first');
      return;
    }
    try {
      editor.delete(state.selected.id);
      state.clearSelection();
      statusLine('box deleted locally; save boxes to apply');
    } catch (err) {
      statusLine(String(err));
    }
    redraw();
  });

  el('save-boxes-btn').addEventListener('click', async () => {
    if (!client || !jobId || !editor || !editor.hasEdits()) {
      statusLine('no box edits to save');
      return;
    }
    state.queueBoxEdits(editor.toEdits());
    try {
      const resp = await client.editStage(jobId, 1, {
        expected_version: state.version,
        boxes: state.pending.boxes ?? {},
      });
      state.ackEdit(1, resp);
      stage1 = await client.getStage<Stage1Artifact>(jobId, 1);
      editor = stage1.artifact && state.job
        ? new BoxEditor(stage1.artifact.fused_boxes, state.job)
        : null;
      stage2 = await client.getStage<Stage2Artifact>(jobId, 2);
      stage3 = await client.getStage<Stage3Artifact>(jobId, 3);
      renderStages();
      renderSlots();
      redraw();
      statusLine(`boxes saved (v${resp.version}); stages 2-3 stale until rerun`);
    } catch (err) {
      // Rejected: pending edits stay queued so nothing drawn is lost.
      statusLine(`save rejected: ${err instanceof ApiError ? err.message : err}`);
    }
  });

  el('save-selections-btn').addEventListener('click', async () => {
    if (!client || !jobId || state.pending.selections.length === 0) {
      statusLine('no selections to save');
      return;
    }
    try {
      const resp = await client.editStage(jobId, 2, {
        expected_version: state.version,
        selections: state.pending.selections,
      });
      state.ackEdit(2, resp);
      stage2 = await client.getStage<Stage2Artifact>(jobId, 2);
      renderStages();
      renderSlots();
      statusLine(`selections saved (v${resp.version}); stage 3 stale until rerun`);
    } catch (err) {
      statusLine(`save rejected: ${err instanceof ApiError ? err.message : err}`);
    }
  });

  el('rerun-btn').addEventListener('click', async () => {
    if (!client || !jobId) {
      return;
    }
    statusLine('rerunning...');
    try {
      await client.rerun(jobId);
      const meta = await pollJob(client, jobId, (m) =>
        Object.values(m.stages).every((s) => s.status === 'done' || s.status === 'overridden'),
      );
      state.loadJob(meta);
      await openJob(jobId);
      statusLine(`rerun finished (v${meta.version})`);
    } catch (err) {
      statusLine(`rerun failed: ${err}`);
    }
  });
}

function renderLegend(): void {
  el('legend').innerHTML = (Object.keys(GRADE_COLORS) as DamageGrade[])
    .map((g) => `<span class="swatch" style="background:${colorFor(g)}"></span>${g}`)
    .join(' ');
}

document.addEventListener('DOMContentLoaded', () => {
  renderLegend();
  wireControls();
  wireCanvas();
  statusLine('not connected');
});
