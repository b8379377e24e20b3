"""End-to-end orchestration: Stage 1 -> 2 -> 3 over stored jobs.

The engine binds the three backend contracts plus parameters, executes
stages in order, and persists every intermediate artifact through the
job store so humans can inspect, override, and resume. Evaluation
re-reads pages with an independent recognizer and reports accuracy per
damage grade alongside prediction and detection quality.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import jobs as jobstore
from .annotation import read_annotation
from .fusion import FusionParams, fuse
from .jobs import JobStore, masked_text_from_stage1, sequence_stage1
from .metrics import ar, detection_prf, topk_accuracy
from .model import (
    BBox,
    CharObservation,
    InpaintBackend,
    LmBackend,
    OcrBackend,
    PageDocument,
)
from .patching import GlyphSource, ParParams, RestoreStepError, restore_page
from .prediction import VlcpParams, vlcp_predict
from .raster import load_gray, save_gray


@dataclass(frozen=True)
class EngineParams:
    layout: str = "vertical-rtl"
    fusion: FusionParams = FusionParams()
    vlcp: VlcpParams = VlcpParams()
    par: ParParams = ParParams()


@dataclass(frozen=True)
class PageResult:
    """In-memory run of one page, stage artifacts plus restored pixels."""

    stage1: dict
    stage2: dict
    stage3: dict
    restored: np.ndarray


class Engine:
    """Runs the three stages with a fixed set of backends."""

    def __init__(
        self,
        ocr: OcrBackend,
        lm: LmBackend,
        inpaint: InpaintBackend,
        glyphs: GlyphSource,
        params: EngineParams = EngineParams(),
    ) -> None:
        self.ocr = ocr
        self.lm = lm
        self.inpaint = inpaint
        self.glyphs = glyphs
        self.params = params

    # -- stages --------------------------------------------------------

    def run_stage1(self, image: np.ndarray, doc: PageDocument) -> dict:
        """Recognize every char box, gate ambiguous ones, merge with
        detector boxes, and sequence the page into masked text."""
        p = self.params
        observations: list[CharObservation] = []
        for char in doc.chars:
            obs = self.ocr.recognize(image, char.box, p.vlcp.k)
            observations.append(obs)

        ambiguous_idx = [
            i
            for i, obs in enumerate(observations)
            if not obs.candidates or obs.confidence < p.fusion.ocr_conf_threshold
        ]
        ambiguous_boxes = [observations[i].box for i in ambiguous_idx]
        detector_boxes = [d.box for d in doc.damage_boxes]
        fused = fuse(ambiguous_boxes, detector_boxes, p.fusion)

        entries = []
        for i, d in enumerate(doc.damage_boxes):
            entries.append(
                {
                    "id": i,
                    "box": jobstore.box_to_list(d.box),
                    "grade": d.grade.value if d.grade else None,
                    "origin": "detector",
                    "gt_label": d.gt_label,
                }
            )
        cursor = 0
        for box in fused[len(detector_boxes) :]:
            while observations[ambiguous_idx[cursor]].box != box:
                cursor += 1
            src = doc.chars[ambiguous_idx[cursor]]
            entries.append(
                {
                    "id": len(entries),
                    "box": jobstore.box_to_list(box),
                    "grade": src.grade.value if src.grade else None,
                    "origin": "ocr-ambiguity",
                    "gt_label": src.gt_label,
                }
            )
            cursor += 1

        legible = []
        ambiguous_set = set(ambiguous_idx)
        for i, obs in enumerate(observations):
            if i in ambiguous_set:
                continue
            legible.append(
                {
                    "index_in_annotation": i,
                    "box": jobstore.box_to_list(obs.box),
                    "label": obs.top_label,
                    "confidence": obs.confidence,
                    "candidates": [[l, p_] for l, p_ in obs.candidates],
                    "source": obs.source,
                    "gt_label": doc.chars[i].gt_label,
                }
            )

        artifact = {
            "schema_version": jobstore.SCHEMA_VERSION,
            "layout": p.layout,
            "legible": legible,
            "fused_boxes": entries,
        }
        sequence_stage1(artifact, p.layout, doc.width, doc.height)
        return artifact

    def run_stage2(
        self, image: np.ndarray, width: int, height: int, stage1: dict
    ) -> dict:
        masked = masked_text_from_stage1(width, height, stage1)
        predictions = vlcp_predict(
            masked, image, self.ocr, self.lm, self.params.vlcp
        )
        damage_of_slot = {s["slot"]: s["damage_index"] for s in stage1["slots"]}
        slots = []
        for pred in predictions:
            scored = [
                {
                    "label": s.label,
                    "p_o": s.p_o,
                    "p_l": s.p_l,
                    "r_o": s.r_o,
                    "r_l": s.r_l,
                    "base": s.base,
                    "rank_score": s.rank_score,
                    "bonus_applied": s.bonus_applied,
                    "composite": s.composite,
                }
                for s in pred.scored
            ]
            slots.append(
                {
                    "slot": pred.slot,
                    "damage_index": damage_of_slot[pred.slot],
                    "label": pred.label,
                    "via": pred.via,
                    "error": pred.error,
                    "ocr": [[l, p_] for l, p_ in pred.ocr],
                    "lm": [[l, p_] for l, p_ in pred.lm],
                    "scored": scored,
                    "alternatives": [[l, s] for l, s in pred.alternatives],
                }
            )
        v = self.params.vlcp
        return {
            "schema_version": jobstore.SCHEMA_VERSION,
            "params": {
                "tau": v.tau,
                "w_o": v.w_o,
                "w_l": v.w_l,
                "alpha": v.alpha,
                "beta": v.beta,
                "k": v.k,
            },
            "slots": slots,
        }

    def run_stage3(
        self, image: np.ndarray, stage1: dict, stage2: dict
    ) -> tuple[dict, np.ndarray]:
        boxes = [BBox(*e["box"]) for e in stage1["fused_boxes"]]
        label_of_damage: dict[int, Optional[str]] = {
            s["damage_index"]: s["label"] for s in stage2["slots"]
        }
        labels = [label_of_damage.get(i) for i in range(len(boxes))]
        result = restore_page(
            image, boxes, labels, self.inpaint, self.glyphs, self.params.par
        )
        artifact = {
            "schema_version": jobstore.SCHEMA_VERSION,
            "params": {
                "patch_size": self.params.par.patch_size,
                "stride": self.params.par.stride,
            },
            "start_corner": result.plan.start_corner,
            "steps": [
                {
                    "window": jobstore.box_to_list(s.window),
                    "contained": list(s.contained),
                    "deferred": list(s.deferred),
                    "corner": s.corner,
                }
                for s in result.plan.steps
            ],
            "labels": {str(i): labels[i] for i in range(len(labels))},
            "warnings": list(result.warnings),
            "restored_image": "restored.png",
        }
        return artifact, result.image

    # -- composition ---------------------------------------------------

    def run_page(self, image: np.ndarray, doc: PageDocument) -> PageResult:
        """All three stages in memory, no persistence."""
        stage1 = self.run_stage1(image, doc)
        stage2 = self.run_stage2(image, doc.width, doc.height, stage1)
        stage3, restored = self.run_stage3(image, stage1, stage2)
        return PageResult(stage1=stage1, stage2=stage2, stage3=stage3, restored=restored)

    def run_job(self, store: JobStore, job_id: str) -> dict:
        """Execute every stage not already done or overridden.

        Failed and stale-running stages are retried; a stage failure
        records the error and stops (downstream stages stay pending).
        """
        meta = store.load_meta(job_id)
        image = load_gray(str(store.image_path(job_id)))
        doc = read_annotation(str(store.annotation_path(job_id)))
        for n in (1, 2, 3):
            meta = store.load_meta(job_id)
            status = meta["stages"][str(n)]["status"]
            if status in ("done", "overridden"):
                continue
            store.set_status(job_id, n, "running")
            try:
                if n == 1:
                    artifact = self.run_stage1(image, doc)
                    store.write_stage(job_id, 1, artifact)
                elif n == 2:
                    stage1 = store.read_stage(job_id, 1)
                    if stage1 is None:
                        raise RuntimeError("stage 1 artifact missing")
                    artifact = self.run_stage2(image, doc.width, doc.height, stage1)
                    store.write_stage(job_id, 2, artifact)
                else:
                    stage1 = store.read_stage(job_id, 1)
                    stage2 = store.read_stage(job_id, 2)
                    if stage1 is None or stage2 is None:
                        raise RuntimeError("upstream artifact missing")
                    artifact, restored = self.run_stage3(image, stage1, stage2)
                    save_gray(restored, str(store.restored_path(job_id)))
                    store.write_stage(job_id, 3, artifact)
            except RestoreStepError as exc:
                save_gray(
                    exc.partial, str(store.job_dir(job_id) / "restored.partial.png")
                )
                meta = store.set_status(
                    job_id, n, "failed", error=str(exc), bump_version=True
                )
                return meta
            except Exception as exc:  # noqa: BLE001 - per-stage isolation
                meta = store.set_status(
                    job_id, n, "failed", error=str(exc), bump_version=True
                )
                return meta
            meta = store.set_status(job_id, n, "done", bump_version=True)
        return meta


def run_jobs(
    store: JobStore,
    engine_for: Callable[[str], Engine],
    job_ids: Sequence[str],
    workers: int = 2,
) -> dict[str, dict]:
    """Run many jobs on a bounded pool; one page's failure never stops
    the others. Returns per-job final metadata (failures included)."""

    def one(job_id: str) -> dict:
        try:
            return engine_for(job_id).run_job(store, job_id)
        except Exception as exc:  # noqa: BLE001
            return {"job_id": job_id, "error": str(exc), "stages": {}}

    results: dict[str, dict] = {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for job_id, meta in zip(job_ids, pool.map(one, job_ids)):
            results[job_id] = meta
    return results


# -- evaluation --------------------------------------------------------


def page_transcripts(
    doc: PageDocument, image: np.ndarray, eval_ocr: OcrBackend
) -> tuple[list[str], list[str]]:
    """(ground truth, hypothesis) character sequences in reading order.

    The hypothesis reads each position's pixels with the evaluation
    recognizer; positions it cannot read at all become deletions.
    """
    reference: list[str] = []
    hypothesis: list[str] = []
    for ref in doc.reading_order:
        truth = doc.gt_label_at(ref)
        if truth is None:
            raise ValueError(f"position {ref} lacks a ground-truth label")
        reference.append(truth)
        obs = eval_ocr.recognize(image, doc.resolve_box(ref), 1)
        if obs.top_label is not None:
            hypothesis.append(obs.top_label)
    return reference, hypothesis


def _gt_damage_boxes(doc: PageDocument) -> list[BBox]:
    """True damage: detector-listed boxes plus graded (missed) chars."""
    out = [d.box for d in doc.damage_boxes]
    out.extend(c.box for c in doc.chars if c.grade is not None)
    return out


@dataclass
class _Counts:
    n: int = 0
    d: int = 0
    s: int = 0
    i: int = 0

    def add(self, res) -> None:
        self.n += res.n_total
        self.d += res.deletions
        self.s += res.substitutions
        self.i += res.insertions

    @property
    def ar(self) -> Optional[float]:
        if self.n == 0:
            return None
        return (self.n - self.d - self.s - self.i) / self.n


def evaluate_jobs(
    store: JobStore,
    job_ids: Sequence[str],
    eval_ocr: OcrBackend,
    k: int = 5,
) -> dict:
    """Score finished jobs against their stored ground truth.

    AR is reported overall and bucketed by damage grade: a page
    contributes its counts to every grade present on that page. Top-k
    accuracy covers slots with known truth; detection compares fused
    boxes against the true damaged regions.
    """
    buckets = {g: {"damaged": _Counts(), "restored": _Counts()} for g in
               ("light", "medium", "severe")}
    overall = {"damaged": _Counts(), "restored": _Counts()}
    top1_hits: list[list[str]] = []
    topk_hits: list[list[str]] = []
    truths: list[str] = []
    det_matches = 0
    det_preds = 0
    det_gts = 0
    pages = {}

    for job_id in job_ids:
        doc = read_annotation(str(store.annotation_path(job_id)))
        damaged_img = load_gray(str(store.image_path(job_id)))
        restored_path = store.restored_path(job_id)
        if not restored_path.is_file():
            raise ValueError(f"job {job_id}: restored image missing; run it first")
        restored_img = load_gray(str(restored_path))
        if damaged_img.shape != (doc.height, doc.width):
            raise ValueError(
                f"job {job_id}: image dimensions do not match its annotation"
            )

        reference, hyp_damaged = page_transcripts(doc, damaged_img, eval_ocr)
        _, hyp_restored = page_transcripts(doc, restored_img, eval_ocr)
        res_damaged = ar(reference, hyp_damaged)
        res_restored = ar(reference, hyp_restored)
        overall["damaged"].add(res_damaged)
        overall["restored"].add(res_restored)
        grades = sorted(
            {d.grade.value for d in doc.damage_boxes if d.grade is not None}
            | {c.grade.value for c in doc.chars if c.grade is not None}
        )
        for g in grades:
            buckets[g]["damaged"].add(res_damaged)
            buckets[g]["restored"].add(res_restored)
        pages[job_id] = {
            "damaged_ar": res_damaged.ar,
            "restored_ar": res_restored.ar,
            "grades": grades,
        }

        stage1 = store.read_stage(job_id, 1)
        stage2 = store.read_stage(job_id, 2)
        if stage1 and stage2:
            gt_of_damage = {
                e["id"]: e.get("gt_label") for e in stage1["fused_boxes"]
            }
            for slot in stage2["slots"]:
                truth = gt_of_damage.get(slot["damage_index"])
                if truth is None:
                    continue
                labels = [l for l, _ in slot["alternatives"]]
                top1_hits.append(labels[:1])
                topk_hits.append(labels)
                truths.append(truth)
            conf_of = {"detector": 1.0, "ocr-ambiguity": 0.9, "human": 0.8}
            preds = [
                (BBox(*e["box"]), conf_of.get(e["origin"], 0.5))
                for e in stage1["fused_boxes"]
            ]
            gts = _gt_damage_boxes(doc)
            det = detection_prf(preds, gts)
            det_matches += len(det.matches)
            det_preds += len(preds)
            det_gts += len(gts)

    precision = det_matches / det_preds if det_preds else 0.0
    recall = det_matches / det_gts if det_gts else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    report = {
        "pages": pages,
        "ar": {
            "overall": {
                "damaged": overall["damaged"].ar,
                "restored": overall["restored"].ar,
            },
            **{
                g: {
                    "damaged": buckets[g]["damaged"].ar,
                    "restored": buckets[g]["restored"].ar,
                }
                for g in ("light", "medium", "severe")
            },
        },
        "prediction": {
            "slots": len(truths),
            "top1": topk_accuracy(top1_hits, truths, 1) if truths else None,
            "top5": topk_accuracy(topk_hits, truths, k) if truths else None,
        },
        "detection": {"precision": precision, "recall": recall, "f1": f1},
    }
    return report
