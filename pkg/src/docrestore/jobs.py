"""Per-job artifact store for the restoration pipeline.

Each job is a directory of schema-versioned JSON artifacts plus images,
published atomically (write-to-temp, rename) so concurrent readers never
observe a half-written file. Human edits mark a stage overridden and
reset downstream stages to pending; reruns recompute only pending
stages. A version counter increments on every successful mutation so
clients can detect concurrent edits (last writer wins).
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .annotation import document_to_dict
from .fusion import MaskedText, MaskedToken, build_masked_text, reading_order
from .model import (
    BBox,
    CharObservation,
    DamageBox,
    DamageGrade,
    PageDocument,
    ReadingRef,
)
from .raster import save_gray

SCHEMA_VERSION = 1
STAGES = ("1", "2", "3")
STATUSES = ("pending", "running", "done", "failed", "overridden")


class JobError(KeyError):
    """Unknown job or unreadable job store entry."""


class EditError(ValueError):
    """Invalid edit payload; the message names the offending field."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def write_json_atomic(path: Path, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def box_to_list(box: BBox) -> list[float]:
    return [box.x_min, box.y_min, box.x_max, box.y_max]


def ref_to_dict(ref: ReadingRef) -> dict:
    return {"kind": ref.kind, "index": ref.index}


def page_from_stage1(width: int, height: int, artifact: dict) -> PageDocument:
    """Rebuild the fused page geometry from a stage-1 artifact.

    Used when edits recompute reading order and masked text without any
    backend calls.
    """
    chars = tuple(
        CharObservation(
            box=BBox(*entry["box"]),
            candidates=tuple((l, float(p)) for l, p in entry["candidates"]),
            source=entry.get("source", "ocr"),
            gt_label=entry.get("gt_label"),
        )
        for entry in artifact["legible"]
    )
    damage = tuple(
        DamageBox(
            box=BBox(*entry["box"]),
            grade=DamageGrade(entry["grade"]) if entry.get("grade") else None,
            gt_label=entry.get("gt_label"),
        )
        for entry in artifact["fused_boxes"]
    )
    return PageDocument(
        width=width,
        height=height,
        chars=chars,
        damage_boxes=damage,
        lines=(),
        reading_order=(),
    )


def masked_text_from_stage1(width: int, height: int, artifact: dict) -> MaskedText:
    """Reconstruct the MaskedText value a stage-1 artifact describes."""
    page = page_from_stage1(width, height, artifact)
    slot_by_damage = {s["damage_index"]: s["slot"] for s in artifact["slots"]}
    tokens = []
    for ref in artifact["reading_order"]:
        r = ReadingRef(ref["kind"], ref["index"])
        box = page.resolve_box(r)
        if r.kind == "legible":
            tokens.append(
                MaskedToken(
                    kind="char",
                    box=box,
                    ref=r,
                    label=page.chars[r.index].top_label,
                )
            )
        else:
            tokens.append(
                MaskedToken(kind="slot", box=box, ref=r, slot=slot_by_damage[r.index])
            )
    return MaskedText(tokens=tuple(tokens))


def sequence_stage1(artifact: dict, layout: str, width: int, height: int) -> dict:
    """Refresh reading order, masked text, and slot table in place after
    the fused box list changed."""
    page = page_from_stage1(width, height, artifact)
    order = reading_order(page, layout)
    masked = build_masked_text(page, order)
    artifact["reading_order"] = [ref_to_dict(r) for r in order]
    artifact["masked_text"] = masked.to_context()
    artifact["slots"] = [
        {"slot": t.slot, "damage_index": t.ref.index, "box": box_to_list(t.box)}
        for t in masked.slot_tokens()
    ]
    return artifact


class JobStore:
    """Directory-backed job persistence with per-job mutation locks."""

    def __init__(self, root: str) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, job_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(job_id, threading.Lock())

    def job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def _meta_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "job.json"

    def exists(self, job_id: str) -> bool:
        return self._meta_path(job_id).is_file()

    def create_job(
        self,
        image: np.ndarray,
        doc: PageDocument,
        layout: str = "vertical-rtl",
        job_id: Optional[str] = None,
    ) -> str:
        job_id = job_id or uuid.uuid4().hex[:12]
        directory = self.job_dir(job_id)
        if directory.exists():
            raise ValueError(f"job {job_id!r} already exists")
        directory.mkdir(parents=True)
        save_gray(image, str(directory / "page.png"))
        write_json_atomic(directory / "annotation.json", document_to_dict(doc))
        now = _now()
        meta = {
            "schema_version": SCHEMA_VERSION,
            "job_id": job_id,
            "created_at": now,
            "updated_at": now,
            "version": 0,
            "width": doc.width,
            "height": doc.height,
            "layout": layout,
            "files": {"image": "page.png", "annotation": "annotation.json"},
            "stages": {
                n: {"status": "pending", "error": None, "updated_at": now}
                for n in STAGES
            },
        }
        write_json_atomic(self._meta_path(job_id), meta)
        return job_id

    def list_jobs(self) -> list[dict]:
        out = []
        for entry in sorted(self.root.iterdir()) if self.root.is_dir() else []:
            if (entry / "job.json").is_file():
                meta = read_json(entry / "job.json")
                out.append(
                    {
                        "job_id": meta["job_id"],
                        "version": meta["version"],
                        "updated_at": meta["updated_at"],
                        "stages": {
                            n: meta["stages"][n]["status"] for n in STAGES
                        },
                    }
                )
        return out

    def load_meta(self, job_id: str) -> dict:
        path = self._meta_path(job_id)
        if not path.is_file():
            raise JobError(f"unknown job {job_id!r}")
        return read_json(path)

    def save_meta(self, job_id: str, meta: dict) -> None:
        meta["updated_at"] = _now()
        write_json_atomic(self._meta_path(job_id), meta)

    def image_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "page.png"

    def restored_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "restored.png"

    def annotation_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "annotation.json"

    def stage_path(self, job_id: str, stage: int) -> Path:
        return self.job_dir(job_id) / f"stage{stage}.json"

    def read_stage(self, job_id: str, stage: int) -> Optional[dict]:
        if not self.exists(job_id):
            raise JobError(f"unknown job {job_id!r}")
        path = self.stage_path(job_id, stage)
        return read_json(path) if path.is_file() else None

    def write_stage(self, job_id: str, stage: int, artifact: dict) -> None:
        artifact.setdefault("schema_version", SCHEMA_VERSION)
        write_json_atomic(self.stage_path(job_id, stage), artifact)

    def set_status(
        self,
        job_id: str,
        stage: int,
        status: str,
        error: Optional[str] = None,
        bump_version: bool = False,
    ) -> dict:
        if status not in STATUSES:
            raise ValueError(f"unknown status {status!r}")
        meta = self.load_meta(job_id)
        meta["stages"][str(stage)] = {
            "status": status,
            "error": error,
            "updated_at": _now(),
        }
        if bump_version:
            meta["version"] += 1
        self.save_meta(job_id, meta)
        return meta

    def _reset_downstream(self, job_id: str, meta: dict, after_stage: int) -> None:
        for n in range(after_stage + 1, 4):
            meta["stages"][str(n)] = {
                "status": "pending",
                "error": None,
                "updated_at": _now(),
            }
            path = self.stage_path(job_id, n)
            if path.is_file():
                path.unlink()
        if after_stage < 3 and self.restored_path(job_id).is_file():
            self.restored_path(job_id).unlink()

    # -- edits ---------------------------------------------------------

    def apply_stage1_edit(self, job_id: str, payload: dict) -> dict:
        """Box edits: delete, move, then add, ids referring to the
        artifact as served. Reading order and masked text are recomputed
        from stored observations; no backend is consulted."""
        with self.lock(job_id):
            meta = self.load_meta(job_id)
            artifact = self.read_stage(job_id, 1)
            if artifact is None:
                raise EditError("stage 1 has no artifact to edit yet")
            ops = payload.get("boxes")
            if not isinstance(ops, dict):
                raise EditError("boxes: expected an object with add/move/delete")
            fused = [dict(e) for e in artifact["fused_boxes"]]
            n_boxes = len(fused)

            deleted: set[int] = set()
            for i, op in enumerate(ops.get("delete", [])):
                bid = op.get("id") if isinstance(op, dict) else op
                if not isinstance(bid, int) or not (0 <= bid < n_boxes):
                    raise EditError(f"boxes.delete[{i}].id: unknown fused box {bid!r}")
                deleted.add(bid)
            for i, op in enumerate(ops.get("move", [])):
                bid = op.get("id")
                if not isinstance(bid, int) or not (0 <= bid < n_boxes):
                    raise EditError(f"boxes.move[{i}].id: unknown fused box {bid!r}")
                if bid in deleted:
                    raise EditError(f"boxes.move[{i}].id: box {bid} also deleted")
                fused[bid]["box"] = self._check_box(
                    op.get("box"), meta, f"boxes.move[{i}].box"
                )
            additions = []
            for i, op in enumerate(ops.get("add", [])):
                box = self._check_box(op.get("box"), meta, f"boxes.add[{i}].box")
                grade = op.get("grade")
                if grade is not None and grade not in [g.value for g in DamageGrade]:
                    raise EditError(f"boxes.add[{i}].grade: unknown grade {grade!r}")
                additions.append(
                    {
                        "box": box,
                        "grade": grade,
                        "origin": "human",
                        "gt_label": None,
                    }
                )

            rebuilt = [e for i, e in enumerate(fused) if i not in deleted] + additions
            for new_id, entry in enumerate(rebuilt):
                entry["id"] = new_id
            artifact["fused_boxes"] = rebuilt
            sequence_stage1(artifact, meta["layout"], meta["width"], meta["height"])
            self.write_stage(job_id, 1, artifact)

            meta["stages"]["1"] = {
                "status": "overridden",
                "error": None,
                "updated_at": _now(),
            }
            self._reset_downstream(job_id, meta, after_stage=1)
            meta["version"] += 1
            self.save_meta(job_id, meta)
            return meta

    def apply_stage2_edit(self, job_id: str, payload: dict) -> dict:
        """Candidate selections: slot -> chosen label, free text allowed."""
        with self.lock(job_id):
            meta = self.load_meta(job_id)
            artifact = self.read_stage(job_id, 2)
            if artifact is None:
                raise EditError("stage 2 has no artifact to edit yet")
            selections = payload.get("selections")
            if not isinstance(selections, list) or not selections:
                raise EditError("selections: expected a non-empty list")
            by_slot = {entry["slot"]: entry for entry in artifact["slots"]}
            for i, sel in enumerate(selections):
                slot = sel.get("slot") if isinstance(sel, dict) else None
                if slot not in by_slot:
                    raise EditError(f"selections[{i}].slot: unknown slot {slot!r}")
                label = sel.get("label")
                if not isinstance(label, str) or not label:
                    raise EditError(
                        f"selections[{i}].label: expected a non-empty string"
                    )
                entry = by_slot[slot]
                entry["label"] = label
                entry["via"] = "human"
            self.write_stage(job_id, 2, artifact)

            meta["stages"]["2"] = {
                "status": "overridden",
                "error": None,
                "updated_at": _now(),
            }
            self._reset_downstream(job_id, meta, after_stage=2)
            meta["version"] += 1
            self.save_meta(job_id, meta)
            return meta

    @staticmethod
    def _check_box(raw: Any, meta: dict, path: str) -> list[float]:
        if (
            not isinstance(raw, (list, tuple))
            or len(raw) != 4
            or not all(isinstance(v, (int, float)) for v in raw)
        ):
            raise EditError(f"{path}: expected [x_min, y_min, x_max, y_max]")
        x0, y0, x1, y1 = (float(v) for v in raw)
        if not (x0 < x1 and y0 < y1):
            raise EditError(f"{path}: degenerate box")
        if x0 < 0 or y0 < 0 or x1 > meta["width"] or y1 > meta["height"]:
            raise EditError(f"{path}: box outside image bounds")
        return [x0, y0, x1, y1]
