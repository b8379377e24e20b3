"""Annotation document file format: one JSON document per page.

Top-level fields: {schema_version, image, chars[], damage_boxes[], lines[],
reading_order[]}. Each char entry: {box: [x_min, y_min, x_max, y_max],
candidates: [[label, prob], ...], source, grade?, gt_label?}. Writing a
valid document and reading it back is the identity; writes are
byte-stable for identical documents.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Any

from .model import (
    BBox,
    CharObservation,
    DamageBox,
    DamageGrade,
    LineGroup,
    PageDocument,
    ReadingRef,
    validate_page,
)

SCHEMA_VERSION = 1


class AnnotationError(ValueError):
    """Base class for annotation file problems."""


class AnnotationParseError(AnnotationError):
    """Malformed file content; the message names the offending field."""


class AnnotationValidationError(AnnotationError):
    """Structurally parseable but violating a document invariant."""


def _parse_box(value: Any, field: str) -> BBox:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise AnnotationParseError(f"{field}: expected [x_min, y_min, x_max, y_max]")
    try:
        coords = [float(v) for v in value]
    except (TypeError, ValueError):
        raise AnnotationParseError(f"{field}: non-numeric coordinate") from None
    box = BBox(*coords)
    for problem in box.violations(field):
        raise AnnotationParseError(problem)
    return box


def _parse_grade(value: Any, field: str) -> DamageGrade | None:
    if value is None:
        return None
    try:
        return DamageGrade(value)
    except ValueError:
        raise AnnotationParseError(
            f"{field}: unknown grade {value!r}, expected one of light/medium/severe"
        ) from None


def _parse_candidates(value: Any, field: str) -> tuple[tuple[str, float], ...]:
    if not isinstance(value, list):
        raise AnnotationParseError(f"{field}: expected a list of [label, prob] pairs")
    out = []
    for j, pair in enumerate(value):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise AnnotationParseError(f"{field}[{j}]: expected [label, prob]")
        label, prob = pair
        if not isinstance(label, str) or len(label) == 0:
            raise AnnotationParseError(f"{field}[{j}][0]: label must be a non-empty string")
        try:
            p = float(prob)
        except (TypeError, ValueError):
            raise AnnotationParseError(f"{field}[{j}][1]: prob must be a number") from None
        if not (0.0 <= p <= 1.0):
            raise AnnotationParseError(f"{field}[{j}][1]: prob outside [0,1]")
        out.append((label, p))
    return tuple(out)


def _parse_index_list(value: Any, field: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise AnnotationParseError(f"{field}: expected a list of integers")
    return tuple(value)


def document_from_dict(data: Any) -> PageDocument:
    if not isinstance(data, dict):
        raise AnnotationParseError("document: expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise AnnotationParseError(
            f"schema_version: expected {SCHEMA_VERSION}, got {version!r}"
        )

    image = data.get("image")
    if not isinstance(image, dict):
        raise AnnotationParseError("image: expected an object with width/height")
    try:
        width = int(image["width"])
        height = int(image["height"])
    except (KeyError, TypeError, ValueError):
        raise AnnotationParseError("image.width/image.height: expected integers") from None
    image_path = image.get("path")
    if image_path is not None and not isinstance(image_path, str):
        raise AnnotationParseError("image.path: expected a string")

    chars = []
    for i, entry in enumerate(data.get("chars", [])):
        if not isinstance(entry, dict):
            raise AnnotationParseError(f"chars[{i}]: expected an object")
        source = entry.get("source", "ocr")
        if source not in ("ocr", "damage-detector", "human"):
            raise AnnotationParseError(f"chars[{i}].source: unknown source {source!r}")
        gt_label = entry.get("gt_label")
        if gt_label is not None and not isinstance(gt_label, str):
            raise AnnotationParseError(f"chars[{i}].gt_label: expected a string")
        chars.append(
            CharObservation(
                box=_parse_box(entry.get("box"), f"chars[{i}].box"),
                candidates=_parse_candidates(
                    entry.get("candidates", []), f"chars[{i}].candidates"
                ),
                source=source,
                grade=_parse_grade(entry.get("grade"), f"chars[{i}].grade"),
                gt_label=gt_label,
            )
        )

    damage_boxes = []
    for i, entry in enumerate(data.get("damage_boxes", [])):
        if not isinstance(entry, dict):
            raise AnnotationParseError(f"damage_boxes[{i}]: expected an object")
        gt_label = entry.get("gt_label")
        if gt_label is not None and not isinstance(gt_label, str):
            raise AnnotationParseError(f"damage_boxes[{i}].gt_label: expected a string")
        damage_boxes.append(
            DamageBox(
                box=_parse_box(entry.get("box"), f"damage_boxes[{i}].box"),
                grade=_parse_grade(entry.get("grade"), f"damage_boxes[{i}].grade"),
                gt_label=gt_label,
            )
        )

    lines = []
    for i, entry in enumerate(data.get("lines", [])):
        if not isinstance(entry, dict):
            raise AnnotationParseError(f"lines[{i}]: expected an object")
        lines.append(
            LineGroup(
                chars=_parse_index_list(entry.get("chars", []), f"lines[{i}].chars"),
                damage_boxes=_parse_index_list(
                    entry.get("damage_boxes", []), f"lines[{i}].damage_boxes"
                ),
            )
        )

    order = []
    for i, entry in enumerate(data.get("reading_order", [])):
        if not isinstance(entry, dict):
            raise AnnotationParseError(f"reading_order[{i}]: expected an object")
        kind = entry.get("kind")
        if kind == "legible":
            idx = entry.get("char")
        elif kind == "damaged":
            idx = entry.get("damage_box")
        else:
            raise AnnotationParseError(f"reading_order[{i}].kind: unknown kind {kind!r}")
        if not isinstance(idx, int):
            raise AnnotationParseError(f"reading_order[{i}]: missing index field")
        order.append(ReadingRef(kind=kind, index=idx))

    doc = PageDocument(
        width=width,
        height=height,
        image_path=image_path,
        chars=tuple(chars),
        damage_boxes=tuple(damage_boxes),
        lines=tuple(lines),
        reading_order=tuple(order),
    )
    violations = validate_page(doc)
    if violations:
        raise AnnotationValidationError("; ".join(violations))
    return doc


def document_to_dict(doc: PageDocument) -> dict:
    chars = []
    for obs in doc.chars:
        entry: dict[str, Any] = {
            "box": obs.box.as_list(),
            "candidates": [[label, prob] for label, prob in obs.candidates],
            "source": obs.source,
        }
        if obs.grade is not None:
            entry["grade"] = obs.grade.value
        if obs.gt_label is not None:
            entry["gt_label"] = obs.gt_label
        chars.append(entry)

    damage_boxes = []
    for dmg in doc.damage_boxes:
        entry = {"box": dmg.box.as_list()}
        if dmg.grade is not None:
            entry["grade"] = dmg.grade.value
        if dmg.gt_label is not None:
            entry["gt_label"] = dmg.gt_label
        damage_boxes.append(entry)

    order = []
    for ref in doc.reading_order:
        if ref.kind == "legible":
            order.append({"kind": "legible", "char": ref.index})
        else:
            order.append({"kind": "damaged", "damage_box": ref.index})

    image: dict[str, Any] = {"width": doc.width, "height": doc.height}
    if doc.image_path is not None:
        image["path"] = doc.image_path

    return {
        "schema_version": SCHEMA_VERSION,
        "image": image,
        "chars": chars,
        "damage_boxes": damage_boxes,
        "lines": [
            {"chars": list(line.chars), "damage_boxes": list(line.damage_boxes)}
            for line in doc.lines
        ],
        "reading_order": order,
    }


def read_annotation(path: str) -> PageDocument:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationParseError(f"document: invalid JSON ({exc})") from None
    return document_from_dict(data)


def write_annotation(doc: PageDocument, path: str) -> None:
    violations = validate_page(doc)
    if violations:
        raise AnnotationValidationError("; ".join(violations))
    payload = json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2)
    # Atomic publication: readers never observe a half-written file.
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
