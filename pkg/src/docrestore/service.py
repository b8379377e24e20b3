"""HTTP review service: job artifacts for human inspection and edits.

Single-operator deployment authenticated by a shared token header.
Edits mark a stage overridden and reset downstream stages; rerun
recomputes exactly the pending ones. Pending artifacts are served as an
explicit "not yet computed" payload rather than an error, so clients can
poll uniformly.
"""

from __future__ import annotations

import json
from typing import Callable, Optional, Union

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from pydantic import BaseModel

from .annotation import AnnotationError, document_from_dict
from .jobs import EditError, JobError, JobStore
from .pipeline import Engine
from .remote import AdapterContractError, raster_from_wire

TOKEN_HEADER = "x-review-token"


class CreateJobBody(BaseModel):
    image: dict
    annotation: dict
    layout: str = "vertical-rtl"


class EditBody(BaseModel):
    expected_version: Optional[int] = None
    boxes: Optional[dict] = None
    selections: Optional[list] = None


def create_app(
    store: JobStore,
    engine: Union[Engine, Callable[[str], Engine]],
    token: str,
) -> FastAPI:
    """Build the app around a store and an engine.

    `engine` may be a single Engine shared by all jobs, or a callable
    mapping a job id to an engine when backends need per-page state.
    """
    app = FastAPI(title="restoration review service")
    engine_for = engine if callable(engine) else (lambda job_id: engine)

    def authed(x_review_token: str = Header(default="")) -> None:
        if x_review_token != token:
            raise HTTPException(status_code=401, detail="invalid or missing token")

    def meta_or_404(job_id: str) -> dict:
        try:
            return store.load_meta(job_id)
        except JobError:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")

    def summary(meta: dict) -> dict:
        return {
            "job_id": meta["job_id"],
            "version": meta["version"],
            "updated_at": meta["updated_at"],
            "stages": {n: meta["stages"][n]["status"] for n in ("1", "2", "3")},
        }

    @app.get("/jobs")
    def list_jobs(_: None = Depends(authed)) -> dict:
        return {"jobs": store.list_jobs()}

    @app.post("/jobs", status_code=201)
    def create_job(body: CreateJobBody, _: None = Depends(authed)) -> dict:
        try:
            image = raster_from_wire(body.image)
            doc = document_from_dict(body.annotation)
        except (AdapterContractError, AnnotationError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if image.shape != (doc.height, doc.width):
            raise HTTPException(
                status_code=422,
                detail="image dimensions do not match the annotation",
            )
        job_id = store.create_job(image, doc, layout=body.layout)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str, _: None = Depends(authed)) -> dict:
        return meta_or_404(job_id)

    @app.get("/jobs/{job_id}/image")
    def get_image(job_id: str, _: None = Depends(authed)) -> Response:
        meta_or_404(job_id)
        return Response(
            content=store.image_path(job_id).read_bytes(), media_type="image/png"
        )

    @app.get("/jobs/{job_id}/restored")
    def get_restored(job_id: str, _: None = Depends(authed)) -> Response:
        meta_or_404(job_id)
        path = store.restored_path(job_id)
        if not path.is_file():
            raise HTTPException(status_code=404, detail="restored image not yet computed")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/jobs/{job_id}/annotation")
    def get_annotation(job_id: str, _: None = Depends(authed)) -> dict:
        meta_or_404(job_id)
        return json.loads(store.annotation_path(job_id).read_text(encoding="utf-8"))

    @app.get("/jobs/{job_id}/stages/{stage}")
    def get_stage(job_id: str, stage: int, _: None = Depends(authed)) -> dict:
        meta = meta_or_404(job_id)
        if str(stage) not in meta["stages"]:
            raise HTTPException(status_code=404, detail=f"no stage {stage}")
        entry = meta["stages"][str(stage)]
        artifact = store.read_stage(job_id, stage)
        payload = {
            "job_id": job_id,
            "stage": stage,
            "status": entry["status"],
            "error": entry["error"],
            "version": meta["version"],
            "artifact": artifact,
        }
        if artifact is None:
            payload["detail"] = "not yet computed"
        return payload

    @app.post("/jobs/{job_id}/stages/{stage}/edits")
    def edit_stage(
        job_id: str, stage: int, body: EditBody, _: None = Depends(authed)
    ) -> dict:
        meta = meta_or_404(job_id)
        if str(stage) not in meta["stages"]:
            raise HTTPException(status_code=404, detail=f"no stage {stage}")
        conflict = (
            body.expected_version is not None
            and body.expected_version != meta["version"]
        )
        try:
            if stage == 1:
                if body.boxes is None:
                    raise EditError("boxes: required for stage 1 edits")
                meta = store.apply_stage1_edit(job_id, {"boxes": body.boxes})
            elif stage == 2:
                if body.selections is None:
                    raise EditError("selections: required for stage 2 edits")
                meta = store.apply_stage2_edit(
                    job_id, {"selections": body.selections}
                )
            else:
                raise EditError(f"stage {stage} accepts no edits")
        except EditError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "job_id": job_id,
            "version": meta["version"],
            "conflict": conflict,
            "stages": {n: meta["stages"][n]["status"] for n in ("1", "2", "3")},
        }

    @app.post("/jobs/{job_id}/rerun")
    def rerun(job_id: str, _: None = Depends(authed)) -> dict:
        meta_or_404(job_id)
        meta = engine_for(job_id).run_job(store, job_id)
        return summary(meta)

    return app
