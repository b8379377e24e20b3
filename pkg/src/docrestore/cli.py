"""Command-line entry points.

Subcommands: synth (generate a degraded corpus), restore (run the
pipeline over pages into a job store), eval (score finished jobs),
plan (dry-run patch schedule dump), serve (start the review service).
Structured config comes from an optional JSON file; flags override the
file, and endpoint URLs may additionally be overridden through the
DOCRESTORE_OCR_URL / DOCRESTORE_LM_URL / DOCRESTORE_INPAINT_URL
environment variables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .annotation import read_annotation, write_annotation
from .backends import NullLm, StubInpaint, StubLm, StubLmConfig, TemplateOcr
from .fusion import FusionParams
from .glyphs import GlyphAtlas
from .jobs import JobStore
from .model import PageDocument
from .patching import ParParams, plan_patches
from .pipeline import Engine, EngineParams, evaluate_jobs, run_jobs
from .prediction import VlcpParams
from .raster import load_gray, save_gray
from .remote import RemoteConfig, RemoteInpaint, RemoteLm, RemoteOcr
from .synthesis import DegradationRecipe, generate_toy_page, make_pair

ENV_ENDPOINTS = {
    "ocr": "DOCRESTORE_OCR_URL",
    "lm": "DOCRESTORE_LM_URL",
    "inpaint": "DOCRESTORE_INPAINT_URL",
}


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def engine_params(cfg: dict) -> EngineParams:
    return EngineParams(
        layout=cfg.get("layout", "vertical-rtl"),
        fusion=FusionParams(**cfg.get("fusion", {})),
        vlcp=VlcpParams(**cfg.get("vlcp", {})),
        par=ParParams(**cfg.get("par", {})),
    )


def build_atlas(cfg: dict) -> GlyphAtlas:
    a = cfg.get("atlas", {})
    return GlyphAtlas(
        size=a.get("size", 120), cell=a.get("cell", 32), seed=a.get("seed", 7)
    )


def make_engine_factory(cfg: dict, store: JobStore, atlas: GlyphAtlas):
    """Engine per job id; "demo" wires a per-page transcript oracle."""
    params = engine_params(cfg)
    backend = cfg.get("backend", "template")
    if backend == "remote":
        endpoints = dict(cfg.get("endpoints", {}))
        for name, env in ENV_ENDPOINTS.items():
            if os.environ.get(env):
                endpoints[name] = os.environ[env]
        missing = [n for n in ("ocr", "lm", "inpaint") if not endpoints.get(n)]
        if missing:
            raise SystemExit(f"remote backend needs endpoints for: {', '.join(missing)}")
        common = {
            "timeout": cfg.get("timeout", 10.0),
            "retries": cfg.get("retries", 2),
        }
        engine = Engine(
            ocr=RemoteOcr(RemoteConfig(endpoints["ocr"], **common)),
            lm=RemoteLm(RemoteConfig(endpoints["lm"], **common)),
            inpaint=RemoteInpaint(RemoteConfig(endpoints["inpaint"], **common)),
            glyphs=atlas,
            params=params,
        )
        return lambda job_id: engine
    if backend == "template":
        engine = Engine(
            ocr=TemplateOcr(atlas),
            lm=NullLm(),
            inpaint=StubInpaint(),
            glyphs=atlas,
            params=params,
        )
        return lambda job_id: engine
    if backend == "demo":
        seed = cfg.get("seed", 0)

        def factory(job_id: str) -> Engine:
            doc = read_annotation(str(store.annotation_path(job_id)))
            lm = StubLm(
                transcript=doc.gt_transcript(),
                alphabet=atlas.chars,
                config=StubLmConfig(seed=seed),
            )
            return Engine(
                ocr=TemplateOcr(atlas),
                lm=lm,
                inpaint=StubInpaint(),
                glyphs=atlas,
                params=params,
            )

        return factory
    raise SystemExit(f"unknown backend {backend!r}; expected template, demo, or remote")


def merge_flag(cfg: dict, key: str, value) -> None:
    if value is not None:
        cfg[key] = value


def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    for sub in ("clean", "damaged", "annotations", "gt"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    atlas = GlyphAtlas(size=args.atlas_size, seed=args.atlas_seed)
    recipe_base = dict(
        kinds=tuple(args.kinds.split(",")),
        char_fraction=args.char_fraction,
        removal_band=(args.band[0], args.band[1]),
        coverage=(args.coverage[0], args.coverage[1]),
        fill=args.fill,
        detector_miss_rate=args.miss_rate,
    )
    manifest = {
        "atlas": {"size": args.atlas_size, "cell": atlas.cell, "seed": args.atlas_seed},
        "seed": args.seed,
        "recipe": {**recipe_base, "kinds": list(recipe_base["kinds"])},
        "pages": [],
    }
    for i in range(args.pages):
        page_seed = args.seed * 100003 + i
        clean, doc = generate_toy_page(
            args.columns, args.rows, atlas, seed=page_seed
        )
        recipe = DegradationRecipe(**recipe_base, seed=page_seed)
        damaged, gt_img, damaged_doc = make_pair(clean, doc, recipe)
        name = f"page_{i:03d}"
        save_gray(gt_img, str(out / "clean" / f"{name}.png"))
        save_gray(damaged, str(out / "damaged" / f"{name}.png"))
        write_annotation(doc, str(out / "gt" / f"{name}.json"))
        write_annotation(damaged_doc, str(out / "annotations" / f"{name}.json"))
        manifest["pages"].append(
            {
                "name": name,
                "seed": page_seed,
                "damaged_image": f"damaged/{name}.png",
                "annotation": f"annotations/{name}.json",
                "clean_image": f"clean/{name}.png",
                "gt_annotation": f"gt/{name}.json",
            }
        )
    (out / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {args.pages} page pairs under {out}")
    return 0


def _collect_pages(args: argparse.Namespace) -> list[tuple[str, str]]:
    pages: list[tuple[str, str]] = []
    if args.manifest:
        root = Path(args.manifest).parent
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        for page in manifest["pages"]:
            pages.append(
                (str(root / page["damaged_image"]), str(root / page["annotation"]))
            )
    if args.image and args.annotation:
        pages.append((args.image, args.annotation))
    if not pages:
        raise SystemExit("nothing to restore: pass --manifest or --image/--annotation")
    return pages


def cmd_restore(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    merge_flag(cfg, "backend", args.backend)
    merge_flag(cfg, "layout", args.layout)
    merge_flag(cfg, "seed", args.seed)
    store = JobStore(args.store)
    atlas = build_atlas(cfg)
    factory = make_engine_factory(cfg, store, atlas)

    job_ids = []
    for image_path, annotation_path in _collect_pages(args):
        doc = read_annotation(annotation_path)
        image = load_gray(image_path)
        job_id = store.create_job(image, doc, layout=cfg.get("layout", "vertical-rtl"))
        job_ids.append(job_id)
    results = run_jobs(store, factory, job_ids, workers=args.workers)
    failed = 0
    for job_id in job_ids:
        meta = results[job_id]
        stages = meta.get("stages", {})
        statuses = {n: stages[n]["status"] for n in stages} if stages else {}
        ok = statuses and all(s in ("done", "overridden") for s in statuses.values())
        if not ok:
            failed += 1
        print(f"{job_id}: {statuses or meta.get('error', 'failed')}")
    return 1 if failed else 0


def cmd_eval(args: argparse.Namespace) -> int:
    store = JobStore(args.store)
    job_ids = args.jobs or [j["job_id"] for j in store.list_jobs()]
    if not job_ids:
        raise SystemExit("no jobs in store")
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        a = manifest["atlas"]
        atlas = GlyphAtlas(size=a["size"], cell=a.get("cell", 32), seed=a["seed"])
    else:
        atlas = GlyphAtlas(size=args.atlas_size, seed=args.atlas_seed)
    report = evaluate_jobs(store, job_ids, TemplateOcr(atlas))
    report_path = Path(args.store) / "report.json"
    report_path.write_text(
        json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    def fmt(v):
        return "-" if v is None else f"{100 * v:6.2f}%"

    print(f"{'bucket':<10}{'damaged AR':>12}{'restored AR':>13}")
    for bucket in ("overall", "light", "medium", "severe"):
        row = report["ar"][bucket]
        print(f"{bucket:<10}{fmt(row['damaged']):>12}{fmt(row['restored']):>13}")
    pred = report["prediction"]
    print(
        f"prediction: slots={pred['slots']} top1={fmt(pred['top1'])} "
        f"top5={fmt(pred['top5'])}"
    )
    det = report["detection"]
    print(
        f"detection: precision={fmt(det['precision'])} recall={fmt(det['recall'])} "
        f"f1={fmt(det['f1'])}"
    )
    print(f"report written to {report_path}")
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    doc: PageDocument = read_annotation(args.annotation)
    params = ParParams(patch_size=args.patch_size, stride=args.stride)
    plan = plan_patches(doc.width, doc.height, [d.box for d in doc.damage_boxes], params)
    print(f"plan: {len(plan.steps)} steps, start corner {plan.start_corner}")
    for i, step in enumerate(plan.steps):
        w = step.window
        print(
            f"step {i}: corner {step.corner} window "
            f"[{w.x_min:.0f},{w.y_min:.0f},{w.x_max:.0f},{w.y_max:.0f}] "
            f"contains {list(step.contained)} defers {list(step.deferred)}"
        )
    for box_id, step_idx in sorted(plan.assignment.items()):
        print(f"box {box_id} -> step {step_idx}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config)
    merge_flag(cfg, "backend", args.backend)
    store = JobStore(args.store)
    atlas = build_atlas(cfg)
    factory = make_engine_factory(cfg, store, atlas)
    app = create_app(store, factory, token=args.token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="docrestore",
        description="historical document restoration pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic degraded corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--pages", type=int, default=10)
    p.add_argument("--columns", type=int, default=5)
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--atlas-size", type=int, default=120)
    p.add_argument("--atlas-seed", type=int, default=7)
    p.add_argument("--kinds", default="char_missing,paper_damage")
    p.add_argument("--char-fraction", type=float, default=0.3)
    p.add_argument("--band", type=float, nargs=2, default=[0.95, 1.0])
    p.add_argument("--coverage", type=float, nargs=2, default=[0.005, 0.02])
    p.add_argument("--fill", choices=["black", "white"], default="black")
    p.add_argument("--miss-rate", type=float, default=0.1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("restore", help="run the pipeline into a job store")
    p.add_argument("--store", required=True)
    p.add_argument("--config")
    p.add_argument("--manifest", help="manifest.json from synth")
    p.add_argument("--image")
    p.add_argument("--annotation")
    p.add_argument("--backend", choices=["template", "demo", "remote"])
    p.add_argument("--layout", choices=["vertical-rtl", "horizontal-ltr"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("eval", help="score finished jobs")
    p.add_argument("--store", required=True)
    p.add_argument("--jobs", nargs="*")
    p.add_argument("--manifest")
    p.add_argument("--atlas-size", type=int, default=120)
    p.add_argument("--atlas-seed", type=int, default=7)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="dry-run patch schedule for an annotation")
    p.add_argument("--annotation", required=True)
    p.add_argument("--patch-size", type=int, default=448)
    p.add_argument("--stride", type=int, default=224)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("serve", help="start the review service")
    p.add_argument("--store", required=True)
    p.add_argument("--config")
    p.add_argument("--backend", choices=["template", "demo", "remote"])
    p.add_argument("--token", default="change-me")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8763)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
