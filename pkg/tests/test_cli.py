"""CLI subcommands run in-process against a tiny synthetic corpus."""

import json
from pathlib import Path

import pytest

from docrestore.cli import main, make_engine_factory
from docrestore.jobs import JobStore

SYNTH_FLAGS = [
    "--pages", "2",
    "--columns", "2",
    "--rows", "3",
    "--atlas-size", "40",
    "--kinds", "char_missing",
    "--char-fraction", "0.4",
    "--miss-rate", "0.0",
]


def synth(out: Path, seed: int = 0) -> Path:
    assert main(["synth", "--out", str(out), "--seed", str(seed)] + SYNTH_FLAGS) == 0
    return out / "manifest.json"


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    manifest = synth(out)
    cfg = out / "config.json"
    cfg.write_text(json.dumps({"atlas": {"size": 40, "seed": 7}}), encoding="utf-8")
    return manifest, cfg


class TestSynth:
    def test_layout_and_manifest(self, corpus):
        manifest_path, _ = corpus
        root = manifest_path.parent
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert len(manifest["pages"]) == 2
        for page in manifest["pages"]:
            for key in ("damaged_image", "annotation", "clean_image", "gt_annotation"):
                assert (root / page[key]).is_file(), key
        assert manifest["atlas"]["size"] == 40
        assert manifest["recipe"]["kinds"] == ["char_missing"]

    def test_deterministic_output(self, tmp_path):
        a = synth(tmp_path / "a", seed=9)
        b = synth(tmp_path / "b", seed=9)
        first = (a.parent / "damaged" / "page_000.png").read_bytes()
        second = (b.parent / "damaged" / "page_000.png").read_bytes()
        assert first == second

    def test_different_seed_differs(self, tmp_path):
        a = synth(tmp_path / "a", seed=1)
        b = synth(tmp_path / "b", seed=2)
        assert (a.parent / "damaged" / "page_000.png").read_bytes() != (
            b.parent / "damaged" / "page_000.png"
        ).read_bytes()


@pytest.fixture(scope="module")
def store_dir(corpus, tmp_path_factory):
    manifest, cfg = corpus
    store_dir = tmp_path_factory.mktemp("store")
    rc = main(
        [
            "restore",
            "--store", str(store_dir),
            "--manifest", str(manifest),
            "--backend", "demo",
            "--config", str(cfg),
        ]
    )
    assert rc == 0
    return store_dir


class TestRestoreEval:
    def test_all_jobs_complete(self, store_dir):
        jobs = JobStore(str(store_dir)).list_jobs()
        assert len(jobs) == 2
        for job in jobs:
            assert job["stages"] == {"1": "done", "2": "done", "3": "done"}

    def test_eval_writes_report(self, store_dir, corpus, capsys):
        manifest, _ = corpus
        rc = main(["eval", "--store", str(store_dir), "--manifest", str(manifest)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "overall" in out and "restored AR" in out
        report = json.loads((store_dir / "report.json").read_text(encoding="utf-8"))
        assert report["ar"]["overall"]["restored"] >= report["ar"]["overall"]["damaged"]

    def test_eval_empty_store_exits(self, tmp_path):
        with pytest.raises(SystemExit, match="no jobs"):
            main(["eval", "--store", str(tmp_path / "empty")])


class TestPlan:
    def test_prints_schedule(self, corpus, capsys):
        manifest_path, _ = corpus
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        annotation = manifest_path.parent / manifest["pages"][0]["annotation"]
        rc = main(["plan", "--annotation", str(annotation)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "start corner" in out
        assert "step 0" in out  # tiny page still needs one window


class TestWiring:
    def test_restore_without_inputs_exits(self, tmp_path):
        with pytest.raises(SystemExit, match="nothing to restore"):
            main(["restore", "--store", str(tmp_path / "s")])

    def test_unknown_backend_exits(self, tmp_path, small_atlas):
        store = JobStore(str(tmp_path / "s"))
        with pytest.raises(SystemExit, match="unknown backend"):
            make_engine_factory({"backend": "quantum"}, store, small_atlas)

    def test_remote_backend_requires_endpoints(self, tmp_path, small_atlas):
        store = JobStore(str(tmp_path / "s"))
        with pytest.raises(SystemExit, match="ocr, lm, inpaint"):
            make_engine_factory({"backend": "remote"}, store, small_atlas)

    def test_remote_endpoints_from_environment(
        self, tmp_path, small_atlas, monkeypatch
    ):
        monkeypatch.setenv("DOCRESTORE_OCR_URL", "http://a")
        monkeypatch.setenv("DOCRESTORE_LM_URL", "http://b")
        monkeypatch.setenv("DOCRESTORE_INPAINT_URL", "http://c")
        store = JobStore(str(tmp_path / "s"))
        factory = make_engine_factory({"backend": "remote"}, store, small_atlas)
        engine = factory("any")
        assert engine.ocr.config.base_url == "http://a"
        assert engine.lm.config.base_url == "http://b"
        assert engine.inpaint.config.base_url == "http://c"
