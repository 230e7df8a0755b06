from __future__ import annotations

import json

import numpy as np
import pytest

from spatialqa import cli
from spatialqa.engine import GenerationManifest
from spatialqa.export import read_qa, sha256_file
from spatialqa.ingest import encode_depth_grid, write_native
from spatialqa.oracle.synth import random_scene

COCO = {
    "images": [{"id": 1, "width": 64, "height": 48, "file_name": "cam_001.jpg"}],
    "categories": [{"id": 1, "name": "car"}, {"id": 2, "name": "person"}],
    "annotations": [
        {"id": 1, "image_id": 1, "category_id": 1, "bbox": [2, 2, 10, 10]},
        {"id": 2, "image_id": 1, "category_id": 2, "bbox": [40, 20, 10, 20]},
        {"id": 3, "image_id": 1, "category_id": 2, "bbox": [25, 30, 6, 6]},
    ],
}


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "scenes.jsonl"
    write_native([random_scene(s, depth=True) for s in range(40)], path)
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_generate_writes_outputs(tmp_path, corpus):
    out = tmp_path / "out"
    assert run("generate", "--input", corpus, "--out", out, "--seed", 7) == 0
    for name in ("qa.jsonl", "manifest.json", "stats.txt", "stats.csv", "figures/category_distribution.png"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"]["qa.jsonl"] == sha256_file(out / "qa.jsonl")
    assert "Closer" not in manifest["templates"]


def test_generate_is_reproducible(tmp_path, corpus):
    digests = []
    for name in ("a", "b"):
        run("generate", "--input", corpus, "--out", tmp_path / name, "--seed", 7, "--no-figures")
        m = GenerationManifest.from_dict(json.loads((tmp_path / name / "manifest.json").read_text()))
        digests.append((sha256_file(tmp_path / name / "qa.jsonl"), m.digest()))
    assert digests[0] == digests[1]


def test_depth_templates_without_depth_source(tmp_path, corpus, capsys):
    code = run("generate", "--input", corpus, "--out", tmp_path / "o", "--templates", "Closer,HowMany,DepthRanking")
    assert code == 2
    err = capsys.readouterr().err
    assert "Closer" in err and "DepthRanking(3)" in err


def test_embedded_depth_enables_depth_templates(tmp_path, corpus):
    assert run("generate", "--input", corpus, "--out", tmp_path / "o", "--embedded-depth", "--no-figures") == 0
    assert any(p.template_id == "Closer" for p in read_qa(tmp_path / "o" / "qa.jsonl"))


def test_coco_with_depth_dir(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps(COCO))
    depth = tmp_path / "depth"
    depth.mkdir()
    grid = np.full((48, 64), 20.0)
    grid[:, :20] = 3.0
    (depth / "cam_001.depth").write_bytes(encode_depth_grid(grid))
    out = tmp_path / "o"
    assert run("generate", "--input", tmp_path / "a.json", "--depth-dir", depth, "--out", out,
               "--templates", "Closer,Farther", "--no-figures") == 0
    got = {p.question: p.answer for p in read_qa(out / "qa.jsonl") if p.template_id == "Closer"}
    assert got["Is there at least one car that appears closer to the camera than any person?"] == "Yes"


def test_truncated_depth_file_is_invalid_input(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps(COCO))
    depth = tmp_path / "depth"
    depth.mkdir()
    (depth / "cam_001.depth").write_bytes(encode_depth_grid(np.ones((48, 64)))[:-8])
    assert run("generate", "--input", tmp_path / "a.json", "--depth-dir", depth, "--out", tmp_path / "o",
               "--templates", "Closer") == 2


def test_config_file_and_command_line_precedence(tmp_path, corpus, monkeypatch):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[generate]\n"
        f"input = {corpus.name}\n"
        "templates = MostAppearance, HowMany\n"
        "seed = 3\n"
        "out = from_config\n"
        "[thresholds]\n"
        "count_margin_ratio = 50\n"
        "[template.HowMany]\n"
        "count_margin_ratio = 2\n"
    )
    monkeypatch.setenv(cli.CONFIG_ENV, str(cfg))
    assert run("generate", "--no-figures") == 0
    manifest = json.loads((tmp_path / "from_config" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["templates"] == ["MostAppearance", "HowMany"]
    assert manifest["template_metrics"]["MostAppearance"]["qa_pairs_emitted"] == 0
    assert run("generate", "--no-figures", "--seed", 9, "--out", tmp_path / "cli", "--set",
               "count_margin_ratio=1.5") == 0
    manifest = json.loads((tmp_path / "cli" / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["template_metrics"]["MostAppearance"]["qa_pairs_emitted"] > 0


def test_bad_config_values_exit_2(tmp_path, corpus):
    assert run("generate", "--input", corpus, "--out", tmp_path / "o", "--set", "count_margin_ratio=0.5") == 2
    assert run("generate", "--input", corpus, "--out", tmp_path / "o", "--templates", "Nope") == 2
    assert run("generate", "--input", tmp_path / "missing.jsonl", "--out", tmp_path / "o") == 2
    assert run("generate", "--input", corpus, "--out", tmp_path / "o", "--split", "1.5") == 2


def test_split_and_frame_select(tmp_path):
    path = tmp_path / "frames.jsonl"
    scenes = [random_scene(s) for s in range(30)]
    scenes = [s.__class__(image_id=f"clip{i % 10}_{i:03d}", width=s.width, height=s.height,
                          detections=s.detections) for i, s in enumerate(scenes)]
    write_native(scenes, path)
    out = tmp_path / "o"
    assert run("generate", "--input", path, "--out", out, "--split", 0.5, "--frame-select", "--no-figures") == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"train/qa.jsonl", "val/qa.jsonl"}
    assert manifest["ingest"]["frames_dropped"] == 20
    images = {p.image_id for part in ("train", "val") for p in read_qa(out / part / "qa.jsonl")}
    assert len(images) <= 10


def test_interrupt_writes_partial_manifest(tmp_path, corpus, monkeypatch):
    def interrupted(*a, **k):
        raise KeyboardInterrupt

    monkeypatch.setattr(cli, "generate_dataset", interrupted)
    assert run("generate", "--input", corpus, "--out", tmp_path / "o") == 1
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["partial"] is True


def test_stats_command(tmp_path, corpus, capsys):
    out = tmp_path / "o"
    run("generate", "--input", corpus, "--out", out, "--templates", "HowMany,RightOf", "--no-figures")
    capsys.readouterr()
    assert run("stats", "--input", out / "manifest.json", "--format", "csv") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("Template,is_applicable Avg (ms),apply Avg (ms),Predicate → QA Hit Rate")
    assert [ln.split(",")[0] for ln in lines[1:]] == ["HowMany", "RightOf"]
    assert run("stats", "--input", out / "qa.jsonl") == 0
    assert run("stats", "--input", tmp_path / "nope.json") == 2


def test_sample_command(tmp_path, corpus, capsys):
    out = tmp_path / "o"
    run("generate", "--input", corpus, "--out", out, "--templates", "HowMany,LeftOf", "--no-figures")
    for name in ("s1.jsonl", "s2.jsonl"):
        assert run("sample", "--input", out / "qa.jsonl", "--seed", 4, "--out", tmp_path / name) == 0
    assert (tmp_path / "s1.jsonl").read_bytes() == (tmp_path / "s2.jsonl").read_bytes()
    capsys.readouterr()
    assert run("sample", "--input", out / "qa.jsonl", "--templates", "HowMany,Closer",
               "--out", tmp_path / "s3.jsonl") == 0
    assert "warning" in capsys.readouterr().err
    assert run("sample", "--input", out / "qa.jsonl", "--templates", "HowMany,Closer", "--strict") == 2


def test_validate_command(tmp_path, capsys):
    (tmp_path / "clean.json").write_text(json.dumps(COCO))
    assert run("validate", "--input", tmp_path / "clean.json") == 0
    assert "0 issues" in capsys.readouterr().out
    bad = json.loads(json.dumps(COCO))
    bad["annotations"].append({"id": 77, "image_id": 1, "category_id": 42, "bbox": [0, 0, 1, 1]})
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert run("validate", "--input", tmp_path / "bad.json") == 1
    out = capsys.readouterr().out
    assert "77" in out and "42" in out
    degen = json.loads(json.dumps(COCO))
    degen["annotations"].append({"id": 78, "image_id": 1, "category_id": 1, "bbox": [5, 5, 0, 0]})
    (tmp_path / "degen.json").write_text(json.dumps(degen))
    assert run("validate", "--input", tmp_path / "degen.json") == 0
    assert "warning" in capsys.readouterr().out
    (tmp_path / "junk.json").write_text("{")
    assert run("validate", "--input", tmp_path / "junk.json") == 2


def test_bench_command(tmp_path, corpus, capsys):
    assert run("bench", "--input", corpus, "--json") == 0
    both = json.loads(capsys.readouterr().out)
    assert both["identical"]
    assert run("bench", "--input", corpus, "--json", "--no-sieve") == 0
    off = json.loads(capsys.readouterr().out)
    assert off["digests"]["no_sieve"] == both["digests"]["sieve"]
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert run("bench", "--input", empty, "--json") == 0
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert all(r["sieve"]["apply_calls"] == r["no_sieve"]["apply_calls"] == 0 for r in rows)


def test_score_command(tmp_path, corpus, capsys):
    from spatialqa.export import question_digest

    out = tmp_path / "o"
    run("generate", "--input", corpus, "--out", out, "--templates", "HowMany", "--no-figures")
    pairs = read_qa(out / "qa.jsonl")
    preds = tmp_path / "p.jsonl"
    preds.write_text("".join(json.dumps({"question_digest": question_digest(p.image_id, p.template_id, p.question),
                                         "model_answer": p.answer}) + "\n" for p in pairs))
    capsys.readouterr()
    assert run("score", "--input", out / "qa.jsonl", "--predictions", preds) == 0
    assert json.loads(capsys.readouterr().out)["accuracy"] == 1.0


def test_usage_errors_exit_2(capsys):
    assert cli.main(["nope"]) == 2
    assert cli.main([]) == 2
