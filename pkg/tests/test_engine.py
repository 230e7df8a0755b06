from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from conftest import det, scene
from spatialqa.engine import (
    EmptyTemplate,
    GenerationManifest,
    TemplateIdMismatch,
    TemplateMetrics,
    balanced_sample,
    frame_group,
    frame_select_score,
    generate_dataset,
    merge_metrics,
    select_frames,
    split_dataset,
)
from spatialqa.oracle.synth import random_scene
from spatialqa.scene_model import Category, QAPair, SceneRecord, Split
from spatialqa.sparq.config import TemplateConfig
from spatialqa.sparq.templates import build_registry, resolve_templates

CFG = TemplateConfig()
REG = build_registry(CFG)


def qa(tid, i):
    return QAPair(f"img{i:04d}", tid, Category.COUNTING, f"q{i}", "1")


def test_generate_single_scene_two_pairs():
    s = scene(det("car", 0, 0, 10, 10), det("person", 20, 0, 30, 10), det("person", 40, 0, 50, 10))
    pairs, manifest = generate_dataset([s], [REG["HowMany"]], CFG)
    assert len(pairs) == manifest.total_qa == 2
    assert manifest.template_metrics["HowMany"].qa_pairs_emitted == 2


def test_single_class_corpus_never_applies_right_of():
    scenes = [scene(det("car", i, 0, i + 5, 5), det("car", 50, 0, 60, 5), image_id=f"s{i}") for i in range(20)]
    _, manifest = generate_dataset(scenes, [REG["RightOf"]], CFG)
    m = manifest.template_metrics["RightOf"]
    assert m.apply_invocations == 0 and m.predicate_evaluations == 20


def test_worker_count_does_not_change_output():
    scenes = [random_scene(s, depth=True) for s in range(60)]
    a, ma = generate_dataset(scenes, list(REG.values()), CFG, seed=5, worker_count=1)
    b, mb = generate_dataset(scenes, list(REG.values()), CFG, seed=5, worker_count=3)
    assert a == b
    assert ma.digest() == mb.digest()


def test_metrics_conservation_and_bounds():
    scenes = [random_scene(s) for s in range(80)]
    pairs, manifest = generate_dataset(scenes, list(REG.values()), CFG)
    assert sum(m.qa_pairs_emitted for m in manifest.template_metrics.values()) == manifest.total_qa == len(pairs)
    assert sum(manifest.category_counts.values()) == len(pairs)
    for m in manifest.template_metrics.values():
        assert m.apply_invocations == m.nonempty_apply_count + m.empty_case_count
        assert m.apply_invocations <= m.predicate_pass_count <= len(scenes)
        assert 0.0 <= m.hit_rate <= 1.0


def test_output_is_canonically_sorted():
    scenes = [random_scene(s) for s in range(30)]
    random.Random(1).shuffle(scenes)
    pairs, _ = generate_dataset(scenes, list(REG.values()), CFG)
    assert pairs == sorted(pairs, key=QAPair.sort_key)


def test_frame_select_score_examples():
    tenth = [det("car", 0, 0, 192, 160)] + [det("car", 300 + 5 * i, 300, 304 + 5 * i, 304) for i in range(9)]
    assert frame_select_score(scene(*tenth)) == pytest.approx(10 * 0.9)
    assert frame_select_score(scene()) == 0.0
    whole = [det("bus", 0, 0, 640, 480)] + [det("car", i, 0, i + 1, 1) for i in range(4)]
    assert frame_select_score(scene(*whole)) == 0.0


def test_select_frames_keeps_best_per_group():
    a = scene(det("car", 0, 0, 10, 10), image_id="clip1_000")
    b = scene(det("car", 0, 0, 10, 10), det("car", 20, 0, 30, 10), image_id="clip1_001")
    c = scene(det("car", 0, 0, 10, 10), image_id="clip2_000")
    d = scene(det("car", 0, 0, 10, 10), image_id="clip2_001")
    assert frame_group("clip1_000") == "clip1"
    assert [s.image_id for s in select_frames([a, b, c, d])] == ["clip1_001", "clip2_000"]


def test_split_examples():
    scenes = [scene(image_id=f"im{i}") for i in range(100)]
    assert split_dataset(scenes, 0.875, 3) == split_dataset(scenes, 0.875, 3)
    pinned = SceneRecord(image_id="fixed", width=10, height=10, source_split=Split.VAL)
    assert split_dataset([pinned], 0.99, 3)["fixed"] is Split.VAL
    many = [scene(image_id=f"im{i}") for i in range(10000)]
    train = sum(v is Split.TRAIN for v in split_dataset(many, 0.875, 3).values())
    assert abs(train - 8750) <= 0.02 * 8750


def test_balanced_sample_examples():
    pairs = [qa("A", i) for i in range(100)] + [qa("B", 100 + i) for i in range(40)] + \
            [qa("C", 200 + i) for i in range(70)]
    out = balanced_sample(pairs, seed=1)
    assert len(out) == 120
    assert {t: sum(p.template_id == t for p in out) for t in "ABC"} == {"A": 40, "B": 40, "C": 40}
    assert out == balanced_sample(list(reversed(pairs)), seed=1)
    small = [qa("A", i) for i in range(5)] + [qa("B", 10 + i) for i in range(5)]
    assert sorted(balanced_sample(small, 0), key=QAPair.sort_key) == sorted(small, key=QAPair.sort_key)
    with pytest.raises(EmptyTemplate) as err:
        balanced_sample([qa("A", i) for i in range(100)], 0, templates=["A", "B"])
    assert err.value.template_ids == ["B"]


def test_merge_metrics_examples():
    a = TemplateMetrics("T", apply_time_avg_ms=4.0, apply_invocations=2)
    b = TemplateMetrics("T", apply_time_avg_ms=8.0, apply_invocations=2)
    m = merge_metrics(a, b)
    assert (m.apply_invocations, m.apply_time_avg_ms) == (4, 6.0)
    assert merge_metrics(a, TemplateMetrics("T")) == a
    with pytest.raises(TemplateIdMismatch):
        merge_metrics(a, TemplateMetrics("U"))


counts = st.integers(0, 1000)
metric = st.builds(lambda p, a, e, q, t1, t2: TemplateMetrics(
    "T", predicate_time_avg_ms=t1, apply_time_avg_ms=t2, predicate_evaluations=p, predicate_pass_count=p,
    apply_invocations=a + e, nonempty_apply_count=a, empty_case_count=e, qa_pairs_emitted=q),
    counts, counts, counts, counts, st.floats(0, 50), st.floats(0, 50))
COUNT_FIELDS = ("predicate_evaluations", "predicate_pass_count", "apply_invocations", "nonempty_apply_count",
                "empty_case_count", "qa_pairs_emitted", "faults")


@given(metric, metric, metric)
def test_merge_is_associative_and_commutative_on_counts(a, b, c):
    left = merge_metrics(merge_metrics(a, b), c)
    right = merge_metrics(a, merge_metrics(b, c))
    for f in COUNT_FIELDS:
        assert getattr(left, f) == getattr(right, f) == getattr(merge_metrics(c, merge_metrics(b, a)), f)
    assert left.apply_time_avg_ms == pytest.approx(right.apply_time_avg_ms, abs=1e-9)


def test_manifest_digest_ignores_timing():
    m = GenerationManifest("cfg", 1, ["T"], template_metrics={"T": TemplateMetrics("T", 1.0, 2.0, 3, 3, 3, 3)})
    other = GenerationManifest.from_dict(m.to_dict())
    other.template_metrics["T"].apply_time_avg_ms = 99.0
    assert m.digest() == other.digest()
    other.template_metrics["T"].qa_pairs_emitted = 1
    assert m.digest() != other.digest()


def test_resolve_without_depth_excludes_depth_templates():
    ids = [d.template_id for d in resolve_templates(None, REG, include_depth=False)]
    assert "Closer" not in ids and "RightOf" in ids
