from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from conftest import det, scene
from spatialqa.oracle.synth import random_scene
from spatialqa.sparq import predicates as P
from spatialqa.sparq import realizers as R
from spatialqa.sparq.config import TemplateConfig
from spatialqa.sparq.templates import build_registry, resolve_templates, run_template

CFG = TemplateConfig()
REG = build_registry(CFG)


def answers(tid, s, cfg=CFG):
    pairs, _ = run_template(build_registry(cfg)[tid], s, cfg)
    return {p.question: p.answer for p in pairs}


def counts_scene(**counts):
    dets = []
    i = 0
    for label, n in counts.items():
        for _ in range(n):
            dets.append(det(label, (i % 20) * 30, (i // 20) * 30, (i % 20) * 30 + 20, (i // 20) * 30 + 20))
            i += 1
    return scene(*dets)


# --- predicates ----------------------------------------------------------------


def test_predicate_examples():
    assert P.at_least_x_classes(counts_scene(car=2, person=1), 2)
    assert not P.at_least_x_classes(counts_scene(car=5), 2)
    assert not P.at_least_x_classes(scene(), 1)

    assert P.exists_nonoverlapping_cross_pair(scene(det("car", 0, 0, 10, 10), det("person", 20, 20, 30, 30)))
    assert not P.exists_nonoverlapping_cross_pair(scene(det("car", 0, 0, 10, 10), det("person", 5, 5, 15, 15)))
    assert not P.exists_nonoverlapping_cross_pair(scene(det("car", 0, 0, 10, 10), det("car", 20, 20, 30, 30)))

    assert P.single_instance_class_exists(counts_scene(car=3, person=1))
    assert not P.single_instance_class_exists(counts_scene(car=2, person=2))
    assert P.single_instance_class_exists(counts_scene(dog=1))

    assert P.min_detections(counts_scene(car=3), 3)
    assert not P.min_detections(counts_scene(car=8), 9)
    assert not P.min_detections(scene(), 1)


# --- realizer examples -------------------------------------------------------------


def test_directional_example():
    s = scene(det("car", 200, 100, 300, 180), det("person", 50, 110, 90, 180))
    got = answers("RightOf", s)
    assert got[R.Q_RIGHT_OF.format(object_1="car", object_2="person")] == "Yes"
    assert got[R.Q_RIGHT_OF.format(object_1="person", object_2="car")] == "No"


def test_directional_overlap_only_blocked_by_predicate():
    s = scene(det("car", 0, 0, 50, 50), det("person", 40, 40, 90, 90))
    pairs, outcome = run_template(REG["RightOf"], s, CFG)
    assert pairs == [] and not outcome.passed and not outcome.apply_invoked


def test_directional_three_classes():
    s = scene(det("a", 0, 0, 10, 10), det("b", 100, 0, 110, 10), det("c", 200, 0, 210, 10))
    got = answers("RightOf", s)
    q = lambda x, y: R.Q_RIGHT_OF.format(object_1=x, object_2=y)
    for x, y in [("b", "a"), ("c", "a"), ("c", "b")]:
        assert got[q(x, y)] == "Yes" and got[q(y, x)] == "No"


def test_leftmost_examples():
    s = scene(det("person", 10, 50, 60, 150), det("car", 120, 50, 160, 150), width=400, height=300)
    assert answers("LeftMost", s) == {R.Q_LEFTMOST: "person"}
    s = scene(det("person", 10, 50, 60, 150), det("car", 15, 160, 50, 200), width=400, height=300)
    assert answers("LeftMost", s) == {}
    s = scene(det("person", 10, 50, 250, 150), det("car", 300, 50, 320, 150), width=400, height=300)
    assert answers("LeftMost", s) == {}


def test_rightmost_mirrors_leftmost():
    s = scene(det("person", 340, 50, 390, 150), det("car", 100, 50, 200, 150), width=400, height=300)
    assert answers("RightMost", s) == {R.Q_RIGHTMOST: "person"}


def test_extremal_aspect():
    s = scene(det("bus", 10, 50, 110, 90), det("car", 300, 50, 320, 150), width=400, height=300)
    assert answers("LeftMostWidthVsHeight", s) == {R.Q_LEFTMOST_WVH: "Yes"}
    s = scene(det("bus", 10, 50, 50, 90), det("car", 300, 50, 320, 150), width=400, height=300)
    assert answers("LeftMostWidthVsHeight", s) == {}


def test_size_examples():
    s = scene(det("truck", 0, 0, 100, 100), det("car", 200, 0, 240, 100))
    assert answers("LargestAppearance", s) == {R.Q_LARGEST: "truck"}
    s = scene(det("truck", 0, 0, 100, 100), det("car", 200, 0, 280, 100))
    assert answers("LargestAppearance", s) == {}
    s = scene(det("truck", 0, 0, 90, 100), det("car", 200, 0, 230, 100), det("person", 300, 0, 310, 100))
    assert answers("RankLargestK(3)", s) == {R.Q_RANK_LARGEST.format(k=3): "truck, car, person"}


def test_width_vs_height():
    s = scene(det("bus", 0, 0, 100, 40), det("sign", 200, 0, 240, 100), det("box", 300, 0, 350, 50),
              det("car", 400, 0, 410, 10), det("car", 420, 0, 430, 10))
    got = answers("WidthVsHeight", s)
    assert got == {R.Q_WIDTH_VS_HEIGHT.format(object_1="bus"): "Yes",
                   R.Q_WIDTH_VS_HEIGHT.format(object_1="sign"): "No"}


def test_frequency_examples():
    s = counts_scene(car=7, person=2)
    assert answers("MostAppearance", s) == {R.Q_MOST: "car"}
    assert answers("LeastAppearance", s) == {R.Q_LEAST: "person"}
    s = counts_scene(car=3, person=2)
    assert answers("MostAppearance", s) == {R.Q_MOST: "car"}
    s = counts_scene(car=2, person=2)
    assert answers("MostAppearance", s) == {} and answers("LeastAppearance", s) == {}


def test_counting_examples():
    assert answers("HowMany", counts_scene(car=3)) == {R.Q_HOW_MANY.format(object_1="car"): "3"}
    got = answers("AreMore", counts_scene(car=5, person=2))
    assert got == {R.Q_ARE_MORE.format(object_1="car", object_2="person"): "Yes",
                   R.Q_ARE_MORE.format(object_1="person", object_2="car"): "No"}


def test_threshold_targets_example():
    assert R.threshold_targets(6, 2.0) == (3, 12)
    s = counts_scene(car=6)
    assert answers("MoreThanThresholdHowMany", s) == {
        R.Q_MORE_THAN.format(target=3, object_1="car"): "Yes",
        R.Q_MORE_THAN.format(target=12, object_1="car"): "No",
    }
    assert answers("LessThanThresholdHowMany", s) == {
        R.Q_LESS_THAN.format(target=12, object_1="car"): "Yes",
        R.Q_LESS_THAN.format(target=3, object_1="car"): "No",
    }


def test_less_than_target_one_asks_absence():
    got = answers("LessThanThresholdHowMany", counts_scene(car=1))
    assert got == {R.Q_LESS_THAN.format(target=2, object_1="car"): "Yes",
                   R.Q_ABSENT.format(object_1="car"): "No"}


def test_which_more_lists_classes_alphabetically():
    got = answers("WhichMore", counts_scene(zebra=6, ant=2, cat=1))
    assert got == {R.Q_WHICH_MORE.format(object_1="ant", object_2="cat", object_3="zebra"): "zebra"}


@given(st.integers(1, 400), st.integers(0, 2**63))
def test_count_buckets_contain_n_exactly_once(n, seed):
    buckets, order = R.count_buckets(n, seed)
    assert sorted(order) == [0, 1, 2]
    assert sum(lo <= n <= hi for lo, hi in buckets) == 1
    assert all(lo >= 1 and lo <= hi for lo, hi in buckets)
    assert all(buckets[i][1] + 1 == buckets[i + 1][0] for i in range(2))


def test_multichoice_example():
    pairs, _ = run_template(REG["MultiChoiceHowMany"], counts_scene(car=9), CFG)
    (p,) = pairs
    assert p.choices[3] == R.UNSURE and p.answer in "ABC"
    lo, hi = map(int, p.choices["ABC".index(p.answer)].split("-"))
    assert lo <= 9 <= hi


def test_localization_examples():
    s = scene(det("dog", 10, 0, 80, 5), width=300, height=200)
    assert answers("IsObjectCentered", s) == {R.Q_CENTERED.format(object_1="dog"): "A"}
    s = scene(det("dog", 95, 0, 150, 5), width=300, height=200)
    assert answers("IsObjectCentered", s) == {}
    s = scene(det("cat", 210, 160, 390, 290), width=400, height=300)
    assert answers("Quadrants(2,2)", s) == {R.Q_QUADRANTS.format(N=2, M=2, object_1="cat"): "4"}


def test_arrangement_examples():
    s = scene(det("car", 0, 90, 20, 110), det("car", 100, 90, 120, 110), det("car", 200, 90, 220, 110),
              width=640, height=300)
    assert answers("ObjectsInRow", s) == {R.Q_IN_ROW: "Yes"}
    # centers (0,0),(50,300),(100,0): normalized variance 0.222 on H=300
    s = scene(det("car", 0, 0, 2, 2), det("car", 49, 298, 51, 300), det("car", 98, 0, 102, 2),
              width=640, height=300)
    assert answers("ObjectsInRow", s) == {R.Q_IN_ROW: "No"}
    pairs, outcome = run_template(REG["MostClusteredObjects"], counts_scene(car=8), CFG)
    assert pairs == [] and outcome.failed_predicate == "min_detections(9)"


def test_in_line_correct_option():
    row = [det("car", x, 100, x + 10, 120) for x in (0, 100, 200)]
    others = [det("person", 250, 300, 260, 340), det("dog", 400, 10, 420, 30), det("person", 500, 400, 530, 470)]
    pairs, _ = run_template(REG["ObjectsInLine"], scene(*row, *others), CFG)
    (p,) = pairs
    assert p.choices[3] == R.NO_ROW
    assert p.choices["ABC".index(p.answer)] == "3 car"


def test_depth_examples():
    s = scene(det("car", 0, 0, 10, 10, 5.0), det("person", 100, 0, 110, 10, 12.0))
    got = answers("Closer", s)
    assert got[R.Q_CLOSER.format(object_1="car", object_2="person")] == "Yes"
    assert got[R.Q_CLOSER.format(object_1="person", object_2="car")] == "No"
    s = scene(det("car", 0, 0, 10, 10, 5.0), det("person", 100, 0, 110, 10, 6.0))
    assert answers("Closer", s) == {}
    s = scene(det("car", 0, 0, 10, 10), det("person", 100, 0, 110, 10))
    pairs, outcome = run_template(REG["Closer"], s, CFG)
    assert pairs == [] and outcome.failed_predicate == "has_depth"


def test_depth_ranking():
    s = scene(det("a", 0, 0, 5, 5, 1.0), det("b", 10, 0, 15, 5, 2.0), det("c", 20, 0, 25, 5, 4.0),
              det("d", 30, 0, 35, 5, 9.0))
    assert answers("DepthRanking(3)", s) == {R.Q_DEPTH_RANK.format(k=3): "a, b, c"}


# --- sieve runner --------------------------------------------------------------------


def test_run_template_outcomes():
    _, outcome = run_template(REG["RightOf"], counts_scene(car=4), CFG)
    assert outcome.failed_predicate == "at_least_x_classes(2)" and not outcome.apply_invoked
    pairs, outcome = run_template(REG["LargestAppearance"], counts_scene(car=1, person=1), CFG)
    assert outcome.passed and outcome.apply_invoked and outcome.empty and pairs == []
    pairs, outcome = run_template(REG["HowMany"], counts_scene(a=1, b=2, c=3, d=4), CFG)
    assert len(pairs) == outcome.pairs == 4 and not outcome.empty


def test_realizer_fault_is_captured():
    from dataclasses import replace

    def boom(scene, cfg, seed):
        raise RuntimeError("bad template")

    desc = replace(REG["HowMany"], realizer=boom)
    pairs, outcome = run_template(desc, counts_scene(car=1), CFG)
    assert pairs == [] and "bad template" in outcome.fault


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_sieve_transparency_and_soundness(seed):
    s = random_scene(seed)
    for desc in REG.values():
        on, outcome = run_template(desc, s, CFG, seed=3, sieve=True)
        off, _ = run_template(desc, s, CFG, seed=3, sieve=False)
        assert on == off
        if not all(p(s) for p in desc.predicates):
            assert not outcome.apply_invoked


def test_registry_shape():
    assert len(REG) == 25
    assert sum(d.requires_depth for d in REG.values()) == 3
    for d in REG.values():
        assert d.predicates
    assert [d.template_id for d in resolve_templates(["RankLargestK", "HowMany"], REG)] == [
        "RankLargestK(3)", "HowMany"]
    with pytest.raises(KeyError):
        resolve_templates(["Nope"], REG)
    assert len(resolve_templates(None, REG, include_depth=False)) == 22


def test_config_validation_and_coercion():
    with pytest.raises(ValueError):
        TemplateConfig(count_margin_ratio=1.0)
    with pytest.raises(ValueError):
        TemplateConfig(grid_rows=4, grid_cols=4)
    cfg = TemplateConfig.from_mapping({"count_margin_ratio": "2.5", "half_image_rule": "off", "rank_k": "4"})
    assert (cfg.count_margin_ratio, cfg.half_image_rule, cfg.rank_k) == (2.5, False, 4)
    assert "RankLargestK(4)" in build_registry(cfg)
    with pytest.raises(KeyError):
        TemplateConfig.from_mapping({"nope": 1})


def test_margin_config_changes_emission():
    s = counts_scene(car=3, person=2)
    assert answers("MostAppearance", s, TemplateConfig(count_margin_ratio=2.0)) == {}
