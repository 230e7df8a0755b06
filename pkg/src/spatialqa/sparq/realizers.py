"""Question realizers, grouped into families.

Every realizer is total: it re-checks its own preconditions and returns an
empty list when they fail, so running it without the predicate sieve gives
the same output as running it behind the sieve.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .. import geometry as geo
from ..scene_model import Category, Detection, QAPair, SceneRecord, class_counts, class_groups
from ..seeding import derive_seed, rng_for
from .config import TemplateConfig
from . import predicates as P

YES, NO = "Yes", "No"
LETTERS = "ABCD"

Q_RIGHT_OF = "Is there at least one {object_1} to the right of any {object_2}?"
Q_LEFT_OF = "Is there at least one {object_1} to the left of any {object_2}?"
Q_LEFTMOST = "What is the leftmost object in the image?"
Q_RIGHTMOST = "What is the rightmost object in the image?"
Q_LEFTMOST_WVH = "Does the leftmost object in the image appear to be wider than it is tall?"
Q_RIGHTMOST_WVH = "Does the rightmost object in the image appear to be wider than it is tall?"
Q_LARGEST = (
    "If you were to draw a tight box around each object in the image, "
    "which type of object would have the biggest box?"
)
Q_RANK_LARGEST = (
    "Rank the {k} kinds of objects that appear the largest (by pixel area) in the image "
    "from largest to smallest. Provide your answer as a comma-separated list of object names only."
)
Q_WIDTH_VS_HEIGHT = "Is the width of the {object_1} appear to be larger than the height?"
Q_MOST = "What kind of object appears the most frequently in the image?"
Q_LEAST = "What kind of object appears the least frequently in the image?"
Q_HOW_MANY = "How many {object_1}(s) are there in this image?"
Q_ARE_MORE = "Are there more {object_1}(s) than {object_2}(s)?"
Q_WHICH_MORE = "What appears the most in this image: {object_1}s, {object_2}s, or {object_3}s?"
Q_MORE_THAN = "Are there {target} or more {object_1}(s) in this image? Respond Yes/No."
Q_LESS_THAN = "Are there less than {target} {object_1}(s) in this image? Respond Yes/No."
Q_ABSENT = "Are there no {object_1}(s) in this image? Respond Yes/No."
Q_MULTI_HOW_MANY = (
    "How many {object_1}(s) are in the image? Choose one: A) {range_a}, B) {range_b}, "
    "C) {range_c}, D) Unsure / Not Visible. Respond with the letter only."
)
Q_CENTERED = (
    "Divide the image into thirds. In which third does the {object_1} primarily appear? "
    "Respond with the letter only: A) left third, B) middle third, C) right third."
)
Q_QUADRANTS = (
    "Divide the image into a grid of {N} rows x {M} columns. Number the cells from left to "
    "right, then top to bottom, starting with 1. In what cell does the {object_1} appear?"
)
Q_IN_ROW = "Are there any objects arranged in a row?"
Q_IN_LINE = (
    "Which objects appear to be arranged in a row? A) {option_a}, B) {option_b}, "
    "C) {option_c}, D) No clear row arrangement. Respond with the letter only."
)
Q_CLUSTERED = (
    "Which group of objects appears most tightly clustered? A) {option_a}, B) {option_b}, "
    "C) {option_c}, D) No clear clusters. Respond with the letter only."
)
Q_CLOSER = "Is there at least one {object_1} that appears closer to the camera than any {object_2}?"
Q_FARTHER = "Is there at least one {object_1} that appears farther from the camera than any {object_2}?"
Q_DEPTH_RANK = (
    "Rank the {k} kinds of objects that appear the closest to the camera in the image from "
    "closest to farthest. Provide your answer as a comma-separated list of object names only."
)

THIRD_CHOICES = ("left third", "middle third", "right third")
UNSURE = "Unsure / Not Visible"
NO_ROW = "No clear row arrangement"
NO_CLUSTER = "No clear clusters"


def _qa(
    scene: SceneRecord,
    template_id: str,
    category: Category,
    question: str,
    answer: str,
    objects: Sequence[str],
    seed: int,
    key: str = "",
    choices: Optional[Sequence[str]] = None,
) -> QAPair:
    return QAPair(
        image_id=scene.image_id,
        template_id=template_id,
        category=category,
        question=question,
        answer=answer,
        choices=tuple(choices) if choices is not None else None,
        objects_involved=tuple(objects),
        generation_seed=derive_seed(seed, scene.image_id, template_id, key),
    )


def _yes_no(flag: bool) -> str:
    return YES if flag else NO


def _single_instance(scene: SceneRecord) -> List[Tuple[str, Detection]]:
    groups = class_groups(scene)
    return [(label, dets[0]) for label, dets in sorted(groups.items()) if len(dets) == 1]


def _passes_gap(values: Sequence[float], ratio: float, k: int) -> bool:
    """values sorted so that values[i] should dominate values[i+1] by ``ratio``.

    Checks the k-1 consecutive gaps inside the top k and, when a (k+1)-th
    value exists, the gap that separates the top k from the rest.
    """
    last = min(k, len(values) - 1)
    for i in range(last):
        if not (values[i] >= ratio * values[i + 1] and values[i] > values[i + 1]):
            return False
    return True


def _passes_gap_ascending(values: Sequence[float], ratio: float, k: int) -> bool:
    last = min(k, len(values) - 1)
    for i in range(last):
        if not (values[i + 1] >= ratio * values[i] and values[i + 1] > values[i]):
            return False
    return True


# --- directional ----------------------------------------------------------


def _vertical_gate(a: geo.BBox, b: geo.BBox, cfg: TemplateConfig) -> bool:
    if not cfg.vertical_overlap_gate:
        return True
    return geo.vertical_overlap_fraction(a, b) >= cfg.vertical_overlap_min


def realize_directional(scene: SceneRecord, cfg: TemplateConfig, seed: int, template_id: str,
                        right: bool) -> List[QAPair]:
    if not (P.at_least_x_classes(scene, 2) and P.exists_nonoverlapping_cross_pair(scene)):
        return []
    relation = geo.strictly_right_of if right else geo.strictly_left_of
    pattern = Q_RIGHT_OF if right else Q_LEFT_OF
    groups = class_groups(scene)
    labels = sorted(groups)
    out = []
    for c1 in labels:
        for c2 in labels:
            if c1 == c2:
                continue
            found = False
            for d1 in groups[c1]:
                for d2 in groups[c2]:
                    b1, b2 = d1.bbox, d2.bbox
                    if relation(b1, b2) and geo.iou(b1, b2) == 0.0 and _vertical_gate(b1, b2, cfg):
                        found = True
                        break
                if found:
                    break
            q = pattern.format(object_1=c1, object_2=c2)
            out.append(_qa(scene, template_id, Category.SPATIAL_RELATIONS, q, _yes_no(found),
                           (c1, c2), seed, key=f"{c1}|{c2}"))
    return out


def realize_left_of(scene, cfg, seed, template_id="LeftOf"):
    return realize_directional(scene, cfg, seed, template_id, right=False)


def realize_right_of(scene, cfg, seed, template_id="RightOf"):
    return realize_directional(scene, cfg, seed, template_id, right=True)


# --- extremal position ----------------------------------------------------


def extremal_detection(scene: SceneRecord, cfg: TemplateConfig, leftmost: bool) -> Optional[Detection]:
    """The unambiguous leftmost (or rightmost) detection, or None."""
    dets = scene.detections
    if not dets:
        return None
    half = scene.width / 2.0
    if leftmost:
        order = sorted(dets, key=lambda d: (d.bbox.x_min, d.bbox.x_max, d.class_label))
        first = order[0]
        if cfg.half_image_rule and not first.bbox.x_max <= half:
            return None
        if len(order) > 1:
            gap = order[1].bbox.x_min - first.bbox.x_min
            if not (gap >= cfg.separation_margin_px and gap > 0):
                return None
    else:
        order = sorted(dets, key=lambda d: (-d.bbox.x_max, -d.bbox.x_min, d.class_label))
        first = order[0]
        if cfg.half_image_rule and not first.bbox.x_min >= half:
            return None
        if len(order) > 1:
            gap = first.bbox.x_max - order[1].bbox.x_max
            if not (gap >= cfg.separation_margin_px and gap > 0):
                return None
    return first


def realize_extremal(scene: SceneRecord, cfg: TemplateConfig, seed: int, template_id: str,
                     leftmost: bool) -> List[QAPair]:
    if not P.single_instance_class_exists(scene):
        return []
    det = extremal_detection(scene, cfg, leftmost)
    if det is None:
        return []
    q = Q_LEFTMOST if leftmost else Q_RIGHTMOST
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, q, det.class_label,
                (det.class_label,), seed)]


def realize_extremal_aspect(scene: SceneRecord, cfg: TemplateConfig, seed: int, template_id: str,
                            leftmost: bool) -> List[QAPair]:
    if not P.single_instance_class_exists(scene):
        return []
    det = extremal_detection(scene, cfg, leftmost)
    if det is None:
        return []
    if class_counts(scene)[det.class_label] != 1:
        return []
    for other in scene.detections:
        if other is not det and geo.iou(det.bbox, other.bbox) > 0.0:
            return []
    aspect = geo.aspect_exceeds(det.bbox, cfg.aspect_ratio_threshold)
    if aspect is geo.Aspect.NEAR_SQUARE:
        return []
    q = Q_LEFTMOST_WVH if leftmost else Q_RIGHTMOST_WVH
    return [_qa(scene, template_id, Category.SIZE_ASPECT, q, _yes_no(aspect is geo.Aspect.WIDER),
                (det.class_label,), seed)]


def realize_leftmost(scene, cfg, seed, template_id="LeftMost"):
    return realize_extremal(scene, cfg, seed, template_id, leftmost=True)


def realize_rightmost(scene, cfg, seed, template_id="RightMost"):
    return realize_extremal(scene, cfg, seed, template_id, leftmost=False)


def realize_leftmost_wvh(scene, cfg, seed, template_id="LeftMostWidthVsHeight"):
    return realize_extremal_aspect(scene, cfg, seed, template_id, leftmost=True)


def realize_rightmost_wvh(scene, cfg, seed, template_id="RightMostWidthVsHeight"):
    return realize_extremal_aspect(scene, cfg, seed, template_id, leftmost=False)


# --- size -----------------------------------------------------------------


def _max_area_ranking(scene: SceneRecord) -> List[Tuple[str, float]]:
    best: Dict[str, float] = {}
    for det in scene.detections:
        a = det.bbox.area
        if a > best.get(det.class_label, 0.0):
            best[det.class_label] = a
    return sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))


def realize_largest(scene, cfg, seed, template_id="LargestAppearance"):
    if not P.at_least_x_classes(scene, 2):
        return []
    ranking = _max_area_ranking(scene)
    (top, a1), (_, a2) = ranking[0], ranking[1]
    if not (a1 >= cfg.area_margin_ratio * a2 and a1 > a2):
        return []
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, Q_LARGEST, top, (top,), seed)]


def realize_rank_largest(scene, cfg, seed, template_id=None):
    k = cfg.rank_k
    template_id = template_id or f"RankLargestK({k})"
    if not P.at_least_x_classes(scene, k):
        return []
    ranking = _max_area_ranking(scene)
    if not _passes_gap([a for _, a in ranking], cfg.rank_gap_ratio, k):
        return []
    names = [label for label, _ in ranking[:k]]
    q = Q_RANK_LARGEST.format(k=k)
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, q, ", ".join(names), names, seed)]


def realize_width_vs_height(scene, cfg, seed, template_id="WidthVsHeight"):
    if not P.single_instance_class_exists(scene):
        return []
    out = []
    for label, det in _single_instance(scene):
        aspect = geo.aspect_exceeds(det.bbox, cfg.aspect_ratio_threshold)
        if aspect is geo.Aspect.NEAR_SQUARE:
            continue
        q = Q_WIDTH_VS_HEIGHT.format(object_1=label)
        out.append(_qa(scene, template_id, Category.SIZE_ASPECT, q,
                       _yes_no(aspect is geo.Aspect.WIDER), (label,), seed, key=label))
    return out


# --- frequency ------------------------------------------------------------


def realize_most(scene, cfg, seed, template_id="MostAppearance"):
    if not P.at_least_x_classes(scene, 2):
        return []
    ranked = sorted(class_counts(scene).items(), key=lambda kv: (-kv[1], kv[0]))
    (top, n1), (_, n2) = ranked[0], ranked[1]
    if not (n1 >= cfg.count_margin_ratio * n2 and n1 > n2):
        return []
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, Q_MOST, top, (top,), seed)]


def realize_least(scene, cfg, seed, template_id="LeastAppearance"):
    if not P.at_least_x_classes(scene, 2):
        return []
    ranked = sorted(class_counts(scene).items(), key=lambda kv: (kv[1], kv[0]))
    (bottom, n1), (_, n2) = ranked[0], ranked[1]
    if not (n2 >= cfg.count_margin_ratio * n1 and n2 > n1):
        return []
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, Q_LEAST, bottom, (bottom,), seed)]


# --- counting -------------------------------------------------------------


def realize_how_many(scene, cfg, seed, template_id="HowMany"):
    if not P.at_least_x_classes(scene, 1):
        return []
    return [
        _qa(scene, template_id, Category.COUNTING, Q_HOW_MANY.format(object_1=label), str(n),
            (label,), seed, key=label)
        for label, n in sorted(class_counts(scene).items())
    ]


def realize_are_more(scene, cfg, seed, template_id="AreMore"):
    if not P.at_least_x_classes(scene, 2):
        return []
    counts = class_counts(scene)
    labels = sorted(counts)
    out = []
    for c1 in labels:
        for c2 in labels:
            if c1 == c2:
                continue
            hi, lo = max(counts[c1], counts[c2]), min(counts[c1], counts[c2])
            if not (hi >= cfg.count_margin_ratio * lo and hi > lo):
                continue
            q = Q_ARE_MORE.format(object_1=c1, object_2=c2)
            out.append(_qa(scene, template_id, Category.COUNTING, q,
                           _yes_no(counts[c1] > counts[c2]), (c1, c2), seed, key=f"{c1}|{c2}"))
    return out


def realize_which_more(scene, cfg, seed, template_id="WhichMore"):
    if not P.at_least_x_classes(scene, 2):
        return []
    counts = class_counts(scene)
    out = []
    for trio in combinations(sorted(counts), 3):
        ranked = sorted(trio, key=lambda c: (-counts[c], c))
        n1, n2 = counts[ranked[0]], counts[ranked[1]]
        if not (n1 >= cfg.count_margin_ratio * n2 and n1 > n2):
            continue
        q = Q_WHICH_MORE.format(object_1=trio[0], object_2=trio[1], object_3=trio[2])
        out.append(_qa(scene, template_id, Category.COUNTING, q, ranked[0], trio, seed,
                       key="|".join(trio)))
    return out


def threshold_targets(n: int, ratio: float) -> Tuple[int, int]:
    """(lower, upper) targets with lower <= n < upper."""
    return max(1, math.ceil(n / ratio)), math.ceil(n * ratio)


def realize_more_than(scene, cfg, seed, template_id="MoreThanThresholdHowMany"):
    if not P.at_least_x_classes(scene, 1):
        return []
    out = []
    for label, n in sorted(class_counts(scene).items()):
        for target in threshold_targets(n, cfg.threshold_question_ratio):
            q = Q_MORE_THAN.format(target=target, object_1=label)
            out.append(_qa(scene, template_id, Category.COUNTING, q, _yes_no(n >= target),
                           (label,), seed, key=f"{label}|{target}"))
    return out


def realize_less_than(scene, cfg, seed, template_id="LessThanThresholdHowMany"):
    if not P.at_least_x_classes(scene, 1):
        return []
    out = []
    for label, n in sorted(class_counts(scene).items()):
        lower, upper = threshold_targets(n, cfg.threshold_question_ratio)
        for target in (upper, lower):
            if target == 1:
                q = Q_ABSENT.format(object_1=label)
            else:
                q = Q_LESS_THAN.format(target=target, object_1=label)
            out.append(_qa(scene, template_id, Category.COUNTING, q, _yes_no(n < target),
                           (label,), seed, key=f"{label}|{target}"))
    return out


def count_buckets(n: int, gen_seed: int) -> Tuple[List[Tuple[int, int]], List[int]]:
    """Three contiguous count ranges, one holding ``n``, and their letter order.

    Returns (buckets low..high, order) where ``order[i]`` is the bucket shown
    at letter i.
    """
    rng = rng_for(gen_seed)
    half = max(1, math.ceil(math.sqrt(n)))
    width = half + 1
    offset = rng.randrange(width)
    start = max(1, n - offset)
    feasible = [p for p in range(3) if start - p * width >= 1]
    position = rng.choice(feasible)
    low = start - position * width
    buckets = [(low + i * width, low + (i + 1) * width - 1) for i in range(3)]
    order = [0, 1, 2]
    rng.shuffle(order)
    return buckets, order


def realize_multichoice_how_many(scene, cfg, seed, template_id="MultiChoiceHowMany"):
    if not P.at_least_x_classes(scene, 1):
        return []
    out = []
    for label, n in sorted(class_counts(scene).items()):
        if n < cfg.multichoice_min_count:
            continue
        gen_seed = derive_seed(seed, scene.image_id, template_id, label)
        buckets, order = count_buckets(n, gen_seed)
        shown = [f"{buckets[i][0]}-{buckets[i][1]}" for i in order]
        answer = next(LETTERS[pos] for pos, i in enumerate(order) if buckets[i][0] <= n <= buckets[i][1])
        q = Q_MULTI_HOW_MANY.format(object_1=label, range_a=shown[0], range_b=shown[1], range_c=shown[2])
        out.append(_qa(scene, template_id, Category.COUNTING, q, answer, (label,), seed, key=label,
                       choices=shown + [UNSURE]))
    return out


# --- localization ---------------------------------------------------------


def realize_centered(scene, cfg, seed, template_id="IsObjectCentered"):
    if not P.single_instance_class_exists(scene):
        return []
    out = []
    for label, det in _single_instance(scene):
        third = geo.third_assignment(det.bbox, scene.width, cfg.buffer_frac)
        if third is geo.Third.SPANNING:
            continue
        out.append(_qa(scene, template_id, Category.LOCALIZATION, Q_CENTERED.format(object_1=label),
                       third.value, (label,), seed, key=label, choices=THIRD_CHOICES))
    return out


def realize_quadrants(scene, cfg, seed, template_id=None):
    grid = cfg.grid
    template_id = template_id or f"Quadrants({grid.rows},{grid.cols})"
    if not P.single_instance_class_exists(scene):
        return []
    out = []
    for label, det in _single_instance(scene):
        cell = geo.grid_cell(det.bbox, scene.width, scene.height, grid, cfg.grid_margin_frac)
        if cell is None:
            continue
        q = Q_QUADRANTS.format(N=grid.rows, M=grid.cols, object_1=label)
        out.append(_qa(scene, template_id, Category.LOCALIZATION, q, str(cell), (label,), seed, key=label))
    return out


# --- arrangement ----------------------------------------------------------


def describe_multiset(labels: Sequence[str]) -> str:
    counts: Dict[str, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    return ", ".join(f"{counts[k]} {k}" for k in sorted(counts))


def sub_multisets(counts: Dict[str, int], size: int, cap: int) -> List[str]:
    """Descriptions of sub-multisets of ``counts`` with ``size`` items, at most ``cap``."""
    labels = sorted(counts)
    found: List[str] = []

    def walk(i: int, remaining: int, chosen: List[Tuple[str, int]]) -> None:
        if len(found) >= cap:
            return
        if remaining == 0:
            found.append(", ".join(f"{n} {lab}" for lab, n in chosen))
            return
        if i == len(labels):
            return
        label = labels[i]
        for take in range(min(counts[label], remaining), -1, -1):
            if take:
                chosen.append((label, take))
            walk(i + 1, remaining - take, chosen)
            if take:
                chosen.pop()

    walk(0, size, [])
    return found


def row_normalizer(scene: SceneRecord, cfg: TemplateConfig) -> float:
    if cfg.row_normalizer == "width":
        return float(scene.width)
    if cfg.row_normalizer == "diagonal":
        return math.hypot(scene.width, scene.height)
    return float(scene.height)


def row_windows(scene: SceneRecord, cfg: TemplateConfig) -> List[Tuple[float, int, int, List[int]]]:
    """Qualifying windows as (variance, size, start, detection indices)."""
    centers = [d.bbox.center for d in scene.detections]
    order = sorted(range(len(centers)),
                   key=lambda i: (centers[i][0], centers[i][1], scene.detections[i].class_label, i))
    norm = row_normalizer(scene, cfg)
    found = []
    n = len(order)
    for start in range(n):
        for end in range(start + 3, n + 1):
            idx = order[start:end]
            try:
                fit = geo.fit_row([centers[i] for i in idx], norm)
            except geo.DegenerateFit:
                continue
            if fit.normalized_residual_variance < cfg.row_variance_threshold:
                found.append((fit.normalized_residual_variance, end - start, start, idx))
    return found


def realize_in_row(scene, cfg, seed, template_id="ObjectsInRow"):
    if not P.min_detections(scene, 3):
        return []
    any_row = bool(row_windows(scene, cfg))
    labels = sorted({d.class_label for d in scene.detections})
    return [_qa(scene, template_id, Category.SPATIAL_RELATIONS, Q_IN_ROW, _yes_no(any_row), labels, seed)]


def _options_question(scene, cfg, seed, template_id, pattern, none_text, correct, correct_size,
                      exclude) -> List[QAPair]:
    gen_seed = derive_seed(seed, scene.image_id, template_id, "")
    rng = rng_for(gen_seed)
    counts = class_counts(scene)
    if correct is None:
        pool = sub_multisets(counts, 3, cfg.option_pool_cap)
        if len(pool) < 3:
            return []
        options = rng.sample(pool, 3)
        answer = "D"
    else:
        pool = [m for m in sub_multisets(counts, correct_size, cfg.option_pool_cap) if m not in exclude]
        if len(pool) < 2:
            return []
        options = [correct] + rng.sample(pool, 2)
        rng.shuffle(options)
        answer = LETTERS[options.index(correct)]
    q = pattern.format(option_a=options[0], option_b=options[1], option_c=options[2])
    labels = sorted(counts)
    return [_qa(scene, template_id, Category.SPATIAL_RELATIONS, q, answer, labels, seed,
                choices=options + [none_text])]


def realize_in_line(scene, cfg, seed, template_id="ObjectsInLine"):
    if not P.min_detections(scene, 3):
        return []
    windows = row_windows(scene, cfg)
    labels_of = [d.class_label for d in scene.detections]
    if not windows:
        return _options_question(scene, cfg, seed, template_id, Q_IN_LINE, NO_ROW, None, 0, set())
    best = min(windows, key=lambda w: (w[0], -w[1], w[2]))
    correct = describe_multiset([labels_of[i] for i in best[3]])
    exclude = {describe_multiset([labels_of[i] for i in w[3]]) for w in windows}
    return _options_question(scene, cfg, seed, template_id, Q_IN_LINE, NO_ROW, correct, best[1], exclude)


def most_compact_cluster(scene: SceneRecord, cfg: TemplateConfig) -> Tuple[Optional[List[int]], List[List[int]]]:
    centers = [d.bbox.center for d in scene.detections]
    clusters, _ = geo.density_clusters(centers, cfg.eps_frac, cfg.min_pts, scene.width, scene.height)
    if not clusters:
        return None, []
    best = min(clusters, key=lambda c: (geo.compactness([centers[i] for i in c]), -len(c), c[0]))
    return best, clusters


def realize_clustered(scene, cfg, seed, template_id="MostClusteredObjects"):
    if not P.min_detections(scene, 9):
        return []
    best, clusters = most_compact_cluster(scene, cfg)
    labels_of = [d.class_label for d in scene.detections]
    if best is None:
        return _options_question(scene, cfg, seed, template_id, Q_CLUSTERED, NO_CLUSTER, None, 0, set())
    correct = describe_multiset([labels_of[i] for i in best])
    exclude = {describe_multiset([labels_of[i] for i in c]) for c in clusters}
    return _options_question(scene, cfg, seed, template_id, Q_CLUSTERED, NO_CLUSTER, correct, len(best),
                             exclude)


# --- depth ----------------------------------------------------------------


def realize_depth_compare(scene: SceneRecord, cfg: TemplateConfig, seed: int, template_id: str,
                          closer: bool) -> List[QAPair]:
    if not (P.has_depth(scene) and P.at_least_x_classes(scene, 2)
            and P.exists_nonoverlapping_cross_pair(scene)):
        return []
    m = cfg.depth_margin_ratio
    groups = class_groups(scene)
    labels = sorted(groups)
    pattern = Q_CLOSER if closer else Q_FARTHER
    out = []
    for c1 in labels:
        for c2 in labels:
            if c1 == c2:
                continue
            yes = False
            clear_no = True
            seen = False
            for d1 in groups[c1]:
                for d2 in groups[c2]:
                    if geo.iou(d1.bbox, d2.bbox) != 0.0:
                        continue
                    seen = True
                    near, far = (d1.depth, d2.depth) if closer else (d2.depth, d1.depth)
                    if far >= m * near:
                        yes = True
                    elif not near >= m * far:
                        clear_no = False
            if not seen:
                continue
            if yes:
                answer = YES
            elif clear_no:
                answer = NO
            else:
                continue
            q = pattern.format(object_1=c1, object_2=c2)
            out.append(_qa(scene, template_id, Category.SPATIAL_RELATIONS, q, answer, (c1, c2), seed,
                           key=f"{c1}|{c2}"))
    return out


def realize_closer(scene, cfg, seed, template_id="Closer"):
    return realize_depth_compare(scene, cfg, seed, template_id, closer=True)


def realize_farther(scene, cfg, seed, template_id="Farther"):
    return realize_depth_compare(scene, cfg, seed, template_id, closer=False)


def realize_depth_ranking(scene, cfg, seed, template_id=None):
    k = cfg.depth_rank_k
    template_id = template_id or f"DepthRanking({k})"
    if not (P.has_depth(scene) and P.at_least_x_classes(scene, k)):
        return []
    closest: Dict[str, float] = {}
    for det in scene.detections:
        closest[det.class_label] = min(closest.get(det.class_label, math.inf), det.depth)
    ranking = sorted(closest.items(), key=lambda kv: (kv[1], kv[0]))
    if not _passes_gap_ascending([d for _, d in ranking], cfg.depth_margin_ratio, k):
        return []
    names = [label for label, _ in ranking[:k]]
    q = Q_DEPTH_RANK.format(k=k)
    return [_qa(scene, template_id, Category.RANKING_EXTREMES, q, ", ".join(names), names, seed)]
