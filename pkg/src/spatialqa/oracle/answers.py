"""Brute-force re-derivation of every template's answers.

Nothing here calls the realizers or the sieve. Only question wording, the
seed derivation, and the least-squares/compactness primitives are shared,
so a bug in a realization rule shows up as a disagreement.
"""

from __future__ import annotations

import math
import random
from itertools import combinations, permutations
from typing import Dict, List, Optional, Sequence, Tuple

from ..geometry import DegenerateFit, compactness, fit_row
from ..scene_model import Category, Detection, QAPair, SceneRecord
from ..seeding import derive_seed
from ..sparq import realizers as text
from ..sparq.config import TemplateConfig


def _counts(scene: SceneRecord) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for d in scene.detections:
        out[d.class_label] = out.get(d.class_label, 0) + 1
    return out


def _members(scene: SceneRecord, label: str) -> List[Detection]:
    return [d for d in scene.detections if d.class_label == label]


def _disjoint(a: Detection, b: Detection) -> bool:
    """True when the two boxes share no interior area."""
    ix = min(a.bbox.x_max, b.bbox.x_max) - max(a.bbox.x_min, b.bbox.x_min)
    iy = min(a.bbox.y_max, b.bbox.y_max) - max(a.bbox.y_min, b.bbox.y_min)
    return ix <= 0 or iy <= 0


def _make(scene, template_id, category, question, answer, objects, seed, key="", choices=None):
    return QAPair(scene.image_id, template_id, category, question, answer,
                  tuple(choices) if choices is not None else None, tuple(objects),
                  derive_seed(seed, scene.image_id, template_id, key))


def _yn(flag: bool) -> str:
    return "Yes" if flag else "No"


def _n_classes(scene) -> int:
    return len(_counts(scene))


def _cross_disjoint_exists(scene) -> bool:
    return any(a.class_label != b.class_label and _disjoint(a, b)
               for a, b in combinations(scene.detections, 2))


def _singletons(scene) -> List[Tuple[str, Detection]]:
    c = _counts(scene)
    return [(lab, _members(scene, lab)[0]) for lab in sorted(c) if c[lab] == 1]


def _dominates(big: float, small: float, ratio: float) -> bool:
    return big >= ratio * small and big > small


# --- per-family brute force ---------------------------------------------------


def _directional(scene, cfg, seed, tid, right):
    if _n_classes(scene) < 2 or not _cross_disjoint_exists(scene):
        return []
    out = []
    for c1, c2 in permutations(sorted(_counts(scene)), 2):
        witnesses = []
        for a in _members(scene, c1):
            for b in _members(scene, c2):
                beside = a.bbox.x_min > b.bbox.x_max if right else a.bbox.x_max < b.bbox.x_min
                if not (beside and _disjoint(a, b)):
                    continue
                if cfg.vertical_overlap_gate:
                    ov = min(a.bbox.y_max, b.bbox.y_max) - max(a.bbox.y_min, b.bbox.y_min)
                    smaller = min(a.bbox.y_max - a.bbox.y_min, b.bbox.y_max - b.bbox.y_min)
                    if ov <= 0 or ov / smaller < cfg.vertical_overlap_min:
                        continue
                witnesses.append((a, b))
        pattern = text.Q_RIGHT_OF if right else text.Q_LEFT_OF
        out.append(_make(scene, tid, Category.SPATIAL_RELATIONS, pattern.format(object_1=c1, object_2=c2),
                         _yn(bool(witnesses)), (c1, c2), seed, key=f"{c1}|{c2}"))
    return out


def _extreme(scene, cfg, leftmost) -> Optional[Detection]:
    dets = list(scene.detections)
    if not dets:
        return None
    if leftmost:
        key = lambda d: (d.bbox.x_min, d.bbox.x_max, d.class_label)
    else:
        key = lambda d: (-d.bbox.x_max, -d.bbox.x_min, d.class_label)
    first = min(dets, key=key)
    rest = list(dets)
    rest.remove(first)
    if leftmost:
        if cfg.half_image_rule and first.bbox.x_max > scene.width / 2.0:
            return None
        if rest:
            gap = min(d.bbox.x_min for d in rest) - first.bbox.x_min
            if gap < cfg.separation_margin_px or gap <= 0:
                return None
    else:
        if cfg.half_image_rule and first.bbox.x_min < scene.width / 2.0:
            return None
        if rest:
            gap = first.bbox.x_max - max(d.bbox.x_max for d in rest)
            if gap < cfg.separation_margin_px or gap <= 0:
                return None
    return first


def _aspect(det: Detection, thr: float) -> Optional[bool]:
    w = det.bbox.x_max - det.bbox.x_min
    h = det.bbox.y_max - det.bbox.y_min
    if w >= thr * h:
        return True
    if h >= thr * w:
        return False
    return None


def _extremal(scene, cfg, seed, tid, leftmost, aspect):
    if not any(n == 1 for n in _counts(scene).values()):
        return []
    det = _extreme(scene, cfg, leftmost)
    if det is None:
        return []
    if not aspect:
        q = text.Q_LEFTMOST if leftmost else text.Q_RIGHTMOST
        return [_make(scene, tid, Category.RANKING_EXTREMES, q, det.class_label, (det.class_label,), seed)]
    if _counts(scene)[det.class_label] != 1:
        return []
    if any(o is not det and not _disjoint(o, det) for o in scene.detections):
        return []
    wider = _aspect(det, cfg.aspect_ratio_threshold)
    if wider is None:
        return []
    q = text.Q_LEFTMOST_WVH if leftmost else text.Q_RIGHTMOST_WVH
    return [_make(scene, tid, Category.SIZE_ASPECT, q, _yn(wider), (det.class_label,), seed)]


def _class_max_area(scene) -> List[Tuple[str, float]]:
    areas = {}
    for lab in _counts(scene):
        areas[lab] = max((d.bbox.x_max - d.bbox.x_min) * (d.bbox.y_max - d.bbox.y_min)
                         for d in _members(scene, lab))
    return sorted(areas.items(), key=lambda kv: (-kv[1], kv[0]))


def _ordered_with_gaps(values: Sequence[float], ratio: float, k: int, descending: bool) -> bool:
    # top k must be mutually separated, and separated from whatever ranks k+1
    pairs = [(values[i], values[i + 1]) for i in range(len(values) - 1) if i < k]
    for a, b in pairs:
        big, small = (a, b) if descending else (b, a)
        if not _dominates(big, small, ratio):
            return False
    return True


def _largest(scene, cfg, seed, tid):
    if _n_classes(scene) < 2:
        return []
    ranked = _class_max_area(scene)
    if not _dominates(ranked[0][1], ranked[1][1], cfg.area_margin_ratio):
        return []
    return [_make(scene, tid, Category.RANKING_EXTREMES, text.Q_LARGEST, ranked[0][0], (ranked[0][0],), seed)]


def _rank_largest(scene, cfg, seed, tid):
    k = cfg.rank_k
    if _n_classes(scene) < k:
        return []
    ranked = _class_max_area(scene)
    if not _ordered_with_gaps([a for _, a in ranked], cfg.rank_gap_ratio, k, descending=True):
        return []
    names = [lab for lab, _ in ranked[:k]]
    return [_make(scene, tid, Category.RANKING_EXTREMES, text.Q_RANK_LARGEST.format(k=k), ", ".join(names),
                  names, seed)]


def _width_vs_height(scene, cfg, seed, tid):
    out = []
    for lab, det in _singletons(scene):
        wider = _aspect(det, cfg.aspect_ratio_threshold)
        if wider is None:
            continue
        out.append(_make(scene, tid, Category.SIZE_ASPECT, text.Q_WIDTH_VS_HEIGHT.format(object_1=lab),
                         _yn(wider), (lab,), seed, key=lab))
    return out


def _most_least(scene, cfg, seed, tid, most):
    c = _counts(scene)
    if len(c) < 2:
        return []
    if most:
        top = max(c.values())
        winners = [lab for lab in c if c[lab] == top]
        runner = max(v for lab, v in c.items() if lab != min(winners))
        if len(winners) > 1 or not _dominates(top, runner, cfg.count_margin_ratio):
            return []
        return [_make(scene, tid, Category.RANKING_EXTREMES, text.Q_MOST, winners[0], (winners[0],), seed)]
    low = min(c.values())
    losers = [lab for lab in c if c[lab] == low]
    second = min(v for lab, v in c.items() if lab != min(losers))
    if len(losers) > 1 or not _dominates(second, low, cfg.count_margin_ratio):
        return []
    return [_make(scene, tid, Category.RANKING_EXTREMES, text.Q_LEAST, losers[0], (losers[0],), seed)]


def _how_many(scene, cfg, seed, tid):
    return [_make(scene, tid, Category.COUNTING, text.Q_HOW_MANY.format(object_1=lab), str(n), (lab,), seed,
                  key=lab) for lab, n in _counts(scene).items()]


def _are_more(scene, cfg, seed, tid):
    c = _counts(scene)
    out = []
    for c1, c2 in permutations(c, 2):
        a, b = c[c1], c[c2]
        if not _dominates(max(a, b), min(a, b), cfg.count_margin_ratio):
            continue
        out.append(_make(scene, tid, Category.COUNTING, text.Q_ARE_MORE.format(object_1=c1, object_2=c2),
                         _yn(a > b), (c1, c2), seed, key=f"{c1}|{c2}"))
    return out


def _which_more(scene, cfg, seed, tid):
    c = _counts(scene)
    if len(c) < 2:
        return []
    out = []
    for trio in combinations(sorted(c), 3):
        vals = sorted((c[x] for x in trio), reverse=True)
        if not _dominates(vals[0], vals[1], cfg.count_margin_ratio):
            continue
        winner = next(x for x in trio if c[x] == vals[0])
        q = text.Q_WHICH_MORE.format(object_1=trio[0], object_2=trio[1], object_3=trio[2])
        out.append(_make(scene, tid, Category.COUNTING, q, winner, trio, seed, key="|".join(trio)))
    return out


def _threshold(scene, cfg, seed, tid, more):
    out = []
    r = cfg.threshold_question_ratio
    for lab, n in _counts(scene).items():
        below = max(1, math.ceil(n / r))
        above = math.ceil(n * r)
        for target in (below, above):
            if more:
                q = text.Q_MORE_THAN.format(target=target, object_1=lab)
                ans = n >= target
            else:
                q = (text.Q_ABSENT.format(object_1=lab) if target == 1
                     else text.Q_LESS_THAN.format(target=target, object_1=lab))
                ans = n < target
            out.append(_make(scene, tid, Category.COUNTING, q, _yn(ans), (lab,), seed, key=f"{lab}|{target}"))
    return out


def _multichoice(scene, cfg, seed, tid):
    out = []
    for lab, n in _counts(scene).items():
        if n < cfg.multichoice_min_count:
            continue
        rng = random.Random(derive_seed(seed, scene.image_id, tid, lab))
        w = max(1, math.ceil(math.sqrt(n)))
        span = w + 1
        start = max(1, n - rng.randrange(span))
        slots = [p for p in (0, 1, 2) if start - p * span >= 1]
        p = rng.choice(slots)
        ranges = [(start + (j - p) * span, start + (j - p) * span + w) for j in range(3)]
        letters_to_bucket = [0, 1, 2]
        rng.shuffle(letters_to_bucket)
        shown = ["%d-%d" % ranges[b] for b in letters_to_bucket]
        hits = [i for i, b in enumerate(letters_to_bucket) if ranges[b][0] <= n <= ranges[b][1]]
        assert len(hits) == 1
        q = text.Q_MULTI_HOW_MANY.format(object_1=lab, range_a=shown[0], range_b=shown[1], range_c=shown[2])
        out.append(_make(scene, tid, Category.COUNTING, q, "ABC"[hits[0]], (lab,), seed, key=lab,
                         choices=shown + [text.UNSURE]))
    return out


def _thirds(scene, cfg, seed, tid):
    W = float(scene.width)
    buf = cfg.buffer_frac * W
    zones = [("A", 0.0, W / 3 - buf, False), ("B", W / 3 + buf, 2 * W / 3 - buf, False),
             ("C", 2 * W / 3 + buf, W, True)]
    out = []
    for lab, det in _singletons(scene):
        hit = [z for z, lo, hi, closed in zones
               if det.bbox.x_min >= lo and (det.bbox.x_max <= hi if closed else det.bbox.x_max < hi)]
        if len(hit) != 1:
            continue
        out.append(_make(scene, tid, Category.LOCALIZATION, text.Q_CENTERED.format(object_1=lab), hit[0],
                         (lab,), seed, key=lab, choices=text.THIRD_CHOICES))
    return out


def _quadrants(scene, cfg, seed, tid):
    rows, cols = cfg.grid_rows, cfg.grid_cols
    cw, ch = scene.width / cols, scene.height / rows
    out = []
    for lab, det in _singletons(scene):
        cells = []
        for r in range(rows):
            for c in range(cols):
                l, t = c * cw + cfg.grid_margin_frac * cw, r * ch + cfg.grid_margin_frac * ch
                rt, bt = (c + 1) * cw - cfg.grid_margin_frac * cw, (r + 1) * ch - cfg.grid_margin_frac * ch
                b = det.bbox
                if b.x_min >= l and b.x_max <= rt and b.y_min >= t and b.y_max <= bt:
                    cells.append(r * cols + c + 1)
        if len(cells) != 1:
            continue
        q = text.Q_QUADRANTS.format(N=rows, M=cols, object_1=lab)
        out.append(_make(scene, tid, Category.LOCALIZATION, q, str(cells[0]), (lab,), seed, key=lab))
    return out


def _norm(scene, cfg) -> float:
    return {"height": float(scene.height), "width": float(scene.width),
            "diagonal": math.hypot(scene.width, scene.height)}[cfg.row_normalizer]


def qualifying_rows(scene, cfg):
    """Every contiguous x-ordered window of 3+ centers whose line fit passes."""
    idx = list(range(len(scene.detections)))
    ctr = [((d.bbox.x_min + d.bbox.x_max) / 2.0, (d.bbox.y_min + d.bbox.y_max) / 2.0) for d in scene.detections]
    idx.sort(key=lambda i: (ctr[i][0], ctr[i][1], scene.detections[i].class_label, i))
    rows = []
    for size in range(3, len(idx) + 1):
        for s in range(0, len(idx) - size + 1):
            win = idx[s : s + size]
            try:
                v = fit_row([ctr[i] for i in win], _norm(scene, cfg)).normalized_residual_variance
            except DegenerateFit:
                continue
            if v < cfg.row_variance_threshold:
                rows.append((v, size, s, win))
    return rows


def describe_labels(labels) -> str:
    c: Dict[str, int] = {}
    for lab in labels:
        c[lab] = c.get(lab, 0) + 1
    return ", ".join("%d %s" % (c[k], k) for k in sorted(c))


def _multisets(counts: Dict[str, int], size: int, cap: int) -> List[str]:
    labels = sorted(counts)
    results: List[str] = []
    stack = [(0, size, ())]
    # explicit stack; children pushed in reverse so the pop order is
    # "largest take of the earliest label first"
    while stack and len(results) < cap:
        i, left, picked = stack.pop()
        if left == 0:
            results.append(", ".join("%d %s" % (n, lab) for lab, n in picked))
            continue
        if i == len(labels):
            continue
        lab = labels[i]
        takes = list(range(0, min(counts[lab], left) + 1))
        for t in takes:
            stack.append((i + 1, left - t, picked + ((lab, t),) if t else picked))
    return results


def _option_question(scene, cfg, seed, tid, pattern, fallback, correct, size, banned):
    rng = random.Random(derive_seed(seed, scene.image_id, tid, ""))
    c = _counts(scene)
    if correct is None:
        pool = _multisets(c, 3, cfg.option_pool_cap)
        if len(pool) < 3:
            return []
        opts = rng.sample(pool, 3)
        ans = "D"
    else:
        pool = [m for m in _multisets(c, size, cfg.option_pool_cap) if m not in banned]
        if len(pool) < 2:
            return []
        opts = [correct] + rng.sample(pool, 2)
        rng.shuffle(opts)
        ans = "ABC"[opts.index(correct)]
    q = pattern.format(option_a=opts[0], option_b=opts[1], option_c=opts[2])
    return [_make(scene, tid, Category.SPATIAL_RELATIONS, q, ans, sorted(c), seed, choices=opts + [fallback])]


def _in_row(scene, cfg, seed, tid):
    if len(scene.detections) < 3:
        return []
    return [_make(scene, tid, Category.SPATIAL_RELATIONS, text.Q_IN_ROW, _yn(bool(qualifying_rows(scene, cfg))),
                  sorted(_counts(scene)), seed)]


def _in_line(scene, cfg, seed, tid):
    if len(scene.detections) < 3:
        return []
    rows = qualifying_rows(scene, cfg)
    labs = [d.class_label for d in scene.detections]
    if not rows:
        return _option_question(scene, cfg, seed, tid, text.Q_IN_LINE, text.NO_ROW, None, 0, set())
    best = sorted(rows, key=lambda r: (r[0], -r[1], r[2]))[0]
    banned = {describe_labels([labs[i] for i in r[3]]) for r in rows}
    return _option_question(scene, cfg, seed, tid, text.Q_IN_LINE, text.NO_ROW,
                            describe_labels([labs[i] for i in best[3]]), best[1], banned)


def brute_force_clusters(centers, eps_frac, min_pts, width, height) -> Tuple[List[List[int]], List[int]]:
    """Density clusters via the full reachability closure over core points."""
    n = len(centers)
    eps = eps_frac * math.hypot(width, height)
    e2 = eps * eps

    def close(i, j):
        dx = centers[i][0] - centers[j][0]
        dy = centers[i][1] - centers[j][1]
        return dx * dx + dy * dy <= e2

    core = [sum(close(i, j) for j in range(n)) >= min_pts for i in range(n)]
    reach = [[core[i] and core[j] and close(i, j) for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    groups: List[List[int]] = []
    seen = set()
    for i in range(n):
        if core[i] and i not in seen:
            comp = [j for j in range(n) if j == i or reach[i][j]]
            seen.update(comp)
            groups.append(comp)
    owner = {}
    for g, comp in enumerate(groups):
        for i in comp:
            owner[i] = g
    for i in range(n):
        if core[i]:
            continue
        cands = [j for j in range(n) if core[j] and close(i, j)]
        if not cands:
            continue
        def d2(j):
            dx = centers[i][0] - centers[j][0]
            dy = centers[i][1] - centers[j][1]
            return dx * dx + dy * dy
        j = sorted(cands, key=lambda j: (d2(j), centers[j][0], centers[j][1]))[0]
        owner[i] = owner[j]
    clusters = [sorted(i for i in range(n) if owner.get(i) == g) for g in range(len(groups))]
    clusters.sort(key=lambda c: c[0])
    noise = [i for i in range(n) if i not in owner]
    return clusters, noise


def _clustered(scene, cfg, seed, tid):
    if len(scene.detections) < 9:
        return []
    ctr = [((d.bbox.x_min + d.bbox.x_max) / 2.0, (d.bbox.y_min + d.bbox.y_max) / 2.0) for d in scene.detections]
    clusters, _ = brute_force_clusters(ctr, cfg.eps_frac, cfg.min_pts, scene.width, scene.height)
    labs = [d.class_label for d in scene.detections]
    if not clusters:
        return _option_question(scene, cfg, seed, tid, text.Q_CLUSTERED, text.NO_CLUSTER, None, 0, set())
    scored = sorted(clusters, key=lambda c: (compactness([ctr[i] for i in c]), -len(c), c[0]))
    best = scored[0]
    banned = {describe_labels([labs[i] for i in c]) for c in clusters}
    return _option_question(scene, cfg, seed, tid, text.Q_CLUSTERED, text.NO_CLUSTER,
                            describe_labels([labs[i] for i in best]), len(best), banned)


def _depth_ok(scene) -> bool:
    return len(scene.detections) > 0 and all(d.depth_summary is not None for d in scene.detections)


def _depth_pair(scene, cfg, seed, tid, closer):
    if not _depth_ok(scene) or _n_classes(scene) < 2 or not _cross_disjoint_exists(scene):
        return []
    m = cfg.depth_margin_ratio
    out = []
    for c1, c2 in permutations(sorted(_counts(scene)), 2):
        verdicts = []
        for a in _members(scene, c1):
            for b in _members(scene, c2):
                if not _disjoint(a, b):
                    continue
                da, db = a.depth_summary.representative_depth, b.depth_summary.representative_depth
                subject_wins = (db >= m * da) if closer else (da >= m * db)
                subject_loses = (da >= m * db) if closer else (db >= m * da)
                verdicts.append("yes" if subject_wins else "no" if subject_loses else "ambiguous")
        if not verdicts:
            continue
        if "yes" in verdicts:
            ans = "Yes"
        elif all(v == "no" for v in verdicts):
            ans = "No"
        else:
            continue
        pattern = text.Q_CLOSER if closer else text.Q_FARTHER
        out.append(_make(scene, tid, Category.SPATIAL_RELATIONS, pattern.format(object_1=c1, object_2=c2), ans,
                         (c1, c2), seed, key=f"{c1}|{c2}"))
    return out


def _depth_rank(scene, cfg, seed, tid):
    k = cfg.depth_rank_k
    if not _depth_ok(scene) or _n_classes(scene) < k:
        return []
    nearest = {lab: min(d.depth_summary.representative_depth for d in _members(scene, lab))
               for lab in _counts(scene)}
    ranked = sorted(nearest.items(), key=lambda kv: (kv[1], kv[0]))
    if not _ordered_with_gaps([v for _, v in ranked], cfg.depth_margin_ratio, k, descending=False):
        return []
    names = [lab for lab, _ in ranked[:k]]
    return [_make(scene, tid, Category.RANKING_EXTREMES, text.Q_DEPTH_RANK.format(k=k), ", ".join(names),
                  names, seed)]


def oracle_answers(scene: SceneRecord, template_id: str, config: TemplateConfig, seed: int = 0) -> List[QAPair]:
    """Expected QA pairs for one (scene, template), in no particular order."""
    base = template_id.split("(", 1)[0]
    cfg = config
    table = {
        "LeftOf": lambda: _directional(scene, cfg, seed, template_id, right=False),
        "RightOf": lambda: _directional(scene, cfg, seed, template_id, right=True),
        "LeftMost": lambda: _extremal(scene, cfg, seed, template_id, True, False),
        "RightMost": lambda: _extremal(scene, cfg, seed, template_id, False, False),
        "LeftMostWidthVsHeight": lambda: _extremal(scene, cfg, seed, template_id, True, True),
        "RightMostWidthVsHeight": lambda: _extremal(scene, cfg, seed, template_id, False, True),
        "LargestAppearance": lambda: _largest(scene, cfg, seed, template_id),
        "RankLargestK": lambda: _rank_largest(scene, cfg, seed, template_id),
        "WidthVsHeight": lambda: _width_vs_height(scene, cfg, seed, template_id),
        "MostAppearance": lambda: _most_least(scene, cfg, seed, template_id, True),
        "LeastAppearance": lambda: _most_least(scene, cfg, seed, template_id, False),
        "HowMany": lambda: _how_many(scene, cfg, seed, template_id),
        "AreMore": lambda: _are_more(scene, cfg, seed, template_id),
        "WhichMore": lambda: _which_more(scene, cfg, seed, template_id),
        "MoreThanThresholdHowMany": lambda: _threshold(scene, cfg, seed, template_id, True),
        "LessThanThresholdHowMany": lambda: _threshold(scene, cfg, seed, template_id, False),
        "MultiChoiceHowMany": lambda: _multichoice(scene, cfg, seed, template_id),
        "IsObjectCentered": lambda: _thirds(scene, cfg, seed, template_id),
        "Quadrants": lambda: _quadrants(scene, cfg, seed, template_id),
        "ObjectsInRow": lambda: _in_row(scene, cfg, seed, template_id),
        "ObjectsInLine": lambda: _in_line(scene, cfg, seed, template_id),
        "MostClusteredObjects": lambda: _clustered(scene, cfg, seed, template_id),
        "Closer": lambda: _depth_pair(scene, cfg, seed, template_id, True),
        "Farther": lambda: _depth_pair(scene, cfg, seed, template_id, False),
        "DepthRanking": lambda: _depth_rank(scene, cfg, seed, template_id),
    }
    if base not in table:
        raise KeyError(f"oracle has no rule for {template_id!r}")
    return table[base]()
