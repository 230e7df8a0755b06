"""Template descriptors, the default registry, and the sieve runner."""

from __future__ import annotations

import time
import traceback
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from ..scene_model import Category, QAPair, SceneRecord
from . import predicates as P
from . import realizers as R
from .config import TemplateConfig

Realizer = Callable[[SceneRecord, TemplateConfig, int], List[QAPair]]


@dataclass(frozen=True)
class TemplateDescriptor:
    template_id: str
    category: Category
    requires_depth: bool
    predicates: Tuple[P.Predicate, ...]
    question_pattern: str
    realizer: Realizer

    def __post_init__(self) -> None:
        if not self.predicates:
            raise ValueError(f"{self.template_id}: predicates must be non-empty")

    @property
    def base_name(self) -> str:
        return self.template_id.split("(", 1)[0]


@dataclass
class SieveOutcome:
    template_id: str
    passed: bool
    predicates_evaluated: bool = False
    failed_predicate: Optional[str] = None
    predicate_ms: float = 0.0
    apply_invoked: bool = False
    apply_ms: float = 0.0
    empty: bool = False
    pairs: int = 0
    fault: Optional[str] = None


def build_registry(config: Optional[TemplateConfig] = None) -> Dict[str, TemplateDescriptor]:
    """All templates, keyed by id, in a stable order."""
    cfg = config or TemplateConfig()
    k, dk = cfg.rank_k, cfg.depth_rank_k
    quad = f"Quadrants({cfg.grid_rows},{cfg.grid_cols})"
    rank_id, depth_rank_id = f"RankLargestK({k})", f"DepthRanking({dk})"
    two = P.classes(2)
    single = P.SINGLE_INSTANCE_CLASS
    rows = [
        ("IsObjectCentered", Category.LOCALIZATION, False, (single,), R.Q_CENTERED, R.realize_centered),
        ("WidthVsHeight", Category.SIZE_ASPECT, False, (single,), R.Q_WIDTH_VS_HEIGHT, R.realize_width_vs_height),
        ("LeftMost", Category.RANKING_EXTREMES, False, (single,), R.Q_LEFTMOST, R.realize_leftmost),
        ("RightMost", Category.RANKING_EXTREMES, False, (single,), R.Q_RIGHTMOST, R.realize_rightmost),
        ("LargestAppearance", Category.RANKING_EXTREMES, False, (two,), R.Q_LARGEST, R.realize_largest),
        (rank_id, Category.RANKING_EXTREMES, False, (P.classes(k),), R.Q_RANK_LARGEST, R.realize_rank_largest),
        ("MostAppearance", Category.RANKING_EXTREMES, False, (two,), R.Q_MOST, R.realize_most),
        ("LeastAppearance", Category.RANKING_EXTREMES, False, (two,), R.Q_LEAST, R.realize_least),
        ("LeftOf", Category.SPATIAL_RELATIONS, False, (two, P.NONOVERLAPPING_CROSS_PAIR), R.Q_LEFT_OF,
         R.realize_left_of),
        ("RightOf", Category.SPATIAL_RELATIONS, False, (two, P.NONOVERLAPPING_CROSS_PAIR), R.Q_RIGHT_OF,
         R.realize_right_of),
        ("HowMany", Category.COUNTING, False, (P.classes(1),), R.Q_HOW_MANY, R.realize_how_many),
        ("AreMore", Category.COUNTING, False, (two,), R.Q_ARE_MORE, R.realize_are_more),
        ("WhichMore", Category.COUNTING, False, (two,), R.Q_WHICH_MORE, R.realize_which_more),
        (quad, Category.LOCALIZATION, False, (single,), R.Q_QUADRANTS, R.realize_quadrants),
        ("LeftMostWidthVsHeight", Category.SIZE_ASPECT, False, (single,), R.Q_LEFTMOST_WVH,
         R.realize_leftmost_wvh),
        ("RightMostWidthVsHeight", Category.SIZE_ASPECT, False, (single,), R.Q_RIGHTMOST_WVH,
         R.realize_rightmost_wvh),
        ("MoreThanThresholdHowMany", Category.COUNTING, False, (P.classes(1),), R.Q_MORE_THAN,
         R.realize_more_than),
        ("LessThanThresholdHowMany", Category.COUNTING, False, (P.classes(1),), R.Q_LESS_THAN,
         R.realize_less_than),
        ("MultiChoiceHowMany", Category.COUNTING, False, (P.classes(1),), R.Q_MULTI_HOW_MANY,
         R.realize_multichoice_how_many),
        ("ObjectsInRow", Category.SPATIAL_RELATIONS, False, (P.detections(3),), R.Q_IN_ROW, R.realize_in_row),
        ("ObjectsInLine", Category.SPATIAL_RELATIONS, False, (P.detections(3),), R.Q_IN_LINE, R.realize_in_line),
        ("MostClusteredObjects", Category.SPATIAL_RELATIONS, False, (P.detections(9),), R.Q_CLUSTERED,
         R.realize_clustered),
        ("Closer", Category.SPATIAL_RELATIONS, True, (P.HAS_DEPTH, two, P.NONOVERLAPPING_CROSS_PAIR),
         R.Q_CLOSER, R.realize_closer),
        ("Farther", Category.SPATIAL_RELATIONS, True, (P.HAS_DEPTH, two, P.NONOVERLAPPING_CROSS_PAIR),
         R.Q_FARTHER, R.realize_farther),
        (depth_rank_id, Category.RANKING_EXTREMES, True, (P.HAS_DEPTH, P.classes(dk)), R.Q_DEPTH_RANK,
         R.realize_depth_ranking),
    ]
    registry = {}
    for template_id, category, depth, preds, pattern, fn in rows:
        registry[template_id] = TemplateDescriptor(
            template_id=template_id,
            category=category,
            requires_depth=depth,
            predicates=preds,
            question_pattern=pattern,
            realizer=partial(fn, template_id=template_id),
        )
    return registry


def resolve_templates(names: Optional[Iterable[str]], registry: Dict[str, TemplateDescriptor],
                      include_depth: bool = True) -> List[TemplateDescriptor]:
    """Select templates by id or base name; None means all (optionally without depth)."""
    if names is None:
        return [d for d in registry.values() if include_depth or not d.requires_depth]
    by_base = {d.base_name: d for d in registry.values()}
    chosen = []
    for name in names:
        name = name.strip()
        if not name:
            continue
        desc = registry.get(name) or by_base.get(name)
        if desc is None:
            raise KeyError(f"unknown template {name!r}; known: {', '.join(registry)}")
        if desc not in chosen:
            chosen.append(desc)
    return chosen


def run_template(descriptor: TemplateDescriptor, scene: SceneRecord, config: TemplateConfig,
                 seed: int = 0, sieve: bool = True) -> Tuple[List[QAPair], SieveOutcome]:
    """Evaluate predicates in order (short-circuit), then apply on success.

    Realizer exceptions become a ``fault`` on the outcome instead of
    propagating. With ``sieve=False`` predicates are skipped entirely.
    """
    outcome = SieveOutcome(descriptor.template_id, passed=True, predicates_evaluated=sieve)
    if sieve:
        t0 = time.perf_counter()
        for pred in descriptor.predicates:
            if not pred(scene):
                outcome.passed = False
                outcome.failed_predicate = pred.label
                break
        outcome.predicate_ms = (time.perf_counter() - t0) * 1e3
        if not outcome.passed:
            return [], outcome
    outcome.apply_invoked = True
    t0 = time.perf_counter()
    try:
        pairs = descriptor.realizer(scene, config, seed)
    except Exception:  # noqa: BLE001 - template faults must not abort the batch
        outcome.fault = traceback.format_exc(limit=3)
        pairs = []
    outcome.apply_ms = (time.perf_counter() - t0) * 1e3
    outcome.pairs = len(pairs)
    outcome.empty = not pairs
    return pairs, outcome


def template_categories(registry: Dict[str, TemplateDescriptor]) -> Dict[str, Category]:
    return {tid: d.category for tid, d in registry.items()}


def descriptor_sequence(registry: Dict[str, TemplateDescriptor], ids: Sequence[str]) -> List[TemplateDescriptor]:
    return [registry[i] for i in ids]
