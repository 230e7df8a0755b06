"""Seeded synthetic scenes with guaranteed placement properties."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..scene_model import BBox, DepthSummary, Detection, SceneRecord

VOCABULARY = ("car", "person", "truck", "bicycle", "traffic light", "bus", "dog")
PLACEMENTS = ("uniform", "row", "cluster", "left-right-ordered")
PLACEMENT_ATTEMPTS = 1000


class PlacementInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneRecipe:
    seed: int
    width: int = 640
    height: int = 480
    class_counts: Dict[str, Tuple[int, int]] = field(default_factory=lambda: {"car": (1, 3), "person": (1, 3)})
    placement: str = "uniform"
    row_y: float = 240.0
    row_jitter: float = 0.0
    cluster_center: Tuple[float, float] = (320.0, 240.0)
    cluster_radius: float = 40.0
    box_size: Tuple[int, int] = (10, 80)
    overlap: str = "allow"
    depth_range: Optional[Tuple[float, float]] = None
    image_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")
        if self.overlap not in ("allow", "forbid"):
            raise ValueError("overlap must be 'allow' or 'forbid'")
        lo, hi = self.box_size
        if not 1 <= lo <= hi:
            raise ValueError("box_size must satisfy 1 <= lo <= hi")
        for label, (a, b) in self.class_counts.items():
            if not 0 <= a <= b:
                raise ValueError(f"bad count range for {label}")


def _intersects(a: BBox, b: BBox) -> bool:
    return min(a.x_max, b.x_max) > max(a.x_min, b.x_min) and min(a.y_max, b.y_max) > max(a.y_min, b.y_min)


def _box_at(cx: float, cy: float, w: int, h: int, W: int, H: int) -> BBox:
    w, h = min(w, W - 1), min(h, H - 1)
    x0 = int(round(min(max(cx - w / 2, 0), W - w)))
    y0 = int(round(min(max(cy - h / 2, 0), H - h)))
    return BBox(x0, y0, x0 + w, y0 + h)


def synth_scene(recipe: SceneRecipe) -> SceneRecord:
    rng = random.Random(recipe.seed)
    W, H = recipe.width, recipe.height
    labels: List[str] = []
    for label in sorted(recipe.class_counts):
        lo, hi = recipe.class_counts[label]
        labels.extend([label] * rng.randint(lo, hi))
    rng.shuffle(labels)
    n = len(labels)
    boxes: List[BBox] = []
    for i, _ in enumerate(labels):
        for _attempt in range(PLACEMENT_ATTEMPTS):
            w = rng.randint(*recipe.box_size)
            h = rng.randint(*recipe.box_size)
            if recipe.placement == "uniform":
                box = _box_at(rng.uniform(0, W), rng.uniform(0, H), w, h, W, H)
            elif recipe.placement == "row":
                cy = recipe.row_y + rng.uniform(-recipe.row_jitter, recipe.row_jitter)
                cx = rng.uniform(w / 2, W - w / 2)
                # keep the exact center y when jitter is zero and the box fits
                h2 = max(2, h - (h % 2))
                x0 = int(round(cx - w / 2))
                y0 = int(round(cy)) - h2 // 2 if recipe.row_jitter == 0 else int(round(cy - h2 / 2))
                x0 = min(max(x0, 0), W - w)
                y0 = min(max(y0, 0), H - h2)
                box = BBox(x0, y0, x0 + w, y0 + h2)
            elif recipe.placement == "cluster":
                r = recipe.cluster_radius * math.sqrt(rng.random())
                t = rng.uniform(0, 2 * math.pi)
                box = _box_at(recipe.cluster_center[0] + r * math.cos(t),
                              recipe.cluster_center[1] + r * math.sin(t), w, h, W, H)
            else:
                slot = W / max(n, 1)
                w = max(1, min(w, int(slot) - 2))
                x0 = int(math.ceil(i * slot)) + 1
                x0 = min(x0, W - w)
                y0 = rng.randint(0, H - h)
                box = BBox(x0, y0, x0 + w, y0 + h)
            if recipe.overlap == "allow" or not any(_intersects(box, b) for b in boxes):
                boxes.append(box)
                break
        else:
            raise PlacementInfeasible(
                f"seed {recipe.seed}: could not place box {i} without overlap in {PLACEMENT_ATTEMPTS} attempts"
            )
    dets = []
    for label, box in zip(labels, boxes):
        depth = None
        if recipe.depth_range is not None:
            depth = DepthSummary(round(rng.uniform(*recipe.depth_range), 3), 0.10, 1)
        dets.append(Detection(label, box, depth_summary=depth))
    return SceneRecord(
        image_id=recipe.image_id or f"synth_{recipe.seed:08d}",
        width=W,
        height=H,
        detections=tuple(dets),
    )


def random_recipe(seed: int, depth: Optional[bool] = None, max_classes: int = 5) -> SceneRecipe:
    """A mixed recipe drawn from ``seed``: placement, vocabulary, counts and depth vary."""
    rng = random.Random(seed * 7919 + 17)
    placement = rng.choice(PLACEMENTS)
    n_classes = rng.randint(1, max_classes)
    vocab = rng.sample(VOCABULARY, n_classes)
    big = rng.random() < 0.35
    counts = {label: (rng.randint(0, 2), rng.randint(2, 6 if big else 4)) for label in vocab}
    if depth is None:
        depth = rng.random() < 0.6
    width, height = rng.choice([(640, 480), (1280, 720), (300, 300), (400, 300)])
    overlap = "forbid" if placement == "left-right-ordered" or rng.random() < 0.3 else "allow"
    total_hi = sum(b for _, b in counts.values())
    return SceneRecipe(
        seed=seed,
        width=width,
        height=height,
        class_counts=counts,
        placement=placement,
        row_y=rng.uniform(0.2, 0.8) * height,
        row_jitter=rng.choice([0.0, 0.0, 1.0, 4.0, 30.0]),
        cluster_center=(rng.uniform(0.25, 0.75) * width, rng.uniform(0.25, 0.75) * height),
        cluster_radius=rng.uniform(0.02, 0.15) * math.hypot(width, height),
        box_size=(8, max(12, min(width, height) // (4 if total_hi < 8 else 8))),
        overlap=overlap,
        depth_range=(rng.choice([1.0, 2.0, 5.0]), rng.choice([8.0, 20.0, 60.0])) if depth else None,
    )


def random_scene(seed: int, depth: Optional[bool] = None) -> SceneRecord:
    """Scene from :func:`random_recipe`; falls back to allowing overlap if placement fails."""
    recipe = random_recipe(seed, depth)
    try:
        return synth_scene(recipe)
    except PlacementInfeasible:
        return synth_scene(SceneRecipe(**{**recipe.__dict__, "overlap": "allow"}))


def scene_with_count(seed: int, n_detections: int, width: int = 640, height: int = 480,
                     n_classes: int = 3) -> SceneRecord:
    """Uniformly placed scene with exactly ``n_detections`` boxes over ``n_classes`` labels."""
    rng = random.Random(seed)
    vocab = rng.sample(VOCABULARY, min(n_classes, len(VOCABULARY)))
    dets = []
    for _ in range(n_detections):
        w, h = rng.randint(8, width // 5), rng.randint(8, height // 5)
        box = _box_at(rng.uniform(0, width), rng.uniform(0, height), w, h, width, height)
        dets.append(Detection(rng.choice(vocab), box))
    return SceneRecord(image_id=f"dense_{seed:08d}", width=width, height=height, detections=tuple(dets))
