"""Cheap scene-level checks evaluated before any realizer runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

from ..geometry import iou
from ..scene_model import SceneRecord, class_counts


def at_least_x_classes(scene: SceneRecord, x: int) -> bool:
    return len({d.class_label for d in scene.detections}) >= x


def exists_nonoverlapping_cross_pair(scene: SceneRecord) -> bool:
    dets = scene.detections
    for i, a in enumerate(dets):
        for b in dets[i + 1 :]:
            if a.class_label != b.class_label and iou(a.bbox, b.bbox) == 0.0:
                return True
    return False


def single_instance_class_exists(scene: SceneRecord) -> bool:
    return any(n == 1 for n in class_counts(scene).values())


def min_detections(scene: SceneRecord, n: int) -> bool:
    return len(scene.detections) >= n


def has_depth(scene: SceneRecord) -> bool:
    """Every detection carries a depth summary (and there is at least one)."""
    return bool(scene.detections) and all(d.depth_summary is not None for d in scene.detections)


@dataclass(frozen=True)
class Predicate:
    """A named predicate with its bound arguments."""

    name: str
    fn: Callable[..., bool]
    args: Tuple = ()

    def __call__(self, scene: SceneRecord) -> bool:
        return self.fn(scene, *self.args)

    @property
    def label(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(str, self.args))})"


def classes(x: int) -> Predicate:
    return Predicate("at_least_x_classes", at_least_x_classes, (x,))


def detections(n: int) -> Predicate:
    return Predicate("min_detections", min_detections, (n,))


NONOVERLAPPING_CROSS_PAIR = Predicate("exists_nonoverlapping_cross_pair", exists_nonoverlapping_cross_pair)
SINGLE_INSTANCE_CLASS = Predicate("single_instance_class_exists", single_instance_class_exists)
HAS_DEPTH = Predicate("has_depth", has_depth)
