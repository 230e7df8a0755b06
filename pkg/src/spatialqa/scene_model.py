"""Core datatypes shared by ingestion, templates, the engine and export."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    UNASSIGNED = "unassigned"


class Category(str, Enum):
    SPATIAL_RELATIONS = "SpatialRelations"
    COUNTING = "Counting"
    RANKING_EXTREMES = "RankingExtremes"
    LOCALIZATION = "Localization"
    SIZE_ASPECT = "SizeAspect"


class InvalidBox(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel space, origin top-left, y grows downward."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBox(f"non-finite coordinate in {coords}")
        if min(coords) < 0:
            raise InvalidBox(f"negative coordinate in {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidBox(f"empty extent in {coords}")
        # normalise ints so equality/serialisation are stable
        for name, c in zip(("x_min", "y_min", "x_max", "y_max"), coords):
            object.__setattr__(self, name, float(c))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def as_list(self) -> List[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]


@dataclass(frozen=True)
class RleMask:
    """Uncompressed COCO-style run-length mask (column-major, starts with zeros)."""

    height: int
    width: int
    counts: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if sum(self.counts) != self.height * self.width:
            raise ValueError(
                f"RLE counts sum to {sum(self.counts)}, expected {self.height * self.width}"
            )

    def decode(self) -> np.ndarray:
        flat = np.zeros(self.height * self.width, dtype=bool)
        pos = 0
        value = False
        for run in self.counts:
            if value:
                flat[pos : pos + run] = True
            pos += run
            value = not value
        return flat.reshape((self.width, self.height)).T

    @classmethod
    def encode(cls, mask: np.ndarray) -> "RleMask":
        height, width = mask.shape
        flat = np.asarray(mask, dtype=bool).T.reshape(-1)
        counts: List[int] = []
        current = False
        run = 0
        for v in flat:
            if bool(v) == current:
                run += 1
            else:
                counts.append(run)
                current = not current
                run = 1
        counts.append(run)
        return cls(height=height, width=width, counts=tuple(counts))


@dataclass(frozen=True)
class DepthSummary:
    representative_depth: float
    percentile_used: float
    sample_count: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.representative_depth) and self.representative_depth > 0):
            raise ValueError(f"representative_depth must be > 0, got {self.representative_depth}")
        if not 0.0 <= self.percentile_used <= 1.0:
            raise ValueError(f"percentile_used must be in [0, 1], got {self.percentile_used}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class Detection:
    class_label: str
    bbox: BBox
    mask: Optional[RleMask] = None
    depth_summary: Optional[DepthSummary] = None

    def __post_init__(self) -> None:
        if not self.class_label:
            raise ValueError("class_label must be non-empty")

    @property
    def depth(self) -> Optional[float]:
        return None if self.depth_summary is None else self.depth_summary.representative_depth


@dataclass(frozen=True)
class DepthGrid:
    """Row-major depth raster; missing cells hold ``MISSING`` (NaN)."""

    width: int
    height: int
    values: np.ndarray = field(repr=False, compare=False)
    missing_count: int = 0

    MISSING = float("nan")

    def __post_init__(self) -> None:
        if self.values.shape != (self.height, self.width):
            raise ValueError(
                f"grid shape {self.values.shape} != ({self.height}, {self.width})"
            )
        self.values.setflags(write=False)

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


@dataclass(frozen=True)
class SceneRecord:
    image_id: str
    width: int
    height: int
    detections: Tuple[Detection, ...] = ()
    depth_file: Optional[str] = None
    source_split: Split = Split.UNASSIGNED

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dims must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "source_split", Split(self.source_split))
        for det in self.detections:
            b = det.bbox
            if b.x_max > self.width or b.y_max > self.height:
                raise InvalidBox(
                    f"{self.image_id}: box {b.as_list()} outside {self.width}x{self.height}"
                )
            if det.mask is not None and (det.mask.width, det.mask.height) != (
                self.width,
                self.height,
            ):
                raise ValueError(f"{self.image_id}: mask dims differ from image dims")

    @property
    def image_area(self) -> float:
        return float(self.width * self.height)

    def with_detections(self, detections: Sequence[Detection]) -> "SceneRecord":
        return SceneRecord(
            image_id=self.image_id,
            width=self.width,
            height=self.height,
            detections=tuple(detections),
            depth_file=self.depth_file,
            source_split=self.source_split,
        )

    def with_split(self, split: Split) -> "SceneRecord":
        return SceneRecord(
            image_id=self.image_id,
            width=self.width,
            height=self.height,
            detections=self.detections,
            depth_file=self.depth_file,
            source_split=split,
        )


@dataclass(frozen=True)
class QAPair:
    image_id: str
    template_id: str
    category: Category
    question: str
    answer: str
    choices: Optional[Tuple[str, ...]] = None
    objects_involved: Tuple[str, ...] = ()
    generation_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "objects_involved", tuple(self.objects_involved))
        if self.choices is not None:
            object.__setattr__(self, "choices", tuple(self.choices))
            letters = "ABCD"[: len(self.choices)]
            if self.answer not in letters or not self.answer:
                raise ValueError(f"answer {self.answer!r} is not one of the choice letters")
        if not self.question or not self.answer:
            raise ValueError("question and answer must be non-empty")

    def sort_key(self) -> Tuple[str, str, str]:
        return (self.image_id, self.template_id, self.question)


def clamp_box(
    coords: Sequence[float], width: int, height: int
) -> Optional[BBox]:
    """Clamp corner coordinates to the image; ``None`` when the result is degenerate."""
    x0, y0, x1, y1 = (float(c) for c in coords)
    if not all(math.isfinite(c) for c in (x0, y0, x1, y1)):
        return None
    x0, x1 = min(max(x0, 0.0), width), min(max(x1, 0.0), width)
    y0, y1 = min(max(y0, 0.0), height), min(max(y1, 0.0), height)
    if x0 >= x1 or y0 >= y1:
        return None
    return BBox(x0, y0, x1, y1)


def class_groups(scene: SceneRecord) -> Dict[str, List[Detection]]:
    """Group detections by label, keys in first-appearance order."""
    groups: Dict[str, List[Detection]] = defaultdict(list)
    for det in scene.detections:
        groups[det.class_label].append(det)
    return dict(groups)


def class_counts(scene: SceneRecord) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for det in scene.detections:
        counts[det.class_label] = counts.get(det.class_label, 0) + 1
    return counts
