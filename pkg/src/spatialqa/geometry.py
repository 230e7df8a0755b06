"""Pure geometric kernel used by every template.

All functions are stateless. Boxes are :class:`~spatialqa.scene_model.BBox`;
points are ``(x, y)`` tuples in pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from .scene_model import BBox

Point = Tuple[float, float]

MAX_GRID_CELLS = 12
DEGENERATE_X_VARIANCE = 1e-12


class DegenerateFit(ValueError):
    """Raised when centers are stacked vertically and no y = f(x) line exists."""


class Third(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    SPANNING = "Spanning"


class Aspect(str, Enum):
    WIDER = "Wider"
    TALLER = "Taller"
    NEAR_SQUARE = "NearSquare"


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid rows and cols must be positive")
        if self.rows * self.cols > MAX_GRID_CELLS:
            raise ValueError(f"grid {self.rows}x{self.cols} exceeds {MAX_GRID_CELLS} cells")


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    normalized_residual_variance: float


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def strictly_right_of(a: BBox, b: BBox) -> bool:
    return a.x_min > b.x_max


def strictly_left_of(a: BBox, b: BBox) -> bool:
    return a.x_max < b.x_min


def vertical_overlap_fraction(a: BBox, b: BBox) -> float:
    """Overlap of the y-intervals divided by the smaller box height."""
    overlap = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if overlap <= 0:
        return 0.0
    return overlap / min(a.height, b.height)


def third_assignment(box: BBox, image_width: float, buffer_frac: float) -> Third:
    if not 0.0 <= buffer_frac < 1.0 / 6.0:
        raise ValueError("buffer_frac must be in [0, 1/6)")
    w = float(image_width)
    buf = buffer_frac * w
    one, two = w / 3.0, 2.0 * w / 3.0
    if box.x_min >= 0.0 and box.x_max < one - buf:
        return Third.A
    if box.x_min >= one + buf and box.x_max < two - buf:
        return Third.B
    if box.x_min >= two + buf and box.x_max <= w:
        return Third.C
    return Third.SPANNING


def grid_cell(
    box: BBox,
    image_width: float,
    image_height: float,
    grid: GridSpec,
    margin_frac: float,
) -> Optional[int]:
    """1-indexed cell (row-major) holding the box inside its inset borders, else None."""
    cell_w = image_width / grid.cols
    cell_h = image_height / grid.rows
    cx, cy = box.center
    col = min(int(cx // cell_w), grid.cols - 1)
    row = min(int(cy // cell_h), grid.rows - 1)
    dx, dy = margin_frac * cell_w, margin_frac * cell_h
    left, right = col * cell_w + dx, (col + 1) * cell_w - dx
    top, bottom = row * cell_h + dy, (row + 1) * cell_h - dy
    if box.x_min >= left and box.x_max <= right and box.y_min >= top and box.y_max <= bottom:
        return row * grid.cols + col + 1
    return None


def aspect_exceeds(box: BBox, ratio_threshold: float) -> Aspect:
    if ratio_threshold <= 1.0:
        raise ValueError("ratio_threshold must be > 1")
    if box.width >= ratio_threshold * box.height:
        return Aspect.WIDER
    if box.height >= ratio_threshold * box.width:
        return Aspect.TALLER
    return Aspect.NEAR_SQUARE


def fit_row(centers: Sequence[Point], normalizer: float) -> LineFit:
    """Least-squares line through ``centers``.

    The residual variance is the mean squared vertical residual divided by
    ``normalizer ** 2`` (image height by default at the call sites).
    """
    n = len(centers)
    if n < 3:
        raise ValueError("fit_row needs at least 3 centers")
    xs = [float(p[0]) for p in centers]
    ys = [float(p[1]) for p in centers]
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) * (x - mx) for x in xs)
    if sxx / n < DEGENERATE_X_VARIANCE:
        raise DegenerateFit("centers share one x coordinate")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    sq = sum((y - (my + slope * (x - mx))) ** 2 for x, y in zip(xs, ys))
    return LineFit(slope, intercept, (sq / n) / (float(normalizer) ** 2))


def _pairwise_sq(points: np.ndarray) -> np.ndarray:
    dx = points[:, 0][:, None] - points[:, 0][None, :]
    dy = points[:, 1][:, None] - points[:, 1][None, :]
    return dx * dx + dy * dy


def density_clusters(
    centers: Sequence[Point],
    eps_frac: float,
    min_pts: int,
    image_width: float,
    image_height: float,
) -> Tuple[List[List[int]], List[int]]:
    """Density clustering with eps proportional to the image diagonal.

    A point is core when at least ``min_pts`` points (itself included) lie
    within eps. Clusters are connected components of core points; a border
    point joins the cluster of its nearest core neighbour, ties broken by the
    core's (x, y). Clusters come back sorted by their smallest member index.
    """
    if eps_frac <= 0:
        raise ValueError("eps_frac must be > 0")
    if min_pts < 2:
        raise ValueError("min_pts must be >= 2")
    n = len(centers)
    if n == 0:
        return [], []
    eps = eps_frac * math.hypot(image_width, image_height)
    pts = np.asarray(centers, dtype=float).reshape(n, 2)
    sq = _pairwise_sq(pts)
    near = sq <= eps * eps
    core = near.sum(axis=1) >= min_pts

    label = [-1] * n
    n_clusters = 0
    for seed in range(n):
        if not core[seed] or label[seed] != -1:
            continue
        label[seed] = n_clusters
        stack = [seed]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(near[i] & core):
                if label[j] == -1:
                    label[j] = n_clusters
                    stack.append(int(j))
        n_clusters += 1

    for i in range(n):
        if core[i]:
            continue
        cores = np.flatnonzero(near[i] & core)
        if len(cores) == 0:
            continue
        best = min(cores, key=lambda j: (sq[i, j], pts[j, 0], pts[j, 1]))
        label[i] = label[best]

    members: List[List[int]] = [[] for _ in range(n_clusters)]
    for i, lab in enumerate(label):
        if lab >= 0:
            members[lab].append(i)
    clusters = sorted(members, key=lambda m: m[0])
    noise = [i for i in range(n) if label[i] == -1]
    return clusters, noise


def compactness(points: Sequence[Point]) -> float:
    """Mean pairwise Euclidean distance; lower means tighter."""
    if len(points) < 2:
        raise ValueError("compactness needs at least 2 points")
    dists = [math.dist(p, q) for p, q in combinations(points, 2)]
    return sum(dists) / len(dists)


def as_index_sets(clusters: Sequence[Sequence[int]]) -> Set[frozenset]:
    return {frozenset(c) for c in clusters}
