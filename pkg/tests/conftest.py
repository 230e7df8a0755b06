from __future__ import annotations

from typing import Optional

import pytest

from spatialqa.scene_model import BBox, DepthSummary, Detection, SceneRecord

ACCEPTANCE_KEY = pytest.StashKey[list]()


def det(label: str, x0: float, y0: float, x1: float, y1: float, depth: Optional[float] = None) -> Detection:
    summary = DepthSummary(depth, 0.10, 1) if depth is not None else None
    return Detection(label, BBox(x0, y0, x1, y1), depth_summary=summary)


def scene(*dets: Detection, width: int = 640, height: int = 480, image_id: str = "img") -> SceneRecord:
    return SceneRecord(image_id=image_id, width=width, height=height, detections=tuple(dets))


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        request.config.stash[ACCEPTANCE_KEY].append(line)
        with capsys.disabled():
            print("\n" + line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def varied_scene(seed: int) -> SceneRecord:
    """Random scene exercising every optional field (masks, depth variants, split, depth file)."""
    import random

    import numpy as np

    from spatialqa.scene_model import RleMask, Split

    rng = random.Random(seed)
    w, h = rng.randint(8, 64), rng.randint(8, 64)
    dets = []
    for _ in range(rng.randint(0, 8)):
        x0, y0 = rng.uniform(0, w - 1), rng.uniform(0, h - 1)
        box = BBox(x0, y0, rng.uniform(x0 + 0.01, w), rng.uniform(y0 + 0.01, h))
        depth = None
        roll = rng.random()
        if roll < 0.3:
            depth = DepthSummary(round(rng.uniform(0.5, 80.0), 4), 0.10, 1)
        elif roll < 0.5:
            depth = DepthSummary(rng.uniform(0.5, 80.0), rng.choice([0.0, 0.5, 0.9]), rng.randint(1, 500))
        mask = None
        if rng.random() < 0.3:
            mask = RleMask.encode(np.array([[rng.random() < 0.4 for _ in range(w)] for _ in range(h)]))
        dets.append(Detection(rng.choice(["car", "person", "traffic light", "Car", "ü-bahn"]), box, mask, depth))
    return SceneRecord(
        image_id=f"scene-{seed}",
        width=w,
        height=h,
        detections=tuple(dets),
        depth_file=rng.choice([None, f"depth/{seed}.depth"]),
        source_split=rng.choice(list(Split)),
    )
