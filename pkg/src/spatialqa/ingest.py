"""Annotation and depth readers: the only way data enters the pipeline."""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .scene_model import (
    BBox,
    DepthGrid,
    DepthSummary,
    Detection,
    RleMask,
    SceneRecord,
    Split,
    clamp_box,
)

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_PERCENTILE = 0.10
DEPTH_MAGIC = b"DEPTH"


class MalformedDocument(ValueError):
    pass


class DanglingReference(ValueError):
    def __init__(self, kind: str, ref_id: Any, annotation_id: Any = None):
        self.kind = kind
        self.ref_id = ref_id
        self.annotation_id = annotation_id
        super().__init__(f"annotation {annotation_id!r} references unknown {kind} {ref_id!r}")


class HeaderMismatch(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class TruncatedPayload(ValueError):
    pass


class NoDepthSamples(ValueError):
    pass


@dataclass
class IngestTally:
    """Counters describing what ingestion had to repair or skip."""

    clamped_boxes: int = 0
    dropped_degenerate: int = 0
    skipped_crowd: int = 0
    malformed_lines: List[Tuple[int, str]] = field(default_factory=list)
    dangling: List[str] = field(default_factory=list)

    def merge(self, other: "IngestTally") -> None:
        self.clamped_boxes += other.clamped_boxes
        self.dropped_degenerate += other.dropped_degenerate
        self.skipped_crowd += other.skipped_crowd
        self.malformed_lines.extend(other.malformed_lines)
        self.dangling.extend(other.dangling)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "clamped_boxes": self.clamped_boxes,
            "dropped_degenerate": self.dropped_degenerate,
            "skipped_crowd": self.skipped_crowd,
            "malformed_lines": [ln for ln, _ in self.malformed_lines],
            "dangling": list(self.dangling),
        }


def _corner_box(coords: Sequence[float], width: int, height: int, tally: IngestTally) -> Optional[BBox]:
    box = clamp_box(coords, width, height)
    if box is None:
        tally.dropped_degenerate += 1
        return None
    if box.as_list() != [float(c) for c in coords]:
        tally.clamped_boxes += 1
    return box


# --- COCO -----------------------------------------------------------------


def decode_coco_rle_string(counts: str) -> List[int]:
    """Decode the compressed counts string used by the COCO API."""
    out: List[int] = []
    pos = 0
    while pos < len(counts):
        value = 0
        shift = 0
        more = True
        while more:
            c = ord(counts[pos]) - 48
            value |= (c & 0x1F) << shift
            more = bool(c & 0x20)
            pos += 1
            shift += 5
            if not more and (c & 0x10):
                value |= -1 << shift
        if len(out) > 2:
            value += out[-2]
        out.append(value)
    return out


def _coco_mask(segmentation: Any, width: int, height: int) -> Optional[RleMask]:
    # polygons are not masks here; only RLE dicts are honoured
    if not isinstance(segmentation, dict) or "counts" not in segmentation:
        return None
    size = segmentation.get("size")
    if not size or list(size) != [height, width]:
        raise MalformedDocument(f"RLE size {size} does not match image {height}x{width}")
    counts = segmentation["counts"]
    if isinstance(counts, str):
        counts = decode_coco_rle_string(counts)
    return RleMask(height=height, width=width, counts=tuple(counts))


def _load_json(document: Union[bytes, str]) -> Any:
    try:
        return json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(str(exc)) from exc


def parse_coco(
    document: Union[bytes, str],
    tally: Optional[IngestTally] = None,
    strict: bool = True,
) -> List[SceneRecord]:
    """Parse a COCO detection document into one SceneRecord per image.

    With ``strict=False`` dangling references are recorded on ``tally``
    instead of raising, which is what the validator wants.
    """
    tally = tally if tally is not None else IngestTally()
    doc = _load_json(document)
    if not isinstance(doc, dict):
        raise MalformedDocument("top-level value must be an object")
    try:
        images = doc["images"]
        annotations = doc.get("annotations", [])
        categories = doc["categories"]
        cat_names = {c["id"]: str(c["name"]) for c in categories}
        image_info: Dict[Any, Dict[str, Any]] = {}
        for img in images:
            image_info[img["id"]] = img
            int(img["width"]), int(img["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"missing or invalid field: {exc}") from exc

    per_image: Dict[Any, List[Detection]] = {img_id: [] for img_id in image_info}
    for ann in annotations:
        try:
            img_id, cat_id, bbox = ann["image_id"], ann["category_id"], ann["bbox"]
        except (KeyError, TypeError) as exc:
            raise MalformedDocument(f"annotation missing field: {exc}") from exc
        if img_id not in image_info:
            err = DanglingReference("image_id", img_id, ann.get("id"))
            if strict:
                raise err
            tally.dangling.append(str(err))
            continue
        if cat_id not in cat_names:
            err = DanglingReference("category_id", cat_id, ann.get("id"))
            if strict:
                raise err
            tally.dangling.append(str(err))
            continue
        if ann.get("iscrowd", 0):
            tally.skipped_crowd += 1
            continue
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise MalformedDocument(f"annotation {ann.get('id')!r}: bbox must be [x, y, w, h]")
        img = image_info[img_id]
        width, height = int(img["width"]), int(img["height"])
        x, y, w, h = (float(v) for v in bbox)
        box = _corner_box((x, y, x + w, y + h), width, height, tally)
        if box is None:
            continue
        mask = _coco_mask(ann.get("segmentation"), width, height)
        per_image[img_id].append(Detection(cat_names[cat_id], box, mask=mask))

    scenes = []
    for img_id, img in image_info.items():
        scenes.append(
            SceneRecord(
                image_id=str(img_id),
                width=int(img["width"]),
                height=int(img["height"]),
                detections=tuple(per_image[img_id]),
                depth_file=None,
            )
        )
    return scenes


def coco_file_names(document: Union[bytes, str]) -> Dict[str, str]:
    """image_id -> file_name, used to locate per-image depth files."""
    doc = _load_json(document)
    return {str(img["id"]): str(img.get("file_name", img["id"])) for img in doc.get("images", [])}


# --- native line format ----------------------------------------------------


def _native_depth(raw: Any, percentile: float) -> Optional[DepthSummary]:
    if raw is None:
        return None
    if isinstance(raw, dict):
        return DepthSummary(
            float(raw["value"]), float(raw.get("percentile", percentile)), int(raw.get("samples", 1))
        )
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ValueError(f"depth must be a number, got {raw!r}")
    return DepthSummary(float(raw), percentile, 1)


def scene_from_native(obj: Dict[str, Any], percentile: float = DEFAULT_DEPTH_PERCENTILE,
                      tally: Optional[IngestTally] = None) -> SceneRecord:
    tally = tally if tally is not None else IngestTally()
    width, height = int(obj["width"]), int(obj["height"])
    detections = []
    for d in obj.get("detections", []):
        bbox = d["bbox"]
        if len(bbox) != 4:
            raise ValueError("bbox must have four corner values")
        box = _corner_box(bbox, width, height, tally)
        if box is None:
            continue
        mask = None
        if d.get("mask") is not None:
            m = d["mask"]
            mask = RleMask(height=int(m["size"][0]), width=int(m["size"][1]), counts=tuple(m["counts"]))
        detections.append(
            Detection(str(d["label"]), box, mask=mask, depth_summary=_native_depth(d.get("depth"), percentile))
        )
    return SceneRecord(
        image_id=str(obj["image_id"]),
        width=width,
        height=height,
        detections=tuple(detections),
        depth_file=obj.get("depth_file"),
        source_split=Split(obj.get("split", Split.UNASSIGNED.value)),
    )


def scene_to_native(scene: SceneRecord, percentile: float = DEFAULT_DEPTH_PERCENTILE) -> Dict[str, Any]:
    """Inverse of :func:`scene_from_native`."""
    dets = []
    for det in scene.detections:
        d: Dict[str, Any] = {"label": det.class_label, "bbox": det.bbox.as_list()}
        ds = det.depth_summary
        if ds is not None:
            if ds.sample_count == 1 and ds.percentile_used == percentile:
                d["depth"] = ds.representative_depth
            else:
                d["depth"] = {
                    "value": ds.representative_depth,
                    "percentile": ds.percentile_used,
                    "samples": ds.sample_count,
                }
        if det.mask is not None:
            d["mask"] = {"size": [det.mask.height, det.mask.width], "counts": list(det.mask.counts)}
        dets.append(d)
    obj: Dict[str, Any] = {
        "image_id": scene.image_id,
        "width": scene.width,
        "height": scene.height,
        "detections": dets,
    }
    if scene.depth_file is not None:
        obj["depth_file"] = scene.depth_file
    if scene.source_split is not Split.UNASSIGNED:
        obj["split"] = scene.source_split.value
    return obj


def parse_native(
    lines: Iterable[Union[str, bytes]],
    percentile: float = DEFAULT_DEPTH_PERCENTILE,
    tally: Optional[IngestTally] = None,
) -> Iterator[SceneRecord]:
    """Lazily parse one scene per line; bad lines are tallied and skipped."""
    tally = tally if tally is not None else IngestTally()
    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("line is not an object")
            scene = scene_from_native(obj, percentile, tally)
        except (ValueError, KeyError, TypeError) as exc:
            logger.warning("line %d malformed: %s", lineno, exc)
            tally.malformed_lines.append((lineno, str(exc)))
            continue
        yield scene


def write_native(scenes: Iterable[SceneRecord], path: Union[str, Path],
                 percentile: float = DEFAULT_DEPTH_PERCENTILE) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for scene in scenes:
            f.write(json.dumps(scene_to_native(scene, percentile), ensure_ascii=False) + "\n")
            n += 1
    return n


# --- depth ------------------------------------------------------------------


def encode_depth_grid(values: np.ndarray) -> bytes:
    values = np.asarray(values, dtype="<f4")
    height, width = values.shape
    return f"DEPTH v1 {width} {height}\n".encode("ascii") + values.tobytes(order="C")


def load_depth_grid(data: bytes, expected_width: int, expected_height: int) -> DepthGrid:
    newline = data.find(b"\n")
    if newline < 0:
        raise HeaderMismatch("no header line")
    parts = data[:newline].split()
    if len(parts) != 4 or parts[0] != DEPTH_MAGIC or parts[1] != b"v1":
        raise HeaderMismatch(f"bad header {data[:newline][:64]!r}")
    try:
        width, height = int(parts[2]), int(parts[3])
    except ValueError as exc:
        raise HeaderMismatch(f"bad dimensions in header: {exc}") from exc
    if (width, height) != (expected_width, expected_height):
        raise DimensionMismatch(
            f"grid is {width}x{height}, scene is {expected_width}x{expected_height}"
        )
    payload = data[newline + 1 :]
    need = width * height * 4
    if len(payload) < need:
        raise TruncatedPayload(f"payload has {len(payload)} bytes, need {need}")
    values = np.frombuffer(payload[:need], dtype="<f4").astype(np.float64).reshape(height, width)
    bad = ~np.isfinite(values) | (values <= 0)
    values = values.copy()
    values[bad] = DepthGrid.MISSING
    return DepthGrid(width=width, height=height, values=values, missing_count=int(bad.sum()))


def nearest_rank(sorted_values: Sequence[float], percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p*n)-th smallest value (1-based, min rank 1)."""
    n = len(sorted_values)
    rank = max(1, math.ceil(percentile * n))
    return sorted_values[rank - 1]


def summarize_detection_depth(detection: Detection, grid: DepthGrid, percentile: float) -> DepthSummary:
    if not 0.0 <= percentile <= 1.0:
        raise ValueError("percentile must be in [0, 1]")
    if detection.mask is not None:
        if (detection.mask.width, detection.mask.height) != (grid.width, grid.height):
            raise DimensionMismatch("mask and depth grid differ in size")
        region = grid.values[detection.mask.decode()]
    else:
        b = detection.bbox
        x0, y0 = int(math.floor(b.x_min)), int(math.floor(b.y_min))
        x1, y1 = int(math.ceil(b.x_max)), int(math.ceil(b.y_max))
        region = grid.values[y0:y1, x0:x1].reshape(-1)
    region = region[~np.isnan(region)]
    if region.size == 0:
        raise NoDepthSamples(f"no depth samples under {detection.class_label} box")
    ordered = np.sort(region)
    return DepthSummary(float(nearest_rank(ordered, percentile)), percentile, int(region.size))


def attach_depth(scene: SceneRecord, grid: DepthGrid, percentile: float) -> Tuple[SceneRecord, int]:
    """Fill missing depth summaries from a grid; returns (scene, detections left without depth)."""
    dets = []
    unresolved = 0
    for det in scene.detections:
        if det.depth_summary is None:
            try:
                summary = summarize_detection_depth(det, grid, percentile)
                det = Detection(det.class_label, det.bbox, det.mask, summary)
            except NoDepthSamples:
                unresolved += 1
        dets.append(det)
    return scene.with_detections(dets), unresolved


def pack_floats(values: Sequence[float]) -> bytes:
    return struct.pack(f"<{len(values)}f", *values)
