"""Corpus-level orchestration: run templates over scenes and aggregate metrics."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import re
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import __version__
from .scene_model import Category, QAPair, SceneRecord, Split
from .seeding import derive_seed, rng_for, unit_interval
from .sparq.config import TemplateConfig
from .sparq.templates import TemplateDescriptor, build_registry, run_template

logger = logging.getLogger(__name__)

TIMING_FIELDS = ("predicate_time_avg_ms", "apply_time_avg_ms")
DEFAULT_GROUP_KEY = r"^(.+)_[^_]+$"


class TemplateIdMismatch(ValueError):
    pass


class EmptyTemplate(ValueError):
    def __init__(self, template_ids: Sequence[str]):
        self.template_ids = list(template_ids)
        super().__init__(f"templates with zero pairs: {', '.join(self.template_ids)}")


@dataclass
class TemplateMetrics:
    template_id: str
    predicate_time_avg_ms: float = 0.0
    apply_time_avg_ms: float = 0.0
    predicate_evaluations: int = 0
    predicate_pass_count: int = 0
    apply_invocations: int = 0
    nonempty_apply_count: int = 0
    empty_case_count: int = 0
    qa_pairs_emitted: int = 0
    faults: int = 0

    @property
    def hit_rate(self) -> float:
        return self.nonempty_apply_count / max(1, self.apply_invocations)

    def record(self, outcome) -> None:
        if outcome.predicates_evaluated:
            n = self.predicate_evaluations
            self.predicate_time_avg_ms = (self.predicate_time_avg_ms * n + outcome.predicate_ms) / (n + 1)
            self.predicate_evaluations = n + 1
            if outcome.passed:
                self.predicate_pass_count += 1
        if outcome.apply_invoked:
            n = self.apply_invocations
            self.apply_time_avg_ms = (self.apply_time_avg_ms * n + outcome.apply_ms) / (n + 1)
            self.apply_invocations = n + 1
            if outcome.empty:
                self.empty_case_count += 1
            else:
                self.nonempty_apply_count += 1
        self.qa_pairs_emitted += outcome.pairs
        if outcome.fault:
            self.faults += 1

    def as_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        if not include_timing:
            for key in TIMING_FIELDS:
                d.pop(key)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TemplateMetrics":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _weighted(avg_a: float, n_a: int, avg_b: float, n_b: int) -> float:
    if n_a + n_b == 0:
        return 0.0
    return (avg_a * n_a + avg_b * n_b) / (n_a + n_b)


def merge_metrics(a: TemplateMetrics, b: TemplateMetrics) -> TemplateMetrics:
    """Counts add; averages recombine as means weighted by their call counts."""
    if a.template_id != b.template_id:
        raise TemplateIdMismatch(f"{a.template_id!r} != {b.template_id!r}")
    return TemplateMetrics(
        template_id=a.template_id,
        predicate_time_avg_ms=_weighted(a.predicate_time_avg_ms, a.predicate_evaluations,
                                        b.predicate_time_avg_ms, b.predicate_evaluations),
        apply_time_avg_ms=_weighted(a.apply_time_avg_ms, a.apply_invocations,
                                    b.apply_time_avg_ms, b.apply_invocations),
        predicate_evaluations=a.predicate_evaluations + b.predicate_evaluations,
        predicate_pass_count=a.predicate_pass_count + b.predicate_pass_count,
        apply_invocations=a.apply_invocations + b.apply_invocations,
        nonempty_apply_count=a.nonempty_apply_count + b.nonempty_apply_count,
        empty_case_count=a.empty_case_count + b.empty_case_count,
        qa_pairs_emitted=a.qa_pairs_emitted + b.qa_pairs_emitted,
        faults=a.faults + b.faults,
    )


@dataclass
class GenerationManifest:
    config_digest: str
    seed: int
    templates: List[str]
    source_files: List[str] = field(default_factory=list)
    scene_counts: Dict[str, int] = field(default_factory=dict)
    template_metrics: Dict[str, TemplateMetrics] = field(default_factory=dict)
    category_counts: Dict[str, int] = field(default_factory=dict)
    total_qa: int = 0
    faults: List[Dict[str, str]] = field(default_factory=list)
    ingest: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    sieve: bool = True
    partial: bool = False
    tool_version: str = __version__

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "templates": list(self.templates),
            "source_files": list(self.source_files),
            "scene_counts": dict(sorted(self.scene_counts.items())),
            "total_qa": self.total_qa,
            "category_counts": dict(sorted(self.category_counts.items())),
            "template_metrics": {
                tid: m.as_dict(include_timing) for tid, m in self.template_metrics.items()
            },
            "faults": list(self.faults),
            "ingest": self.ingest,
            "outputs": self.outputs,
            "sieve": self.sieve,
            "partial": self.partial,
        }

    def digest(self) -> str:
        """SHA-256 over the manifest with timing fields removed."""
        blob = json.dumps(self.to_dict(include_timing=False), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GenerationManifest":
        return cls(
            config_digest=d.get("config_digest", ""),
            seed=int(d.get("seed", 0)),
            templates=list(d.get("templates", [])),
            source_files=list(d.get("source_files", [])),
            scene_counts=dict(d.get("scene_counts", {})),
            template_metrics={
                tid: TemplateMetrics.from_dict(m) for tid, m in d.get("template_metrics", {}).items()
            },
            category_counts=dict(d.get("category_counts", {})),
            total_qa=int(d.get("total_qa", 0)),
            faults=list(d.get("faults", [])),
            ingest=dict(d.get("ingest", {})),
            outputs=dict(d.get("outputs", {})),
            sieve=bool(d.get("sieve", True)),
            partial=bool(d.get("partial", False)),
            tool_version=d.get("tool_version", __version__),
        )


def config_digest(config: TemplateConfig, template_ids: Sequence[str],
                  overrides: Optional[Mapping[str, TemplateConfig]] = None) -> str:
    payload = {
        "config": config.as_dict(),
        "templates": list(template_ids),
        "overrides": {k: v.as_dict() for k, v in sorted((overrides or {}).items())},
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


# --- generation -------------------------------------------------------------


def _run_chunk(args) -> Tuple[List[QAPair], Dict[str, TemplateMetrics], List[Dict[str, str]]]:
    scenes, template_ids, config, overrides, seed, sieve = args
    registry = build_registry(config)
    descriptors = [registry[t] for t in template_ids]
    return _run_scenes(scenes, descriptors, config, overrides, seed, sieve)


def _run_scenes(scenes: Iterable[SceneRecord], descriptors: Sequence[TemplateDescriptor],
                config: TemplateConfig, overrides: Mapping[str, TemplateConfig], seed: int,
                sieve: bool) -> Tuple[List[QAPair], Dict[str, TemplateMetrics], List[Dict[str, str]]]:
    metrics = {d.template_id: TemplateMetrics(d.template_id) for d in descriptors}
    pairs: List[QAPair] = []
    faults: List[Dict[str, str]] = []
    for scene in scenes:
        for desc in descriptors:
            cfg = overrides.get(desc.template_id, config)
            got, outcome = run_template(desc, scene, cfg, seed, sieve=sieve)
            metrics[desc.template_id].record(outcome)
            if outcome.fault:
                faults.append({"image_id": scene.image_id, "template_id": desc.template_id,
                               "error": outcome.fault.strip().splitlines()[-1]})
            pairs.extend(got)
    return pairs, metrics, faults


def _chunks(items: Sequence[SceneRecord], n: int) -> List[List[SceneRecord]]:
    size = max(1, -(-len(items) // n))
    return [list(items[i : i + size]) for i in range(0, len(items), size)]


def generate_dataset(
    scenes: Iterable[SceneRecord],
    templates: Sequence[TemplateDescriptor],
    config: TemplateConfig,
    seed: int = 0,
    worker_count: int = 1,
    sieve: bool = True,
    overrides: Optional[Mapping[str, TemplateConfig]] = None,
) -> Tuple[List[QAPair], GenerationManifest]:
    """Run every template on every scene.

    Output is sorted by (image_id, template_id, question) so it does not
    depend on ``worker_count``. Templates must come from
    ``build_registry(config)`` when ``worker_count > 1`` because workers
    rebuild the registry from ``config``.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    overrides = dict(overrides or {})
    scenes = list(scenes)
    template_ids = [d.template_id for d in templates]

    if worker_count == 1 or len(scenes) < 2:
        parts = [_run_scenes(scenes, templates, config, overrides, seed, sieve)]
    else:
        jobs = [(chunk, template_ids, config, overrides, seed, sieve)
                for chunk in _chunks(scenes, worker_count * 4)]
        with ProcessPoolExecutor(max_workers=worker_count) as pool:
            parts = list(pool.map(_run_chunk, jobs))

    metrics = {tid: TemplateMetrics(tid) for tid in template_ids}
    pairs: List[QAPair] = []
    faults: List[Dict[str, str]] = []
    for got, part_metrics, part_faults in parts:
        pairs.extend(got)
        faults.extend(part_faults)
        for tid, m in part_metrics.items():
            metrics[tid] = merge_metrics(metrics[tid], m)
    pairs.sort(key=QAPair.sort_key)
    faults.sort(key=lambda f: (f["image_id"], f["template_id"]))

    counts = Counter(p.category.value for p in pairs)
    split_counts = Counter(s.source_split.value for s in scenes)
    manifest = GenerationManifest(
        config_digest=config_digest(config, template_ids, overrides),
        seed=seed,
        templates=template_ids,
        scene_counts=dict(split_counts, total=len(scenes)),
        template_metrics=metrics,
        category_counts={c.value: counts.get(c.value, 0) for c in Category},
        total_qa=len(pairs),
        faults=faults,
        sieve=sieve,
    )
    return pairs, manifest


# --- corpus shaping ---------------------------------------------------------


def frame_select_score(scene: SceneRecord) -> float:
    """n_detections * (1 - largest box area / image area), floored at 0."""
    n = len(scene.detections)
    if n == 0:
        return 0.0
    largest = max(d.bbox.area for d in scene.detections)
    return max(0.0, n * (1.0 - largest / scene.image_area))


def frame_group(image_id: str, group_key: str = DEFAULT_GROUP_KEY) -> str:
    """Group name from ``image_id`` via a regex (first capture group, else the match)."""
    m = re.search(group_key, image_id)
    if m is None:
        return image_id
    return m.group(1) if m.groups() else m.group(0)


def select_frames(scenes: Iterable[SceneRecord], group_key: str = DEFAULT_GROUP_KEY) -> List[SceneRecord]:
    """Keep one scene per group: highest score, ties to the smallest image_id."""
    best: Dict[str, Tuple[float, str, SceneRecord]] = {}
    for scene in scenes:
        g = frame_group(scene.image_id, group_key)
        score = frame_select_score(scene)
        cur = best.get(g)
        if cur is None or (-score, scene.image_id) < (-cur[0], cur[1]):
            best[g] = (score, scene.image_id, scene)
    return [best[g][2] for g in sorted(best)]


def split_dataset(scenes: Iterable[SceneRecord], train_fraction: float, seed: int) -> Dict[str, Split]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    assignment = {}
    for scene in scenes:
        if scene.source_split is not Split.UNASSIGNED:
            assignment[scene.image_id] = scene.source_split
        elif unit_interval(seed, "split", scene.image_id) < train_fraction:
            assignment[scene.image_id] = Split.TRAIN
        else:
            assignment[scene.image_id] = Split.VAL
    return assignment


def balanced_sample(pairs: Iterable[QAPair], seed: int,
                    templates: Optional[Sequence[str]] = None) -> List[QAPair]:
    """m uniformly seeded pairs per template, m being the rarest template's count."""
    by_template: Dict[str, List[QAPair]] = defaultdict(list)
    for p in pairs:
        by_template[p.template_id].append(p)
    expected = list(templates) if templates is not None else sorted(by_template)
    empty = [t for t in expected if not by_template.get(t)]
    if empty:
        raise EmptyTemplate(empty)
    if not expected:
        return []
    m = min(len(by_template[t]) for t in expected)
    out: List[QAPair] = []
    for tid in sorted(expected):
        pool = sorted(by_template[tid], key=QAPair.sort_key)
        out.extend(rng_for(derive_seed(seed, "balanced", tid)).sample(pool, m))
    out.sort(key=QAPair.sort_key)
    return out
