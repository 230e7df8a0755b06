"""Compare engine output with the brute-force oracle over synthetic scenes."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..scene_model import QAPair, SceneRecord
from ..sparq.config import TemplateConfig
from ..sparq.templates import build_registry, run_template
from .answers import oracle_answers
from .synth import SceneRecipe, synth_scene


def pair_key(p: QAPair) -> Tuple[Any, ...]:
    return (p.image_id, p.template_id, p.question, p.answer, p.choices, p.category.value)


@dataclass
class Divergence:
    image_id: str
    template_id: str
    replay_seed: int
    engine_only: List[Dict[str, Any]]
    oracle_only: List[Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "image_id": self.image_id,
            "template_id": self.template_id,
            "replay_seed": self.replay_seed,
            "engine_only": self.engine_only,
            "oracle_only": self.oracle_only,
        }


@dataclass
class DifferentialReport:
    scenes: int = 0
    comparisons: int = 0
    engine_pairs: int = 0
    oracle_pairs: int = 0
    seconds: float = 0.0
    divergences: List[Divergence] = field(default_factory=list)

    @property
    def mismatches(self) -> int:
        return len(self.divergences)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenes": self.scenes,
            "comparisons": self.comparisons,
            "engine_pairs": self.engine_pairs,
            "oracle_pairs": self.oracle_pairs,
            "seconds": round(self.seconds, 3),
            "mismatches": self.mismatches,
            "divergences": [d.to_dict() for d in self.divergences],
        }


def _describe(keys: Counter) -> List[Dict[str, Any]]:
    out = []
    for key, n in sorted(keys.items(), key=lambda kv: repr(kv[0])):
        _, _, question, answer, choices, category = key
        out.append({"question": question, "answer": answer,
                    "choices": list(choices) if choices is not None else None,
                    "category": category, "count": n})
    return out


def compare_scene(scene: SceneRecord, template_ids: Sequence[str], config: TemplateConfig, seed: int,
                  replay_seed: int, report: DifferentialReport, sieve: bool = True) -> None:
    registry = build_registry(config)
    for tid in template_ids:
        engine, outcome = run_template(registry[tid], scene, config, seed, sieve=sieve)
        if outcome.fault:
            engine = []
        expected = oracle_answers(scene, tid, config, seed)
        report.comparisons += 1
        report.engine_pairs += len(engine)
        report.oracle_pairs += len(expected)
        got, want = Counter(map(pair_key, engine)), Counter(map(pair_key, expected))
        if got != want or outcome.fault:
            report.divergences.append(Divergence(
                scene.image_id, tid, replay_seed, _describe(got - want), _describe(want - got)))


def differential_run(recipes: Sequence[SceneRecipe], template_ids: Optional[Sequence[str]] = None,
                     config: Optional[TemplateConfig] = None, seed: int = 0,
                     sieve: bool = True) -> DifferentialReport:
    """Multiset comparison of engine and oracle pairs per (scene, template)."""
    cfg = config or TemplateConfig()
    ids = list(template_ids) if template_ids is not None else list(build_registry(cfg))
    report = DifferentialReport()
    t0 = time.perf_counter()
    for recipe in recipes:
        scene = synth_scene(recipe)
        report.scenes += 1
        compare_scene(scene, ids, cfg, seed, recipe.seed, report, sieve=sieve)
    report.seconds = time.perf_counter() - t0
    return report
