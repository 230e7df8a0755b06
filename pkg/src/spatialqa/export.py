"""QA serialization, the per-template stats report, and prediction scoring."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .engine import GenerationManifest, TemplateMetrics
from .scene_model import Category, QAPair

PathLike = Union[str, Path]

QA_FIELDS = ("image_id", "template", "category", "question", "answer", "choices", "objects", "seed")
STATS_COLUMNS = (
    "Template",
    "is_applicable Avg (ms)",
    "apply Avg (ms)",
    "Predicate → QA Hit Rate",
    "Empty cases",
    "QA pairs",
)
CATEGORY_COLUMNS = ("Category", "QA pairs", "Share")


class IoFailure(OSError):
    pass


class UnmatchedPrediction(KeyError):
    pass


# --- QA lines ---------------------------------------------------------------


def qa_to_dict(pair: QAPair) -> Dict[str, Any]:
    d: Dict[str, Any] = {
        "image_id": pair.image_id,
        "template": pair.template_id,
        "category": pair.category.value,
        "question": pair.question,
        "answer": pair.answer,
    }
    if pair.choices is not None:
        d["choices"] = list(pair.choices)
    d["objects"] = list(pair.objects_involved)
    d["seed"] = pair.generation_seed
    return d


def qa_from_dict(d: Mapping[str, Any]) -> QAPair:
    choices = d.get("choices")
    return QAPair(
        image_id=d["image_id"],
        template_id=d["template"],
        category=Category(d["category"]),
        question=d["question"],
        answer=d["answer"],
        choices=tuple(choices) if choices is not None else None,
        objects_involved=tuple(d.get("objects", ())),
        generation_seed=int(d.get("seed", 0)),
    )


def qa_line(pair: QAPair) -> str:
    return json.dumps(qa_to_dict(pair), ensure_ascii=False, separators=(",", ":"))


def write_qa(pairs: Iterable[QAPair], destination: PathLike) -> int:
    n = 0
    try:
        with open(destination, "w", encoding="utf-8", newline="\n") as f:
            for pair in pairs:
                f.write(qa_line(pair) + "\n")
                n += 1
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc
    return n


def iter_qa(source: PathLike) -> Iterator[QAPair]:
    with open(source, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                yield qa_from_dict(json.loads(line))


def read_qa(source: PathLike) -> List[QAPair]:
    return list(iter_qa(source))


def sha256_file(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(manifest: GenerationManifest, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def read_manifest(path: PathLike) -> GenerationManifest:
    with open(path, encoding="utf-8") as f:
        return GenerationManifest.from_dict(json.load(f))


# --- stats report -----------------------------------------------------------


def format_rate(fraction: float) -> str:
    return f"{100.0 * fraction:.1f}%"


def distribute_percentages(counts: Mapping[str, int]) -> Dict[str, float]:
    """Percentages to one decimal that sum to exactly 100.0 (largest remainder)."""
    total = sum(counts.values())
    if total == 0:
        return {k: 0.0 for k in counts}
    tenths = {k: 1000.0 * v / total for k, v in counts.items()}
    floors = {k: int(t) for k, t in tenths.items()}
    short = 1000 - sum(floors.values())
    by_remainder = sorted(counts, key=lambda k: (-(tenths[k] - floors[k]), k))
    for k in by_remainder[:short]:
        floors[k] += 1
    return {k: floors[k] / 10.0 for k in counts}


@dataclass
class StatsReport:
    rows: List[Dict[str, Any]]
    categories: Dict[str, int]
    shares: Dict[str, float]
    timing_available: bool = True
    metrics: Dict[str, TemplateMetrics] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.categories.values())

    def to_text(self) -> str:
        header = list(STATS_COLUMNS)
        body = [[str(r[c]) for c in header] for r in self.rows]
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(header)]
        lines = [
            "  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths))),
            "  ".join("-" * w for w in widths),
        ]
        for b in body:
            lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(b, widths))))
        lines.append("")
        lines.append("Category distribution")
        if self.total == 0:
            lines.append("no pairs")
        else:
            for cat, n in self.categories.items():
                lines.append(f"{cat:<18} {n:>10}  {self.shares[cat]:5.1f}%")
            lines.append(" / ".join(f"{self.shares[c]:.1f}%" for c in self.categories if self.categories[c]))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for r in self.rows:
            w.writerow([r[c] for c in STATS_COLUMNS])
        return buf.getvalue()

    def categories_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CATEGORY_COLUMNS)
        for cat, n in self.categories.items():
            w.writerow([cat, n, f"{self.shares[cat]:.1f}%"])
        return buf.getvalue()


def stats_report(manifest: GenerationManifest) -> StatsReport:
    rows = []
    for tid in manifest.templates or list(manifest.template_metrics):
        m = manifest.template_metrics.get(tid, TemplateMetrics(tid))
        rows.append({
            "Template": tid,
            "is_applicable Avg (ms)": f"{m.predicate_time_avg_ms:.2f}",
            "apply Avg (ms)": f"{m.apply_time_avg_ms:.2f}",
            "Predicate → QA Hit Rate": format_rate(m.hit_rate),
            "Empty cases": m.empty_case_count,
            "QA pairs": m.qa_pairs_emitted,
        })
    cats = {c.value: int(manifest.category_counts.get(c.value, 0)) for c in Category}
    return StatsReport(rows, cats, distribute_percentages(cats), metrics=dict(manifest.template_metrics))


def stats_from_qa(pairs: Iterable[QAPair]) -> StatsReport:
    """Report from a bare QA file: counts only, timing and sieve columns blank."""
    per_template: Dict[str, int] = defaultdict(int)
    cats = {c.value: 0 for c in Category}
    for p in pairs:
        per_template[p.template_id] += 1
        cats[p.category.value] += 1
    rows = [
        {
            "Template": tid,
            "is_applicable Avg (ms)": "n/a",
            "apply Avg (ms)": "n/a",
            "Predicate → QA Hit Rate": "n/a",
            "Empty cases": "n/a",
            "QA pairs": n,
        }
        for tid, n in sorted(per_template.items())
    ]
    return StatsReport(rows, cats, distribute_percentages(cats), timing_available=False)


# --- prediction scoring -----------------------------------------------------


def question_digest(image_id: str, template_id: str, question: str) -> str:
    """Stable 64-bit join key (16 hex chars) for a generated question."""
    blob = json.dumps([image_id, template_id, question], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


_TRAILING = ".!?,;:"
_LETTER = re.compile(r"^\(?([a-d])(?:\)|\.|:|,|\s|$)")
_INT = re.compile(r"^[+-]?\d+$")
LIST_TEMPLATES = ("RankLargestK", "DepthRanking")


def normalize_answer(text: str) -> str:
    s = text.strip().casefold()
    while s and (s[-1] in _TRAILING or s[-1].isspace()):
        s = s[:-1]
    return s


def answer_matches(pair: QAPair, raw: str) -> bool:
    gold = normalize_answer(pair.answer)
    pred = normalize_answer(raw)
    if gold in ("yes", "no"):
        token = re.split(r"[^a-z]+", pred, maxsplit=1)[0] if pred else ""
        return token == gold
    if pair.choices is not None:
        m = _LETTER.match(pred)
        return m is not None and m.group(1) == gold
    if pair.template_id.split("(", 1)[0] in LIST_TEMPLATES:
        return [s.strip() for s in gold.split(",")] == [s.strip() for s in pred.split(",")]
    if _INT.match(gold) and _INT.match(pred):
        return int(gold) == int(pred)
    return gold == pred


@dataclass
class ScoreReport:
    per_template: Dict[str, Tuple[int, int]]
    per_category: Dict[str, Tuple[int, int]]
    correct: int = 0
    scored: int = 0
    unmatched: int = 0
    duplicates: int = 0
    unanswered: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.scored if self.scored else 0.0

    @staticmethod
    def rate(cell: Tuple[int, int]) -> float:
        return cell[0] / cell[1] if cell[1] else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "scored": self.scored,
            "unmatched": self.unmatched,
            "duplicates": self.duplicates,
            "unanswered": self.unanswered,
            "per_template": {k: {"correct": c, "total": t, "accuracy": self.rate((c, t))}
                             for k, (c, t) in sorted(self.per_template.items())},
            "per_category": {k: {"correct": c, "total": t, "accuracy": self.rate((c, t))}
                             for k, (c, t) in sorted(self.per_category.items())},
        }


def read_predictions(source: PathLike) -> List[Dict[str, Any]]:
    with open(source, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def score_predictions(pairs: Sequence[QAPair], predictions: Iterable[Mapping[str, Any]]) -> ScoreReport:
    """Accuracy per template and category over the questions that got a prediction."""
    index = {question_digest(p.image_id, p.template_id, p.question): p for p in pairs}
    chosen: Dict[str, str] = {}
    report = ScoreReport({}, {})
    for pred in predictions:
        digest = pred.get("question_digest")
        if digest not in index or index[digest].image_id != pred.get("image_id", index[digest].image_id):
            report.unmatched += 1
            continue
        if digest in chosen:
            report.duplicates += 1
        chosen[digest] = str(pred.get("model_answer", ""))
    per_t: Dict[str, List[int]] = defaultdict(lambda: [0, 0])
    per_c: Dict[str, List[int]] = defaultdict(lambda: [0, 0])
    for digest, pair in index.items():
        if digest not in chosen:
            report.unanswered += 1
            continue
        ok = int(answer_matches(pair, chosen[digest]))
        for cell in (per_t[pair.template_id], per_c[pair.category.value]):
            cell[0] += ok
            cell[1] += 1
        report.correct += ok
        report.scored += 1
    report.per_template = {k: (v[0], v[1]) for k, v in per_t.items()}
    report.per_category = {k: (v[0], v[1]) for k, v in per_c.items()}
    return report
