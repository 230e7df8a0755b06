"""Command-line entry point: ``sparq generate|stats|sample|validate|bench|score|synth``.

Exit codes: 0 ok, 1 runtime fault, 2 invalid input.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .engine import (
    DEFAULT_GROUP_KEY,
    EmptyTemplate,
    GenerationManifest,
    balanced_sample,
    config_digest,
    generate_dataset,
    select_frames,
    split_dataset,
)
from .export import (
    IoFailure,
    qa_line,
    read_manifest,
    read_predictions,
    read_qa,
    score_predictions,
    sha256_file,
    stats_from_qa,
    stats_report,
    write_manifest,
    write_qa,
)
from .ingest import (
    DanglingReference,
    DimensionMismatch,
    HeaderMismatch,
    IngestTally,
    MalformedDocument,
    TruncatedPayload,
    attach_depth,
    coco_file_names,
    load_depth_grid,
    parse_coco,
    parse_native,
    write_native,
)
from .scene_model import SceneRecord, Split
from .sparq.config import TemplateConfig
from .sparq.templates import TemplateDescriptor, build_registry, resolve_templates

logger = logging.getLogger("sparq")

EXIT_OK, EXIT_FAULT, EXIT_INVALID = 0, 1, 2
CONFIG_ENV = "SPARQ_CONFIG"
EXIT_HELP = "exit codes: 0 ok, 1 runtime fault, 2 invalid input"


class InvalidInput(Exception):
    """Anything that should end the run with exit code 2."""


@dataclass
class RunConfig:
    inputs: List[str] = field(default_factory=list)
    input_format: Optional[str] = None
    depth_dir: Optional[str] = None
    embedded_depth: bool = False
    templates: Optional[List[str]] = None
    thresholds: TemplateConfig = field(default_factory=TemplateConfig)
    overrides: Dict[str, Dict[str, str]] = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str = "sparq_out"
    split: Optional[float] = None
    frame_select: bool = False
    group_key: str = DEFAULT_GROUP_KEY
    strict: bool = False
    figures: bool = True

    @property
    def has_depth_source(self) -> bool:
        return self.depth_dir is not None or self.embedded_depth


# --- config loading -----------------------------------------------------------


def _split_list(text: str) -> List[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise InvalidInput(f"not a boolean: {text!r}")


def load_run_config(path: Optional[str]) -> RunConfig:
    """Read an INI file with [generate], [thresholds] and [template.<id>] sections."""
    rc = RunConfig()
    if not path:
        return rc
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise InvalidInput(f"config {path}: {exc}") from exc
    base = Path(path).parent
    try:
        if parser.has_section("generate"):
            g = parser["generate"]
            if "input" in g:
                rc.inputs = [str(base / p) for p in _split_list(g["input"])]
            rc.input_format = g.get("format", rc.input_format)
            if "depth_dir" in g:
                rc.depth_dir = str(base / g["depth_dir"])
            if "embedded_depth" in g:
                rc.embedded_depth = _bool(g["embedded_depth"])
            if "templates" in g:
                rc.templates = _split_list(g["templates"])
            rc.seed = int(g.get("seed", rc.seed))
            rc.workers = int(g.get("workers", rc.workers))
            if "out" in g:
                rc.out = str(base / g["out"])
            if "split" in g:
                rc.split = float(g["split"])
            if "frame_select" in g:
                rc.frame_select = _bool(g["frame_select"])
            rc.group_key = g.get("group_key", rc.group_key)
            if "strict" in g:
                rc.strict = _bool(g["strict"])
        if parser.has_section("thresholds"):
            rc.thresholds = TemplateConfig.from_mapping(dict(parser["thresholds"]))
        for section in parser.sections():
            if section.startswith("template."):
                rc.overrides[section[len("template."):]] = dict(parser[section])
    except (KeyError, ValueError) as exc:
        raise InvalidInput(f"config {path}: {exc}") from exc
    return rc


def _parse_settings(items: Sequence[str]) -> Dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidInput(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then every flag that was given on the command line."""
    rc = load_run_config(args.config or os.environ.get(CONFIG_ENV))
    if args.input:
        rc.inputs = list(args.input)
    if args.format:
        rc.input_format = args.format
    if args.depth_dir:
        rc.depth_dir = args.depth_dir
    if args.embedded_depth:
        rc.embedded_depth = True
    if args.templates:
        rc.templates = _split_list(args.templates)
    if args.seed is not None:
        rc.seed = args.seed
    if args.workers is not None:
        rc.workers = args.workers
    if args.out:
        rc.out = args.out
    if args.split is not None:
        rc.split = args.split
    if args.frame_select:
        rc.frame_select = True
    if args.group_key:
        rc.group_key = args.group_key
    if args.strict:
        rc.strict = True
    if args.no_figures:
        rc.figures = False
    if args.set:
        try:
            rc.thresholds = TemplateConfig.from_mapping(_parse_settings(args.set), rc.thresholds)
        except (KeyError, ValueError) as exc:
            raise InvalidInput(str(exc)) from exc
    if not rc.inputs:
        raise InvalidInput("no input given (use --input or a config file)")
    if rc.workers < 1:
        raise InvalidInput("--workers must be >= 1")
    if rc.split is not None and not 0.0 < rc.split < 1.0:
        raise InvalidInput("--split must be a fraction in (0, 1)")
    return rc


def select_templates(rc: RunConfig) -> Tuple[Dict[str, TemplateDescriptor], List[TemplateDescriptor]]:
    registry = build_registry(rc.thresholds)
    try:
        chosen = resolve_templates(rc.templates, registry, include_depth=rc.has_depth_source)
    except KeyError as exc:
        raise InvalidInput(exc.args[0]) from exc
    needs_depth = [d.template_id for d in chosen if d.requires_depth]
    if needs_depth and not rc.has_depth_source:
        raise InvalidInput(
            "depth templates enabled without a depth source (--depth-dir or --embedded-depth): "
            + ", ".join(needs_depth)
        )
    return registry, chosen


def build_overrides(rc: RunConfig, chosen: Sequence[TemplateDescriptor]) -> Dict[str, TemplateConfig]:
    by_name = {d.template_id: d for d in chosen}
    by_name.update({d.base_name: d for d in chosen})
    overrides = {}
    for name, values in rc.overrides.items():
        desc = by_name.get(name)
        if desc is None:
            logger.warning("override section for %s ignored: template not enabled", name)
            continue
        try:
            overrides[desc.template_id] = TemplateConfig.from_mapping(values, rc.thresholds)
        except (KeyError, ValueError) as exc:
            raise InvalidInput(f"[template.{name}]: {exc}") from exc
    return overrides


# --- ingestion ----------------------------------------------------------------


def _guess_format(path: str) -> str:
    return "native" if path.endswith((".jsonl", ".ndjson")) else "coco"


def load_scenes(paths: Sequence[str], fmt: Optional[str], tally: IngestTally, strict: bool,
                percentile: float) -> Tuple[List[SceneRecord], Dict[str, str]]:
    """Scenes from every input, plus image_id -> depth file stem."""
    scenes: List[SceneRecord] = []
    stems: Dict[str, str] = {}
    for path in paths:
        kind = fmt or _guess_format(path)
        try:
            if kind == "coco":
                data = Path(path).read_bytes()
                got = parse_coco(data, tally, strict=True)
                for image_id, name in coco_file_names(data).items():
                    stems[image_id] = Path(name).stem
            else:
                with open(path, encoding="utf-8") as f:
                    local = IngestTally()
                    got = list(parse_native(f, percentile, local))
                    if strict and local.malformed_lines:
                        ln, msg = local.malformed_lines[0]
                        raise InvalidInput(f"{path}:{ln}: {msg}")
                    tally.merge(local)
                for s in got:
                    if s.depth_file:
                        stems[s.image_id] = s.depth_file
        except OSError as exc:
            raise InvalidInput(f"cannot read {path}: {exc}") from exc
        except (MalformedDocument, DanglingReference) as exc:
            raise InvalidInput(f"{path}: {exc}") from exc
        scenes.extend(got)
    seen = set()
    for s in scenes:
        if s.image_id in seen:
            raise InvalidInput(f"duplicate image_id {s.image_id!r} across inputs")
        seen.add(s.image_id)
    return scenes, stems


def _depth_path(depth_dir: str, image_id: str, stems: Dict[str, str]) -> Path:
    name = stems.get(image_id, image_id)
    if not name.endswith(".depth"):
        name = name + ".depth"
    return Path(depth_dir) / name


def attach_depth_dir(scenes: List[SceneRecord], depth_dir: str, stems: Dict[str, str],
                     percentile: float) -> Dict[str, int]:
    counts = {"depth_files_missing": 0, "depth_unresolved_detections": 0}
    for i, scene in enumerate(scenes):
        path = _depth_path(depth_dir, scene.image_id, stems)
        if not path.exists():
            counts["depth_files_missing"] += 1
            continue
        try:
            grid = load_depth_grid(path.read_bytes(), scene.width, scene.height)
            scenes[i], unresolved = attach_depth(scene, grid, percentile)
        except (HeaderMismatch, DimensionMismatch, TruncatedPayload) as exc:
            raise InvalidInput(f"{path}: {exc}") from exc
        counts["depth_unresolved_detections"] += unresolved
    return counts


def _file_digest(path: str) -> Dict[str, str]:
    return {"name": Path(path).name, "sha256": sha256_file(path)}


# --- subcommands ----------------------------------------------------------------


def _write_reports(manifest: GenerationManifest, out: Path, figures: bool) -> None:
    report = stats_report(manifest)
    (out / "stats.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "stats.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "categories.csv").write_text(report.categories_csv(), encoding="utf-8")
    if figures:
        from .figures import render_stats_figures

        render_stats_figures(report, out / "figures")


def cmd_generate(args: argparse.Namespace) -> int:
    rc = resolve_run_config(args)
    registry, chosen = select_templates(rc)
    overrides = build_overrides(rc, chosen)
    tally = IngestTally()
    scenes, stems = load_scenes(rc.inputs, rc.input_format, tally, rc.strict, rc.thresholds.depth_percentile)
    ingest = tally.as_dict()
    if rc.depth_dir:
        ingest.update(attach_depth_dir(scenes, rc.depth_dir, stems, rc.thresholds.depth_percentile))
    if rc.frame_select:
        before = len(scenes)
        scenes = select_frames(scenes, rc.group_key)
        ingest["frames_dropped"] = before - len(scenes)
    assignment = None
    if rc.split is not None:
        assignment = split_dataset(scenes, rc.split, rc.seed)
        scenes = [s.with_split(assignment[s.image_id]) for s in scenes]

    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = [d.template_id for d in chosen]
    manifest = GenerationManifest(config_digest=config_digest(rc.thresholds, ids, overrides), seed=rc.seed,
                                  templates=ids, partial=True)
    sources = [f"{d['name']}:{d['sha256']}" for d in map(_file_digest, rc.inputs)]
    manifest.source_files = sources
    try:
        pairs, manifest = generate_dataset(scenes, chosen, rc.thresholds, seed=rc.seed,
                                           worker_count=rc.workers, overrides=overrides)
    except KeyboardInterrupt:
        manifest.ingest = ingest
        write_manifest(manifest, out / "manifest.json")
        print("interrupted; partial manifest written", file=sys.stderr)
        return EXIT_FAULT
    manifest.source_files = sources
    manifest.ingest = ingest

    outputs = {}
    if assignment is None:
        write_qa(pairs, out / "qa.jsonl")
        outputs["qa.jsonl"] = sha256_file(out / "qa.jsonl")
    else:
        for split in (Split.TRAIN, Split.VAL):
            sub = out / split.value
            sub.mkdir(exist_ok=True)
            part = [p for p in pairs if assignment[p.image_id] is split]
            write_qa(part, sub / "qa.jsonl")
            outputs[f"{split.value}/qa.jsonl"] = sha256_file(sub / "qa.jsonl")
    manifest.outputs = outputs
    write_manifest(manifest, out / "manifest.json")
    _write_reports(manifest, out, rc.figures)

    print(f"{manifest.total_qa} QA pairs from {len(scenes)} scenes, {len(ids)} templates -> {out}")
    if manifest.faults:
        print(f"{len(manifest.faults)} template faults; see manifest.json", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise InvalidInput(f"no such file: {path}")
    try:
        if path.suffix == ".json":
            report = stats_report(read_manifest(path))
        else:
            report = stats_from_qa(read_qa(path))
    except (ValueError, KeyError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    print(report.to_csv() if args.format == "csv" else report.to_text(), end="")
    if args.figures:
        from .figures import render_stats_figures

        for written in render_stats_figures(report, Path(args.figures)):
            print(f"wrote {written}", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise InvalidInput(f"no such file: {path}")
    try:
        pairs = read_qa(path)
    except (ValueError, KeyError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    expected = _split_list(args.templates) if args.templates else None
    try:
        sample = balanced_sample(pairs, args.seed, expected)
    except EmptyTemplate as exc:
        if args.strict:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"warning: {exc}; sampling the others", file=sys.stderr)
        present = [t for t in expected if t not in exc.template_ids]
        sample = balanced_sample(pairs, args.seed, present)
    if args.out:
        write_qa(sample, args.out)
    else:
        for pair in sample:
            print(qa_line(pair))
    print(f"sampled {len(sample)} pairs", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    issues: List[str] = []
    warnings: List[str] = []
    total_scenes = 0
    for path in args.input:
        kind = args.format or _guess_format(path)
        tally = IngestTally()
        try:
            if kind == "coco":
                scenes = parse_coco(Path(path).read_bytes(), tally, strict=False)
            else:
                with open(path, encoding="utf-8") as f:
                    scenes = list(parse_native(f, tally=tally))
        except OSError as exc:
            raise InvalidInput(f"cannot read {path}: {exc}") from exc
        except MalformedDocument as exc:
            raise InvalidInput(f"{path}: {exc}") from exc
        total_scenes += len(scenes)
        issues.extend(f"{path}: {d}" for d in tally.dangling)
        issues.extend(f"{path}:{ln}: {msg}" for ln, msg in tally.malformed_lines)
        if tally.dropped_degenerate:
            warnings.append(f"{path}: {tally.dropped_degenerate} degenerate boxes dropped")
        if tally.clamped_boxes:
            warnings.append(f"{path}: {tally.clamped_boxes} boxes clamped to the image")
        if tally.skipped_crowd:
            warnings.append(f"{path}: {tally.skipped_crowd} crowd annotations skipped")
    for w in warnings:
        print(f"warning: {w}")
    for issue in issues:
        print(f"issue: {issue}")
    print(f"{total_scenes} scenes, {len(issues)} issues, {len(warnings)} warnings")
    return EXIT_FAULT if issues else EXIT_OK


def _pairs_digest(pairs) -> str:
    h = hashlib.sha256()
    for p in pairs:
        h.update((qa_line(p) + "\n").encode("utf-8"))
    return h.hexdigest()


def _bench_scenes(args: argparse.Namespace) -> List[SceneRecord]:
    if args.synth is not None:
        from .oracle.synth import random_scene

        return [random_scene(args.synth_seed + i) for i in range(args.synth)]
    if not args.input:
        raise InvalidInput("bench needs --input or --synth N")
    scenes, stems = load_scenes(args.input, args.format, IngestTally(), False, TemplateConfig().depth_percentile)
    if args.depth_dir:
        attach_depth_dir(scenes, args.depth_dir, stems, TemplateConfig().depth_percentile)
    return scenes


def _template_ms(m) -> float:
    return m.predicate_time_avg_ms * m.predicate_evaluations + m.apply_time_avg_ms * m.apply_invocations


def cmd_bench(args: argparse.Namespace) -> int:
    scenes = _bench_scenes(args)
    registry = build_registry(TemplateConfig())
    has_depth = bool(args.depth_dir) or any(d.depth_summary is not None for s in scenes for d in s.detections)
    try:
        chosen = resolve_templates(_split_list(args.templates) if args.templates else None, registry,
                                   include_depth=has_depth)
    except KeyError as exc:
        raise InvalidInput(exc.args[0]) from exc
    cfg = TemplateConfig()
    modes = [False] if args.no_sieve else [True, False]
    runs = {}
    for sieve in modes:
        t0 = time.perf_counter()
        pairs, manifest = generate_dataset(scenes, chosen, cfg, seed=args.seed, worker_count=args.workers,
                                           sieve=sieve)
        runs[sieve] = (pairs, manifest, time.perf_counter() - t0)

    rows = []
    for d in chosen:
        row = {"template": d.template_id}
        for sieve, (_, manifest, _) in runs.items():
            m = manifest.template_metrics[d.template_id]
            row["sieve" if sieve else "no_sieve"] = {"apply_calls": m.apply_invocations, "ms": _template_ms(m),
                                                     "pairs": m.qa_pairs_emitted}
        if len(runs) == 2:
            on, off = row["sieve"]["ms"], row["no_sieve"]["ms"]
            row["speedup"] = off / on if on > 0 else None
        rows.append(row)
    digests = {("sieve" if s else "no_sieve"): _pairs_digest(p) for s, (p, _, _) in runs.items()}
    wall = {("sieve" if s else "no_sieve"): t for s, (_, _, t) in runs.items()}
    identical = len(set(digests.values())) == 1

    if args.json:
        print(json.dumps({"scenes": len(scenes), "rows": rows, "digests": digests, "wall_s": wall,
                          "identical": identical}, indent=2))
    else:
        if len(runs) == 2:
            print(f"{'Template':<28} {'apply (sieve)':>14} {'apply (off)':>12} {'speedup':>9}")
            for r in rows:
                sp = f"{r['speedup']:.1f}x" if r["speedup"] is not None else "n/a"
                print(f"{r['template']:<28} {r['sieve']['apply_calls']:>14} {r['no_sieve']['apply_calls']:>12} "
                      f"{sp:>9}")
            total = wall["no_sieve"] / wall["sieve"] if wall["sieve"] > 0 else float("nan")
            print(f"wall clock: sieve {wall['sieve']:.3f}s, off {wall['no_sieve']:.3f}s, ratio {total:.2f}")
        else:
            print(f"{'Template':<28} {'apply (off)':>12}")
            for r in rows:
                print(f"{r['template']:<28} {r['no_sieve']['apply_calls']:>12}")
        for mode, digest in digests.items():
            print(f"qa digest ({mode}): {digest}")
        if len(runs) == 2:
            print("outputs identical: " + ("yes" if identical else "NO"))
    if args.out:
        primary = runs[modes[0]][0]
        write_qa(primary, args.out)
    return EXIT_OK if identical else EXIT_FAULT


def cmd_score(args: argparse.Namespace) -> int:
    for p in (args.input, args.predictions):
        if not Path(p).is_file():
            raise InvalidInput(f"no such file: {p}")
    report = score_predictions(read_qa(args.input), read_predictions(args.predictions))
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    from .oracle.synth import random_scene

    depth = True if args.depth else None
    scenes = (random_scene(args.seed + i, depth=depth) for i in range(args.count))
    n = write_native(scenes, args.out)
    print(f"wrote {n} scenes to {args.out}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparq", description="Spatial QA generation from detection annotations.",
                                     epilog=EXIT_HELP)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate QA pairs, manifest and stats", epilog=EXIT_HELP)
    g.add_argument("--config", help=f"INI config file (default: ${CONFIG_ENV})")
    g.add_argument("--input", action="append", help="annotation file; repeatable")
    g.add_argument("--format", choices=("coco", "native"), help="input format (default: by extension)")
    g.add_argument("--depth-dir", help="directory of per-image depth grids")
    g.add_argument("--embedded-depth", action="store_true", help="native input already carries depth values")
    g.add_argument("--templates", help="comma-separated template ids or names")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out", help="output directory")
    g.add_argument("--split", type=float, help="train fraction for a seeded train/val split")
    g.add_argument("--frame-select", action="store_true", help="keep one frame per image_id group")
    g.add_argument("--group-key", help="regex whose first group names the frame group")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="threshold override; repeatable")
    g.add_argument("--strict", action="store_true", help="treat malformed input lines as fatal")
    g.add_argument("--no-figures", action="store_true")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="print the per-template stats table", epilog=EXIT_HELP)
    s.add_argument("--input", required=True, help="manifest.json or qa.jsonl")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.add_argument("--figures", help="also render figures into this directory")
    s.set_defaults(func=cmd_stats)

    sm = sub.add_parser("sample", help="balanced per-template sample", epilog=EXIT_HELP)
    sm.add_argument("--input", required=True, help="qa.jsonl")
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--out", help="output qa.jsonl (default: stdout)")
    sm.add_argument("--templates", help="templates expected to be present")
    sm.add_argument("--strict", action="store_true", help="fail when an expected template has no pairs")
    sm.set_defaults(func=cmd_sample)

    v = sub.add_parser("validate", help="audit annotation files", epilog=EXIT_HELP)
    v.add_argument("--input", action="append", required=True)
    v.add_argument("--format", choices=("coco", "native"))
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="apply calls and timing with and without the sieve", epilog=EXIT_HELP)
    b.add_argument("--input", action="append")
    b.add_argument("--format", choices=("coco", "native"))
    b.add_argument("--depth-dir")
    b.add_argument("--synth", type=int, metavar="N", help="use N synthetic scenes instead of --input")
    b.add_argument("--synth-seed", type=int, default=0)
    b.add_argument("--templates")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-sieve", action="store_true", help="run only with predicates disabled")
    b.add_argument("--out", help="write the QA output of the first mode run")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bench)

    sc = sub.add_parser("score", help="score model predictions against a QA file", epilog=EXIT_HELP)
    sc.add_argument("--input", required=True, help="qa.jsonl")
    sc.add_argument("--predictions", required=True, help="jsonl with question_digest and model_answer")
    sc.set_defaults(func=cmd_score)

    sy = sub.add_parser("synth", help="write synthetic scenes in the native format", epilog=EXIT_HELP)
    sy.add_argument("--count", type=int, default=100)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--depth", action="store_true", help="give every scene depth values")
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_FAULT
    except Exception as exc:  # noqa: BLE001
        logger.debug("fault", exc_info=True)
        print(f"fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
