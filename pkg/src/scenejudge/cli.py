"""Command-line entry point: ``scenejudge <command> ...``.

Verdicts are data: a run that completes exits 0 whatever it concluded about
the scene. Failures exit with the error's code and print one JSON record on
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from scenejudge import __version__
from scenejudge.dataset import (
    BUCKETS,
    HOLISTIC,
    bucket_by_complexity,
    load_annotations,
    load_bundle,
    load_labels,
    load_plans,
)
from scenejudge.errors import AlignmentError, EmptyInputError, ScenejudgeError
from scenejudge.gateway import PROFILES, Gateway, HttpBackend, MockBackend, RateLimiter
from scenejudge.metrics import (
    LabeledPair,
    PlanPair,
    agreement_columns,
    argument_f1,
    mean_edit_distance,
    success_rates,
    tool_f1,
)
from scenejudge.pipeline import (
    Constraint,
    ConstraintJudgment,
    ConstraintType,
    EvaluationReport,
    Instruction,
    RunContext,
    evaluate_scene,
    run_vlm_judge_baseline,
)
from scenejudge.raster import ImageBuffer
from scenejudge.scene import load_scene_env
from scenejudge.style import DEFAULT_RESOLUTION
from scenejudge.tools import ToolContext, invoke_tool, render_filenames

log = logging.getLogger("scenejudge")

OUTPUT_SCHEMA_VERSION = 1
PARTIAL_COLUMNS = {
    ConstraintType.FLOOR_LAYOUT.value: "Floor Layout",
    ConstraintType.MATERIAL_SELECTION.value: "Material Selection",
    ConstraintType.OBJECT_SELECTION.value: "Object Selection",
    ConstraintType.OBJECT_PLACEMENT.value: "Object Placement",
}
AGREEMENT_COLUMNS = ("F1", "Recall", "Precision", "Cohen's κ")
PLAN_COLUMNS = ("Tool F1", "GED", "Argument F1")


@dataclass(frozen=True)
class RunConfig:
    backend: str = "mock"
    model: str | None = None
    temperature: float = 0.0
    resolution: int | None = None
    dump_images: str | None = None
    parallel: int = 1
    mock_script: str | None = None

    def __post_init__(self):
        if self.parallel < 1:
            raise ValueError("parallelism must be at least 1")

    @property
    def render_resolution(self) -> int:
        return self.resolution or DEFAULT_RESOLUTION[self.backend]

    def snapshot(self) -> dict[str, Any]:
        out = asdict(self)
        out["resolution"] = self.render_resolution
        return out


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        backend=args.backend,
        model=args.model or os.environ.get("SJ_MODEL_NAME"),
        temperature=args.temperature,
        resolution=args.resolution,
        dump_images=args.dump_images,
        parallel=args.parallel,
        mock_script=args.mock_script,
    )


def build_gateway(config: RunConfig, transcript_path: Path | None = None) -> Gateway:
    profile = PROFILES[config.backend]
    if config.backend == "mock":
        backend = MockBackend.from_file(config.mock_script) if config.mock_script else MockBackend({})
    else:
        if not config.model:
            raise ScenejudgeError("a model name is required for live backends (--model or SJ_MODEL_NAME)")
        backend = HttpBackend(config.model)
    return Gateway(backend, profile, RateLimiter(max_in_flight=config.parallel), transcript_path)


def _write_json(data: Any, out: str | None) -> None:
    text = json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _envelope(kind: str, config: RunConfig | None, body: Mapping[str, Any]) -> dict[str, Any]:
    out: dict[str, Any] = {"schema_version": OUTPUT_SCHEMA_VERSION, "kind": kind}
    if config is not None:
        out["config"] = config.snapshot()
    out.update(body)
    return out


# -- evaluate ------------------------------------------------------------------------------


def _read_instruction(args: argparse.Namespace) -> Instruction:
    if args.instruction_file:
        path = Path(args.instruction_file)
        return Instruction(args.instruction_id or path.stem, path.read_text(encoding="utf-8").strip())
    return Instruction(args.instruction_id or "instruction", args.instruction or "")


def _constraints_for(path: str | None, instruction_id: str) -> list[Constraint] | None:
    if not path:
        return None
    grouped = load_annotations(Path(path))
    if instruction_id in grouped:
        return grouped[instruction_id]
    if len(grouped) == 1:
        return next(iter(grouped.values()))
    raise EmptyInputError(f"no annotated constraints for instruction {instruction_id!r} in {path}")


def summarize(report: EvaluationReport) -> str:
    verdicts = {j.constraint_id: j for j in report.judgments}
    lines = [f"instruction {report.instruction_id} on scene {report.scene_id} ({report.method})"]
    for c in report.constraints:
        j = verdicts.get(c.id)
        mark = "PASS" if j and j.valid else "FAIL"
        lines.append(f"  {mark} {c.id} [{c.ctype.value if c.ctype else '?'}] {c.text}")
        if j:
            lines.append(f"       {j.explanation}")
    lines.append(f"holistic: {'PASS' if report.holistic_valid else 'FAIL'}")
    return "\n".join(lines)


def _report_json(report: EvaluationReport, config: RunConfig) -> dict[str, Any]:
    data = report.to_json()
    data["config"] = config.snapshot()
    return data


def _run_one(
    config: RunConfig,
    gateway: Gateway,
    env,
    instruction: Instruction,
    constraints: Sequence[Constraint] | None,
    method: str,
    samples: int,
) -> EvaluationReport:
    ctx = RunContext(
        gateway,
        env,
        resolution=config.render_resolution,
        parallel=config.parallel,
        dump_images=Path(config.dump_images) / instruction.id if config.dump_images else None,
        temperature=config.temperature,
    )
    if method == "baseline":
        return run_vlm_judge_baseline(ctx, instruction, env.scene.scene_id, constraints, samples)
    return evaluate_scene(ctx, instruction, env.scene.scene_id, constraints)


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    env = load_scene_env(args.scene)
    instruction = _read_instruction(args)
    constraints = _constraints_for(args.constraints, instruction.id)
    transcript = Path(args.out).with_suffix(".transcripts.jsonl") if args.out else None
    gateway = build_gateway(config, transcript)
    try:
        report = _run_one(config, gateway, env, instruction, constraints, args.method, args.samples)
    except ScenejudgeError as exc:
        partial = getattr(exc, "partial_report", None)
        if partial is not None and args.out:
            _write_json(_report_json(partial, config), str(Path(args.out).with_suffix(".partial.json")))
        raise
    if transcript is not None:
        report.transcripts_ref = transcript.name
    _write_json(_report_json(report, config), args.out)
    if args.out:
        print(summarize(report))
    return 0


# -- bench --------------------------------------------------------------------------------


def _missing_scene_report(instruction: Instruction, constraints: Sequence[Constraint], reason: str) -> EvaluationReport:
    judgments = [ConstraintJudgment(c.id, False, f"Scene unavailable: {reason}") for c in constraints]
    return EvaluationReport(instruction.id, "", list(constraints), judgments)


def bench_columns(reports: Sequence[EvaluationReport], buckets: Mapping[str, Sequence[str]]) -> dict[str, Any]:
    rates = success_rates(reports)
    partial = {PARTIAL_COLUMNS[k]: v for k, v in rates["partial_sr"].items()}
    partial["Avg."] = rates["partial_sr_avg"]
    by_id = {r.instruction_id: r for r in reports}
    by_bucket: dict[str, float | None] = {}
    for b in BUCKETS:
        members = [by_id[i] for i in buckets.get(b, []) if i in by_id]
        by_bucket[b] = sum(r.holistic_valid for r in members) / len(members) if members else None
    return {
        "Holistic SR": rates["holistic_sr"],
        "Partial SR": partial,
        "Holistic SR by complexity": by_bucket,
        "instructions_per_bucket": {b: len(buckets.get(b, [])) for b in BUCKETS},
    }


def cmd_bench(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    bundle = load_bundle(args.bundle)
    scenes_dir = Path(args.scenes) if args.scenes else bundle.root / "scenes"
    reports_dir = Path(args.reports_dir) if args.reports_dir else None
    gateway = build_gateway(config, reports_dir / "transcripts.jsonl" if reports_dir else None)
    missing: list[str] = []

    def run(instruction: Instruction) -> EvaluationReport:
        constraints = bundle.annotations.get(instruction.id, [])
        path = scenes_dir / f"{instruction.id}.json"
        if not path.is_file():
            log.warning("no scene for %s; scoring it invalid", instruction.id)
            missing.append(instruction.id)
            return _missing_scene_report(instruction, constraints, "no scene file")
        try:
            env = load_scene_env(path)
        except ScenejudgeError as exc:
            log.warning("scene for %s does not load (%s); scoring it invalid", instruction.id, exc)
            missing.append(instruction.id)
            return _missing_scene_report(instruction, constraints, f"{type(exc).__name__}: {exc}")
        return _run_one(config, gateway, env, instruction, constraints, args.method, args.samples)

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            reports = list(pool.map(run, bundle.instructions))
    else:
        reports = [run(i) for i in bundle.instructions]

    if reports_dir is not None:
        reports_dir.mkdir(parents=True, exist_ok=True)
        for r in reports:
            _write_json(_report_json(r, config), str(reports_dir / f"{r.instruction_id}.json"))
    body = bench_columns(reports, bucket_by_complexity(bundle))
    body["method"] = args.method
    body["missing_scenes"] = sorted(missing)
    body["bundle_stats"] = bundle.stats
    _write_json(_envelope("bench", config, body), args.out)
    return 0


# -- agree --------------------------------------------------------------------------------


def load_reports(directory: str | Path) -> list[EvaluationReport]:
    reports = []
    for path in sorted(Path(directory).glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(data, dict) and "constraints" in data and "instruction_id" in data:
            reports.append(EvaluationReport.from_json(data))
    return reports


def agreement_pairs(
    reports: Sequence[EvaluationReport], labels: Mapping[tuple[str, str, str], bool]
) -> tuple[list[LabeledPair], list[LabeledPair]]:
    holistic: list[LabeledPair] = []
    partial: list[LabeledPair] = []
    missing: list[str] = []
    for r in reports:
        scene = r.scene_id or r.instruction_id
        keys = [(r.instruction_id, scene), (r.instruction_id, r.instruction_id)]
        base = next((k for k in keys if (*k, HOLISTIC) in labels), None)
        if base is None:
            missing.append(f"{r.instruction_id}@{scene}/{HOLISTIC}")
            continue
        holistic.append(LabeledPair(r.holistic_valid, labels[(*base, HOLISTIC)]))
        verdicts = {j.constraint_id: j.valid for j in r.judgments}
        for c in r.constraints:
            key = (*base, c.id)
            if key not in labels:
                missing.append(f"{r.instruction_id}@{scene}/{c.id}")
                continue
            partial.append(LabeledPair(verdicts.get(c.id, False), labels[key], "constraint", c.ctype))
    if missing:
        raise AlignmentError(missing, f"{len(missing)} verdicts have no human label")
    return holistic, partial


def agreement_table(holistic: Sequence[LabeledPair], partial: Sequence[LabeledPair]) -> dict[str, Any]:
    if not holistic:
        raise EmptyInputError("no labeled reports to compare")
    return {
        "Holistic": agreement_columns(holistic),
        "Partial": agreement_columns(partial) if partial else {k: None for k in AGREEMENT_COLUMNS},
        "counts": {"holistic": len(holistic), "partial": len(partial)},
    }


def cmd_agree(args: argparse.Namespace) -> int:
    reports = load_reports(args.reports)
    if not reports:
        raise EmptyInputError(f"no reports found in {args.reports}")
    holistic, partial = agreement_pairs(reports, load_labels(Path(args.labels)))
    _write_json(_envelope("agree", None, agreement_table(holistic, partial)), args.out)
    return 0


# -- plan-score ---------------------------------------------------------------------------


def plan_pairs(predicted_path: Path, gold_path: Path) -> list[PlanPair]:
    predicted, gold = load_plans(predicted_path), load_plans(gold_path)
    missing = sorted(f"{i}/{c}" for i, c in set(predicted) ^ set(gold))
    if missing:
        raise AlignmentError(missing, "plans present in only one file")
    return [
        PlanPair(predicted[k].plan, gold[k].plan, predicted[k].arguments, gold[k].arguments)
        for k in sorted(gold)
    ]


def plan_score_table(pairs: Sequence[PlanPair]) -> dict[str, Any]:
    return {
        "Tool F1": tool_f1(pairs),
        "GED": mean_edit_distance(pairs),
        "Argument F1": argument_f1(pairs),
        "pairs": len(pairs),
    }


def cmd_plan_score(args: argparse.Namespace) -> int:
    pairs = plan_pairs(Path(args.predicted), Path(args.gold))
    _write_json(_envelope("plan-score", None, plan_score_table(pairs)), args.out)
    return 0


# -- render -------------------------------------------------------------------------------


def cmd_render(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    env = load_scene_env(args.scene)
    arguments = json.loads(args.args)
    gateway = build_gateway(config)
    payload = invoke_tool(args.tool, arguments, ToolContext(env, gateway, config.render_resolution))
    images: list[ImageBuffer] = []
    if isinstance(payload, Mapping):
        for views in payload.values():
            if isinstance(views, list):
                images += [v for v in views if isinstance(v, ImageBuffer)]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, image in zip(render_filenames(args.tool, arguments, len(images)), images):
        image.save_png(out_dir / name)
        written.append(str(out_dir / name))
    if not images:
        # text tools: print the record instead
        _write_json(payload, None)
    else:
        _write_json({"schema_version": OUTPUT_SCHEMA_VERSION, "files": written}, None)
    return 0


# -- plumbing -----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=sorted(PROFILES), default="mock")
    p.add_argument("--model", default=None, help="model name for live backends")
    p.add_argument("--mock-script", default=None, help="JSON file of scripted responses for the mock backend")
    p.add_argument("--resolution", type=int, choices=(335, 1200), default=None)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--dump-images", default=None, metavar="DIR", help="save every rendered image here")
    p.add_argument("--parallel", type=int, default=1, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scenejudge", description="Judge 3D scenes against text instructions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="judge one scene against one instruction")
    _common(p)
    p.add_argument("--scene", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--instruction")
    src.add_argument("--instruction-file")
    p.add_argument("--instruction-id", default=None)
    p.add_argument("--constraints", default=None, help="annotations.jsonl; skips constraint extraction")
    p.add_argument("--method", choices=("agent", "baseline"), default="agent")
    p.add_argument("--samples", type=int, default=3, help="votes per constraint for the baseline judge")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="success rates of a generator's scenes over a bundle")
    _common(p)
    p.add_argument("bundle")
    p.add_argument("--scenes", default=None, help="directory of <instruction_id>.json scenes (default: gold)")
    p.add_argument("--reports-dir", default=None)
    p.add_argument("--method", choices=("agent", "baseline"), default="agent")
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("agree", help="agreement of saved reports with human labels")
    p.add_argument("reports")
    p.add_argument("labels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("plan-score", help="compare predicted tool plans with gold plans")
    p.add_argument("predicted")
    p.add_argument("gold")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_plan_score)

    p = sub.add_parser("render", help="run one tool and write its images as PNG")
    _common(p)
    p.add_argument("--scene", required=True)
    p.add_argument("--tool", required=True)
    p.add_argument("--args", default="{}", help="tool arguments as a JSON object")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def error_record(exc: BaseException) -> dict[str, Any]:
    code = exc.exit_code if isinstance(exc, ScenejudgeError) else 3
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("path", "missing"):
        if hasattr(exc, attr):
            record[attr] = getattr(exc, attr)
    return record


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenejudgeError, OSError, ValueError) as exc:
        record = error_record(exc)
        sys.stderr.write(json.dumps(record, sort_keys=True, default=str) + "\n")
        return record["exit_code"]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
