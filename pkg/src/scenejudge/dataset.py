"""Benchmark bundles: instructions, typed constraint annotations, gold scenes.

Layout of a bundle directory::

    instructions.jsonl   {"id", "text"}
    annotations.jsonl    {"instruction_id", "id", "text", "ctype", "source_span"}
    scenes/<id>.json     one gold scene per instruction (registries alongside)
    labels.jsonl         optional human verdicts
    plans.jsonl          optional gold tool plans with per-node arguments

Every JSON line may carry ``schema_version``; when present it must be 1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping

from scenejudge.errors import LayoutError, SceneReferenceError, SchemaError
from scenejudge.pipeline import Constraint, ConstraintType, Instruction, ToolPlan
from scenejudge.scene import SceneEnv, load_scene_env

log = logging.getLogger(__name__)

BUNDLE_SCHEMA_VERSION = 1
HOLISTIC = "holistic"

# (instruction_id, scene_id, constraint_id or "holistic")
LabelKey = tuple[str, str, str]


def read_jsonl(path: Path) -> Iterator[tuple[int, dict[str, Any]]]:
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path.name}:{lineno}", f"invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise SchemaError(f"{path.name}:{lineno}", "each line must be a JSON object")
            version = record.get("schema_version", BUNDLE_SCHEMA_VERSION)
            if version != BUNDLE_SCHEMA_VERSION:
                raise SchemaError(f"{path.name}:{lineno}", f"unsupported schema_version {version!r}")
            yield lineno, record


def _field(record: Mapping[str, Any], key: str, where: str) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{where}.{key}", "expected a non-empty string")
    return value


def parse_constraint_record(record: Mapping[str, Any], where: str) -> Constraint:
    span = record.get("source_span")
    if span is not None and (
        not isinstance(span, list) or len(span) != 2 or not all(isinstance(v, int) for v in span)
    ):
        raise SchemaError(f"{where}.source_span", "expected [start, end]")
    ctype = record.get("ctype")
    try:
        parsed_type = ConstraintType.parse(ctype) if ctype is not None else None
    except Exception:
        raise SchemaError(f"{where}.ctype", f"unknown constraint type {ctype!r}") from None
    return Constraint(_field(record, "id", where), _field(record, "text", where), parsed_type, tuple(span) if span else None)


def load_annotations(path: Path) -> dict[str, list[Constraint]]:
    """Constraints grouped by instruction id, in file order."""
    out: dict[str, list[Constraint]] = {}
    for lineno, rec in read_jsonl(path):
        where = f"{path.name}:{lineno}"
        iid = _field(rec, "instruction_id", where)
        c = parse_constraint_record(rec, where)
        if any(other.id == c.id for other in out.get(iid, [])):
            raise SchemaError(f"{where}.id", f"duplicate constraint id {c.id!r} for instruction {iid!r}")
        out.setdefault(iid, []).append(c)
    return out


def load_labels(path: Path) -> dict[LabelKey, bool]:
    """Human verdicts; ``scene_id`` defaults to the instruction id (its gold scene)."""
    out: dict[LabelKey, bool] = {}
    for lineno, rec in read_jsonl(path):
        where = f"{path.name}:{lineno}"
        iid = _field(rec, "instruction_id", where)
        sid = rec.get("scene_id") or iid
        cid = rec.get("constraint_id") or HOLISTIC
        if not isinstance(rec.get("label"), bool):
            raise SchemaError(f"{where}.label", "expected true or false")
        out[(iid, str(sid), str(cid))] = rec["label"]
    return out


@dataclass(frozen=True)
class GoldPlan:
    plan: ToolPlan
    arguments: Mapping[str, Mapping[str, Any]]


def load_plans(path: Path) -> dict[tuple[str, str], GoldPlan]:
    """Plans keyed by ``(instruction_id, constraint_id)``; each node may carry ``arguments``."""
    out: dict[tuple[str, str], GoldPlan] = {}
    for lineno, rec in read_jsonl(path):
        where = f"{path.name}:{lineno}"
        key = (_field(rec, "instruction_id", where), _field(rec, "constraint_id", where))
        if key in out:
            raise SchemaError(where, f"duplicate plan for {key}")
        try:
            plan = ToolPlan.from_json(rec, key[1])
        except Exception as exc:
            raise SchemaError(where, str(exc)) from None
        args = {n["node_id"]: dict(n.get("arguments") or {}) for n in rec["nodes"] if isinstance(n, Mapping) and "node_id" in n}
        out[key] = GoldPlan(plan, args)
    return out


@dataclass
class BenchmarkBundle:
    root: Path
    instructions: list[Instruction]
    annotations: dict[str, list[Constraint]]
    gold_scenes: dict[str, Path]
    gold_envs: dict[str, SceneEnv] = field(repr=False, default_factory=dict)
    human_labels: dict[LabelKey, bool] | None = None
    gold_plans: dict[tuple[str, str], GoldPlan] | None = None
    stats: dict[str, float] = field(default_factory=dict)

    def instruction(self, iid: str) -> Instruction:
        for ins in self.instructions:
            if ins.id == iid:
                return ins
        raise KeyError(iid)


def load_bundle(directory: str | Path) -> BenchmarkBundle:
    root = Path(directory)
    if not root.is_dir():
        raise LayoutError(f"{root} is not a directory")
    for required in ("instructions.jsonl", "annotations.jsonl", "scenes"):
        if not (root / required).exists():
            raise LayoutError(f"bundle {root} is missing {required}")

    instructions: list[Instruction] = []
    for lineno, rec in read_jsonl(root / "instructions.jsonl"):
        where = f"instructions.jsonl:{lineno}"
        ins = Instruction(_field(rec, "id", where), _field(rec, "text", where))
        if any(i.id == ins.id for i in instructions):
            raise SchemaError(f"{where}.id", f"duplicate instruction id {ins.id!r}")
        instructions.append(ins)
    texts = {i.id: i.text for i in instructions}

    annotations = load_annotations(root / "annotations.jsonl")
    for iid, constraints in annotations.items():
        if iid not in texts:
            raise SceneReferenceError(constraints[0].id, iid, f"annotation references unknown instruction {iid!r}")
        for c in constraints:
            if c.source_span and not 0 <= c.source_span[0] <= c.source_span[1] <= len(texts[iid]):
                raise SchemaError(f"annotations[{iid}/{c.id}].source_span", "span lies outside the instruction text")

    gold_scenes: dict[str, Path] = {}
    gold_envs: dict[str, SceneEnv] = {}
    for ins in instructions:
        path = root / "scenes" / f"{ins.id}.json"
        if not path.is_file():
            raise LayoutError(f"no gold scene for instruction {ins.id!r} at {path}")
        gold_scenes[ins.id] = path
        gold_envs[ins.id] = load_scene_env(path)

    labels = load_labels(root / "labels.jsonl") if (root / "labels.jsonl").exists() else None
    plans = load_plans(root / "plans.jsonl") if (root / "plans.jsonl").exists() else None
    if plans:
        for iid, cid in plans:
            if not any(c.id == cid for c in annotations.get(iid, [])):
                raise SceneReferenceError(f"{iid}/{cid}", cid, f"gold plan references unknown constraint {iid}/{cid}")

    n = len(instructions)
    n_constraints = sum(len(annotations.get(i.id, [])) for i in instructions)
    stats = {
        "instructions": n,
        "constraints": n_constraints,
        "mean_constraints_per_instruction": n_constraints / n if n else 0.0,
        "mean_rooms_per_instruction": sum(len(e.scene.rooms) for e in gold_envs.values()) / n if n else 0.0,
    }
    log.info("loaded bundle %s: %d instructions, %d constraints", root, n, n_constraints)
    return BenchmarkBundle(root, instructions, annotations, gold_scenes, gold_envs, labels, plans, stats)


BUCKETS = ("simple", "moderate", "complex")


def complexity_bucket(n_constraints: int) -> str:
    """Up to 7 constraints is simple, 8 to 12 moderate, more is complex."""
    if n_constraints <= 7:
        return "simple"
    if n_constraints <= 12:
        return "moderate"
    return "complex"


def bucket_by_complexity(bundle: BenchmarkBundle) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {b: [] for b in BUCKETS}
    for ins in bundle.instructions:
        out[complexity_bucket(len(bundle.annotations.get(ins.id, [])))].append(ins.id)
    return out
