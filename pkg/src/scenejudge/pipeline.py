"""Instruction-to-verdict orchestration.

Four steps per instruction: extract and type constraints, plan a tool DAG
per constraint, run it (choosing arguments node by node), then ask for a
verdict with the gathered evidence. Constraints run one after another so
each one sees the explanations produced for earlier ones.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, Sequence

import numpy as np

from scenejudge import render
from scenejudge.errors import (
    ArgumentInvalidError,
    EmptyInputError,
    ParseError,
    PlanInvalidError,
    ScenejudgeError,
    ToolArgumentError,
    UnknownToolError,
)
from scenejudge.gateway import ChatRequest, Gateway
from scenejudge.raster import ImageBuffer
from scenejudge.scene import SceneEnv
from scenejudge.tools import (
    OutputKind,
    ToolContext,
    argument_ids,
    load_allowlist,
    lookup,
    render_filenames,
    tool_menu,
    validate_arguments,
)

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


class ConstraintType(str, Enum):
    FLOOR_LAYOUT = "floor_layout"
    MATERIAL_SELECTION = "material_selection"
    OBJECT_SELECTION = "object_selection"
    OBJECT_PLACEMENT = "object_placement"

    @classmethod
    def parse(cls, value: Any) -> "ConstraintType":
        text = re.sub(r"[\s\-]+", "_", str(value).strip().lower())
        for member in cls:
            if text == member.value:
                return member
        short = {"fl": cls.FLOOR_LAYOUT, "ms": cls.MATERIAL_SELECTION, "os": cls.OBJECT_SELECTION, "op": cls.OBJECT_PLACEMENT}
        if text in short:
            return short[text]
        raise ParseError(f"unknown constraint type {value!r}")

    @property
    def title(self) -> str:
        return self.value.replace("_", " ").title()


VALIDATION_TEMPLATE = {
    ConstraintType.FLOOR_LAYOUT: "validation_FL",
    ConstraintType.MATERIAL_SELECTION: "validation_MS",
    ConstraintType.OBJECT_SELECTION: "validation_OS",
    ConstraintType.OBJECT_PLACEMENT: "validation_OP",
}


@dataclass(frozen=True)
class Instruction:
    id: str
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyInputError(f"instruction {self.id!r} has empty text")


@dataclass(frozen=True)
class Constraint:
    id: str
    text: str
    ctype: ConstraintType | None = None
    source_span: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyInputError(f"constraint {self.id!r} has empty text")

    def typed(self, ctype: ConstraintType) -> "Constraint":
        return Constraint(self.id, self.text, ctype, self.source_span)

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "ctype": self.ctype.value if self.ctype else None,
            "source_span": list(self.source_span) if self.source_span else None,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Constraint":
        span = data.get("source_span")
        ctype = data.get("ctype")
        return cls(
            str(data["id"]),
            str(data["text"]),
            ConstraintType.parse(ctype) if ctype else None,
            (int(span[0]), int(span[1])) if span else None,
        )


@dataclass(frozen=True)
class PlanNode:
    node_id: str
    tool: str
    depends_on: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {"node_id": self.node_id, "tool": self.tool, "depends_on": list(self.depends_on)}


@dataclass(frozen=True)
class ToolPlan:
    constraint_id: str
    nodes: tuple[PlanNode, ...]
    rationale: str = ""

    def node(self, node_id: str) -> PlanNode:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def topological_order(self) -> list[PlanNode]:
        """Kahn's order with plan order as the tie-break; raises on cycles."""
        pending = {n.node_id: set(n.depends_on) for n in self.nodes}
        done: list[PlanNode] = []
        seen: set[str] = set()
        while pending:
            ready = [n for n in self.nodes if n.node_id in pending and pending[n.node_id] <= seen]
            if not ready:
                raise PlanInvalidError(f"plan for {self.constraint_id!r} contains a cycle")
            for n in ready:
                done.append(n)
                seen.add(n.node_id)
                del pending[n.node_id]
        return done

    def edges(self) -> list[tuple[str, str]]:
        return [(d, n.node_id) for n in self.nodes for d in n.depends_on]

    def to_json(self) -> dict[str, Any]:
        return {
            "constraint_id": self.constraint_id,
            "rationale": self.rationale,
            "nodes": [n.to_json() for n in self.nodes],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], constraint_id: str | None = None) -> "ToolPlan":
        nodes = data.get("nodes")
        if not isinstance(nodes, list) or not nodes:
            raise PlanInvalidError("plan must have a non-empty 'nodes' list")
        parsed = []
        for i, n in enumerate(nodes):
            if not isinstance(n, Mapping) or not isinstance(n.get("tool"), str):
                raise PlanInvalidError(f"nodes[{i}] needs a string 'tool'")
            deps = n.get("depends_on") or []
            if not isinstance(deps, list) or not all(isinstance(d, str) for d in deps):
                raise PlanInvalidError(f"nodes[{i}].depends_on must be a list of node ids")
            parsed.append(PlanNode(str(n.get("node_id") or f"n{i + 1}"), n["tool"], tuple(deps)))
        cid = constraint_id if constraint_id is not None else str(data.get("constraint_id", ""))
        return cls(cid, tuple(parsed), str(data.get("rationale", "")))


def validate_plan(plan: ToolPlan, ctype: ConstraintType, allowlist: Mapping[str, frozenset[str]]) -> None:
    """Raise :class:`PlanInvalidError` unless the plan may be executed."""
    if not plan.nodes:
        raise PlanInvalidError("plan has no nodes")
    ids = [n.node_id for n in plan.nodes]
    if len(set(ids)) != len(ids):
        raise PlanInvalidError(f"duplicate node ids in {ids}")
    permitted = allowlist[ctype.value]
    for n in plan.nodes:
        try:
            lookup(n.tool)
        except UnknownToolError:
            raise PlanInvalidError(f"unknown tool {n.tool!r}") from None
        if n.tool not in permitted:
            raise PlanInvalidError(f"tool {n.tool!r} is not permitted for {ctype.value} constraints")
        for d in n.depends_on:
            if d not in ids:
                raise PlanInvalidError(f"node {n.node_id!r} depends on unknown node {d!r}")
            if d == n.node_id:
                raise PlanInvalidError(f"node {n.node_id!r} depends on itself")
    plan.topological_order()


@dataclass(frozen=True)
class ToolOutput:
    node_id: str
    tool: str
    arguments: Mapping[str, Any] | None = None
    payload: Any = None
    error: Mapping[str, Any] | None = None

    def __post_init__(self):
        if (self.payload is None) == (self.error is None):
            raise ValueError("exactly one of payload and error must be set")

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def images(self) -> list[ImageBuffer]:
        if not self.ok or lookup(self.tool).output_kind is not OutputKind.IMAGE_SET:
            return []
        return [im for key in self.payload for im in self.payload[key]]

    def summary(self) -> Any:
        """JSON-able view; image sets are reduced to labels and digests."""
        if not self.ok:
            return {"error": dict(self.error)}
        if lookup(self.tool).output_kind is OutputKind.IMAGE_SET:
            return {
                key: [{"label": im.label, "size": [im.width, im.height], "digest": im.digest()[:16]} for im in views]
                for key, views in self.payload.items()
            }
        return dict(self.payload) if isinstance(self.payload, Mapping) else self.payload


def _error_record(exc: BaseException, skipped: bool = False) -> dict[str, Any]:
    return {"type": type(exc).__name__, "message": str(exc), "skipped": skipped}


@dataclass(frozen=True)
class ConstraintJudgment:
    constraint_id: str
    valid: bool
    explanation: str
    evidence: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.explanation or not self.explanation.strip():
            raise ValueError("a judgment needs an explanation")


@dataclass
class EvaluationReport:
    instruction_id: str
    scene_id: str
    constraints: list[Constraint] = field(default_factory=list)
    judgments: list[ConstraintJudgment] = field(default_factory=list)
    plans: dict[str, dict[str, Any]] = field(default_factory=dict)
    transcripts_ref: str | None = None
    method: str = "agent"

    @property
    def holistic_valid(self) -> bool:
        return len(self.judgments) == len(self.constraints) and all(j.valid for j in self.judgments)

    @property
    def complete(self) -> bool:
        return len(self.judgments) == len(self.constraints)

    def to_json(self) -> dict[str, Any]:
        verdicts = {j.constraint_id: j for j in self.judgments}
        rows = []
        for c in self.constraints:
            row = c.to_json()
            j = verdicts.get(c.id)
            row.update(
                valid=j.valid if j else None,
                explanation=j.explanation if j else None,
                evidence=list(j.evidence) if j else [],
            )
            rows.append(row)
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "instruction_id": self.instruction_id,
            "scene_id": self.scene_id,
            "holistic_valid": self.holistic_valid,
            "complete": self.complete,
            "constraints": rows,
            "plans": self.plans,
            "transcripts_ref": self.transcripts_ref,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "EvaluationReport":
        constraints, judgments = [], []
        for row in data["constraints"]:
            constraints.append(Constraint.from_json(row))
            if row.get("valid") is not None:
                judgments.append(
                    ConstraintJudgment(row["id"], bool(row["valid"]), row["explanation"], tuple(row.get("evidence", [])))
                )
        return cls(
            data["instruction_id"],
            data.get("scene_id", ""),
            constraints,
            judgments,
            dict(data.get("plans", {})),
            data.get("transcripts_ref"),
            data.get("method", "agent"),
        )


@dataclass
class RunContext:
    """Everything a step needs besides its direct inputs."""

    gateway: Gateway
    env: SceneEnv
    allowlist: Mapping[str, frozenset[str]] = field(default_factory=load_allowlist)
    resolution: int = render.DEFAULT_RESOLUTION
    parallel: int = 1
    dump_images: Path | None = None
    temperature: float = 0.0


# -- prompt helpers --------------------------------------------------------------------


def format_explanations(judgments: Sequence[ConstraintJudgment]) -> str:
    if not judgments:
        return "(none)"
    return "\n".join(f"- [{j.constraint_id}] {'satisfied' if j.valid else 'violated'}: {j.explanation}" for j in judgments)


def _dump(value: Any) -> str:
    return json.dumps(value, sort_keys=True, ensure_ascii=False)


def format_outputs(outputs: Mapping[str, ToolOutput]) -> str:
    if not outputs:
        return "(none)"
    lines = []
    for nid, out in outputs.items():
        args = _dump(dict(out.arguments)) if out.arguments is not None else "{}"
        lines.append(f"[{nid}] {out.tool}({args}) -> {_dump(out.summary())}")
    return "\n".join(lines)


# -- step 1 ------------------------------------------------------------------------------


def identify_constraints(gateway: Gateway, instruction: Instruction, temperature: float = 0.0) -> list[Constraint]:
    """Split an instruction into self-contained, untyped constraints."""
    text = instruction.text

    def check(payload: dict[str, Any]) -> list[Constraint]:
        items = payload["constraints"]
        if not isinstance(items, list) or not items:
            raise ParseError("'constraints' must be a non-empty list")
        out = []
        for i, item in enumerate(items, 1):
            if isinstance(item, str):
                item = {"text": item}
            if not isinstance(item, Mapping) or not str(item.get("text", "")).strip():
                raise ParseError(f"constraint {i} has no text")
            span = item.get("source_span")
            if span is not None:
                if (
                    not isinstance(span, list)
                    or len(span) != 2
                    or not all(isinstance(v, int) for v in span)
                    or not 0 <= span[0] <= span[1] <= len(text)
                ):
                    raise ParseError(f"constraint {i} has a bad source_span {span!r}")
                span = (span[0], span[1])
            out.append(Constraint(f"c{i}", str(item["text"]).strip(), None, span))
        return out

    return gateway.chat(ChatRequest("constraint_identification", {"instruction": text}, (), temperature), check)


def classify_constraint(gateway: Gateway, text: str, temperature: float = 0.0) -> ConstraintType:
    if not text or not text.strip():
        raise EmptyInputError("cannot classify an empty constraint")
    return gateway.chat(
        ChatRequest("constraint_classification", {"constraint": text}, (), temperature),
        lambda p: ConstraintType.parse(p["constraint_type"]),
    )


# -- step 2 ------------------------------------------------------------------------------


def plan_tools(
    ctx: RunContext,
    instruction: Instruction,
    constraint: Constraint,
    prior_explanations: Sequence[ConstraintJudgment] = (),
) -> ToolPlan:
    if constraint.ctype is None:
        raise ValueError(f"constraint {constraint.id!r} must be typed before planning")
    ctype = constraint.ctype

    def check(payload: dict[str, Any]) -> ToolPlan:
        plan = ToolPlan.from_json(payload, constraint.id)
        validate_plan(plan, ctype, ctx.allowlist)
        return plan

    variables = {
        "instruction": instruction.text,
        "constraint": constraint.text,
        "constraint_type": ctype.title,
        "tools": tool_menu(sorted(ctx.allowlist[ctype.value])),
        "prior_explanations": format_explanations(prior_explanations),
    }
    return ctx.gateway.chat(ChatRequest("planning", variables, (), ctx.temperature), check)


# -- step 3 ------------------------------------------------------------------------------


def _mentioned_strings(value: Any, into: set[str]) -> None:
    if isinstance(value, str):
        into.add(value)
        into.update(value.split(","))
    elif isinstance(value, Mapping):
        for k, v in value.items():
            _mentioned_strings(k, into)
            _mentioned_strings(v, into)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _mentioned_strings(v, into)


def grounding_pool(outputs: Mapping[str, ToolOutput]) -> set[str]:
    """Every string that appears (as key or value) in successful outputs."""
    pool: set[str] = set()
    for out in outputs.values():
        if out.ok:
            _mentioned_strings(out.summary(), pool)
    return pool


def select_arguments(
    ctx: RunContext,
    instruction: Instruction,
    constraint: Constraint,
    plan: ToolPlan,
    node: PlanNode,
    prior_outputs: Mapping[str, ToolOutput],
    prior_explanations: Sequence[ConstraintJudgment] = (),
) -> dict[str, Any]:
    """Concrete arguments for one node, grounded in its dependencies' outputs.

    When the node has successful dependencies, every id argument must occur in
    their outputs; otherwise ids only need to exist in the scene.
    """
    spec = lookup(node.tool)
    if not spec.argument_schema:
        return {}
    missing = [d for d in node.depends_on if d not in prior_outputs]
    if missing:
        raise ValueError(f"node {node.node_id!r} is missing dependency outputs {missing}")
    deps = {d: prior_outputs[d] for d in node.depends_on}
    pool = grounding_pool(deps)

    def check(payload: dict[str, Any]) -> dict[str, Any]:
        try:
            args = validate_arguments(spec, payload["arguments"], ctx.env)
        except ToolArgumentError as exc:
            raise ArgumentInvalidError(str(exc)) from None
        if pool:
            stray = [v for v, _ in argument_ids(spec, args) if v not in pool]
            if stray:
                raise ArgumentInvalidError(f"{node.tool}: ids {stray} do not appear in prior outputs")
        return args

    variables = {
        "instruction": instruction.text,
        "constraint": constraint.text,
        "plan": _dump(plan.to_json()["nodes"]),
        "rationale": plan.rationale or "(none)",
        "tool": spec.name,
        "tool_description": spec.description,
        "argument_schema": _dump([a.to_json() for a in spec.argument_schema]),
        "prior_outputs": format_outputs(deps),
        "prior_explanations": format_explanations(prior_explanations),
    }
    request = ChatRequest(f"argument_selector_{spec.selector_family}", variables, (), ctx.temperature)
    return ctx.gateway.chat(request, check)


def _run_node(
    ctx: RunContext,
    instruction: Instruction,
    constraint: Constraint,
    plan: ToolPlan,
    node: PlanNode,
    done: Mapping[str, ToolOutput],
    prior_explanations: Sequence[ConstraintJudgment],
    arguments: Mapping[str, Mapping[str, Any]] | None,
) -> ToolOutput:
    failed = [d for d in node.depends_on if not done[d].ok]
    if failed:
        err = {"type": "DependencyFailed", "message": f"dependencies {failed} failed", "skipped": True}
        return ToolOutput(node.node_id, node.tool, None, None, err)
    args: Mapping[str, Any] | None = None
    try:
        if arguments is not None:
            args = validate_arguments(lookup(node.tool), arguments.get(node.node_id, {}), ctx.env)
        else:
            args = select_arguments(ctx, instruction, constraint, plan, node, done, prior_explanations)
        tctx = ToolContext(ctx.env, ctx.gateway, ctx.resolution, {d: done[d] for d in node.depends_on})
        payload = lookup(node.tool).run(tctx, dict(args))
    except ScenejudgeError as exc:
        log.info("node %s (%s) failed: %s", node.node_id, node.tool, exc)
        return ToolOutput(node.node_id, node.tool, args, None, _error_record(exc))
    if isinstance(payload, dict):
        payload = MappingProxyType(payload)
    out = ToolOutput(node.node_id, node.tool, MappingProxyType(dict(args)), payload, None)
    images = out.images
    if ctx.dump_images is not None and images:
        ctx.dump_images.mkdir(parents=True, exist_ok=True)
        for name, im in zip(render_filenames(node.tool, dict(args), len(images)), images):
            im.save_png(ctx.dump_images / name)
    return out


def execute_plan(
    ctx: RunContext,
    instruction: Instruction,
    constraint: Constraint,
    plan: ToolPlan,
    prior_explanations: Sequence[ConstraintJudgment] = (),
    arguments: Mapping[str, Mapping[str, Any]] | None = None,
) -> Mapping[str, ToolOutput]:
    """Run every node once its dependencies are recorded.

    ``arguments`` (node id to argument mapping) bypasses argument selection,
    which is how annotated gold plans are replayed. With ``ctx.parallel > 1``
    ready nodes run on a thread pool; the returned mapping is in plan order
    either way.
    """
    if constraint.ctype is not None:
        validate_plan(plan, constraint.ctype, ctx.allowlist)
    order = plan.topological_order()
    done: dict[str, ToolOutput] = {}
    if ctx.parallel <= 1:
        for node in order:
            done[node.node_id] = _run_node(
                ctx, instruction, constraint, plan, node, done, prior_explanations, arguments
            )
    else:
        with ThreadPoolExecutor(max_workers=ctx.parallel) as pool:
            running: dict[Future, PlanNode] = {}
            waiting = list(order)
            while waiting or running:
                for node in [n for n in waiting if all(d in done for d in n.depends_on)]:
                    snapshot = {d: done[d] for d in node.depends_on}
                    fut = pool.submit(
                        _run_node, ctx, instruction, constraint, plan, node, snapshot, prior_explanations, arguments
                    )
                    running[fut] = node
                    waiting.remove(node)
                finished, _ = wait(list(running), return_when=FIRST_COMPLETED)
                for fut in finished:
                    node = running.pop(fut)
                    done[node.node_id] = fut.result()
    return MappingProxyType({n.node_id: done[n.node_id] for n in plan.nodes})


# -- step 4 ------------------------------------------------------------------------------


def _verdict(payload: dict[str, Any]) -> tuple[bool, str]:
    valid = payload["valid"]
    if isinstance(valid, str) and valid.strip().lower() in ("true", "false"):
        valid = valid.strip().lower() == "true"
    if not isinstance(valid, bool):
        raise ParseError("'valid' must be true or false")
    explanation = str(payload["explanation"]).strip()
    if not explanation:
        raise ParseError("'explanation' is empty")
    return valid, explanation


def validate_constraint(
    ctx: RunContext,
    instruction: Instruction,
    constraint: Constraint,
    outputs: Mapping[str, ToolOutput],
    prior_explanations: Sequence[ConstraintJudgment] = (),
) -> ConstraintJudgment:
    evidence = tuple(nid for nid, out in outputs.items() if out.ok)
    if not evidence:
        failures = "; ".join(f"{nid} ({out.tool}): {out.error['message']}" for nid, out in outputs.items())
        return ConstraintJudgment(
            constraint.id, False, f"No evidence could be gathered, so the constraint is not confirmed. {failures}".strip()
        )
    images: list[ImageBuffer] = []
    for nid in evidence:
        images += [im.with_label(f"{nid}:{im.label}") for im in outputs[nid].images]
    variables = {
        "instruction": instruction.text,
        "constraint": constraint.text,
        "tool_outputs": format_outputs(outputs),
        "prior_explanations": format_explanations(prior_explanations),
    }
    template = VALIDATION_TEMPLATE[constraint.ctype]
    valid, explanation = ctx.gateway.chat(ChatRequest(template, variables, tuple(images), ctx.temperature), _verdict)
    return ConstraintJudgment(constraint.id, valid, explanation, evidence)


# -- whole instruction -------------------------------------------------------------------


def _typed_constraints(ctx: RunContext, instruction: Instruction, constraints: Sequence[Constraint] | None):
    if constraints is None:
        constraints = identify_constraints(ctx.gateway, instruction, ctx.temperature)
    return [
        c if c.ctype is not None else c.typed(classify_constraint(ctx.gateway, c.text, ctx.temperature))
        for c in constraints
    ]


def _plan_record(plan: ToolPlan, outputs: Mapping[str, ToolOutput]) -> dict[str, Any]:
    nodes = []
    for n in plan.nodes:
        out = outputs.get(n.node_id)
        row = n.to_json()
        row["arguments"] = dict(out.arguments) if out is not None and out.arguments is not None else None
        row["status"] = "missing" if out is None else ("ok" if out.ok else ("skipped" if out.error["skipped"] else "error"))
        row["error"] = dict(out.error) if out is not None and out.error else None
        nodes.append(row)
    return {"rationale": plan.rationale, "nodes": nodes}


def evaluate_scene(
    ctx: RunContext,
    instruction: Instruction,
    scene_id: str,
    constraints: Sequence[Constraint] | None = None,
) -> EvaluationReport:
    """Judge one scene against one instruction.

    Pre-annotated ``constraints`` skip extraction (untyped ones are still
    classified). On failure the exception carries ``partial_report``.
    """
    report = EvaluationReport(
        instruction.id,
        scene_id,
        transcripts_ref=str(ctx.gateway.transcript_path) if ctx.gateway.transcript_path else None,
    )
    try:
        report.constraints = _typed_constraints(ctx, instruction, constraints)
        for c in report.constraints:
            prior = list(report.judgments)
            plan = plan_tools(ctx, instruction, c, prior)
            outputs = execute_plan(ctx, instruction, c, plan, prior)
            report.plans[c.id] = _plan_record(plan, outputs)
            report.judgments.append(validate_constraint(ctx, instruction, c, outputs, prior))
            log.info("%s/%s: %s", instruction.id, c.id, report.judgments[-1].valid)
    except ScenejudgeError as exc:
        exc.partial_report = report  # type: ignore[attr-defined]
        raise
    return report


# -- single-shot baseline ------------------------------------------------------------------


BASELINE_TEMPERATURE = 0.7


def corner_views(env: SceneEnv, resolution: int) -> list[ImageBuffer]:
    """The overhead render turned to four orientations, one per corner."""
    base = render.get_topdown_scene(env, resolution)
    arr = base.to_array()
    return [
        ImageBuffer.from_array(np.ascontiguousarray(np.rot90(arr, k)), f"view_{k * 90}") for k in range(4)
    ]


def majority(votes: Sequence[bool]) -> bool:
    """Strict majority of true votes; an even split is false."""
    return sum(votes) * 2 > len(votes)


def run_vlm_judge_baseline(
    ctx: RunContext,
    instruction: Instruction,
    scene_id: str,
    constraints: Sequence[Constraint] | None = None,
    samples: int = 3,
) -> EvaluationReport:
    """Image-only judge: four views, ``samples`` votes per constraint."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    views = tuple(corner_views(ctx.env, ctx.resolution))
    temperature = 0.0 if samples == 1 else BASELINE_TEMPERATURE
    report = EvaluationReport(
        instruction.id,
        scene_id,
        transcripts_ref=str(ctx.gateway.transcript_path) if ctx.gateway.transcript_path else None,
        method="vlm_judge_baseline",
    )
    try:
        report.constraints = _typed_constraints(ctx, instruction, constraints)
        for c in report.constraints:
            votes, notes = [], []
            for s in range(samples):
                variables = {"instruction": instruction.text, "constraint": c.text, "sample": str(s + 1)}
                valid, why = ctx.gateway.chat(ChatRequest("vlm_judge_baseline", variables, views, temperature), _verdict)
                votes.append(valid)
                notes.append(why)
            verdict = majority(votes)
            explanation = f"{sum(votes)} of {samples} samples judged it satisfied. " + notes[votes.index(verdict)]
            report.judgments.append(ConstraintJudgment(c.id, verdict, explanation))
    except ScenejudgeError as exc:
        exc.partial_report = report  # type: ignore[attr-defined]
        raise
    return report
