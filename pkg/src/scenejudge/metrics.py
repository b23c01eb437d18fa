"""Agreement, success-rate and plan-component metrics."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from scenejudge.errors import DegenerateMarginalsError, EmptyInputError, NoMatchedToolsError
from scenejudge.ged import LabeledGraph, plan_graph
from scenejudge.ged import graph_edit_distance as _graph_edit_distance
from scenejudge.pipeline import ConstraintType, EvaluationReport, ToolPlan


@dataclass(frozen=True)
class LabeledPair:
    predicted: bool
    gold: bool
    unit: str = "instruction"  # or "constraint"
    ctype: ConstraintType | None = None

    def __post_init__(self):
        if self.unit not in ("instruction", "constraint"):
            raise ValueError(f"unit must be instruction or constraint, not {self.unit!r}")
        if self.unit == "constraint" and self.ctype is None:
            raise ValueError("constraint-level pairs need a constraint type")


@dataclass(frozen=True)
class PlanPair:
    predicted: ToolPlan
    gold: ToolPlan
    predicted_args: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    gold_args: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)


def _confusion(pairs: Sequence[LabeledPair]) -> tuple[int, int, int, int]:
    tp = fp = fn = tn = 0
    for p in pairs:
        if p.predicted and p.gold:
            tp += 1
        elif p.predicted:
            fp += 1
        elif p.gold:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


def _prf(tp: int, fp: int, fn: int) -> dict[str, float]:
    p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
    return {"precision": p, "recall": r, "f1": f1_score(p, r)}


def binary_prf(pairs: Sequence[LabeledPair]) -> dict[str, dict[str, float]]:
    """Per-class precision/recall/F1 for both verdicts and their macro average.

    An undefined precision or recall (empty denominator) counts as 0.
    """
    if not pairs:
        raise EmptyInputError("binary_prf needs at least one pair")
    tp, fp, fn, tn = _confusion(pairs)
    pos = _prf(tp, fp, fn)
    neg = _prf(tn, fn, fp)
    macro = {k: (pos[k] + neg[k]) / 2 for k in ("precision", "recall", "f1")}
    return {"valid": pos, "invalid": neg, "macro": macro}


def cohen_kappa(pairs: Sequence[LabeledPair]) -> float:
    if not pairs:
        raise EmptyInputError("cohen_kappa needs at least one pair")
    tp, fp, fn, tn = _confusion(pairs)
    n = len(pairs)
    p_o = (tp + tn) / n
    p_e = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n)
    if p_e == 1:
        raise DegenerateMarginalsError("chance agreement is 1; kappa is undefined")
    return (p_o - p_e) / (1 - p_e)


def agreement_columns(pairs: Sequence[LabeledPair]) -> dict[str, float | None]:
    """One agreement block, keyed by display column name."""
    macro = binary_prf(pairs)["macro"]
    try:
        kappa: float | None = cohen_kappa(pairs)
    except DegenerateMarginalsError:
        kappa = None
    return {"F1": macro["f1"], "Recall": macro["recall"], "Precision": macro["precision"], "Cohen's κ": kappa}


def success_rates(reports: Sequence[EvaluationReport]) -> dict[str, Any]:
    """Holistic SR over instructions, partial SR per constraint type and overall.

    A type with no constraints gets ``None``.
    """
    if not reports:
        raise EmptyInputError("success_rates needs at least one report")
    holistic = sum(r.holistic_valid for r in reports) / len(reports)
    per_type: dict[ConstraintType, list[bool]] = defaultdict(list)
    everything: list[bool] = []
    for r in reports:
        verdicts = {j.constraint_id: j.valid for j in r.judgments}
        for c in r.constraints:
            ok = verdicts.get(c.id, False)
            everything.append(ok)
            if c.ctype is not None:
                per_type[c.ctype].append(ok)
    partial = {t.value: (sum(per_type[t]) / len(per_type[t]) if per_type[t] else None) for t in ConstraintType}
    return {
        "holistic_sr": holistic,
        "partial_sr": partial,
        "partial_sr_avg": sum(everything) / len(everything) if everything else None,
    }


def _set_f1(pred: set, gold: set) -> float:
    if not pred and not gold:
        return 1.0
    hit = len(pred & gold)
    return f1_score(_ratio(hit, len(pred)), _ratio(hit, len(gold)))


def tool_f1(pairs: Sequence[PlanPair]) -> float:
    """Mean over plans of the F1 between predicted and gold tool-name sets."""
    if not pairs:
        raise EmptyInputError("tool_f1 needs at least one plan pair")
    return sum(_set_f1({n.tool for n in p.predicted.nodes}, {n.tool for n in p.gold.nodes}) for p in pairs) / len(pairs)


def _norm(value: Any) -> str:
    return str(value).strip().lower()


def argument_items(args: Mapping[str, Any]) -> set[tuple[str, Any]]:
    """Arguments as comparable items; each list element is its own item."""
    items: set[tuple[str, Any]] = set()
    for key, value in args.items():
        if isinstance(value, (list, tuple)):
            for v in value:
                if isinstance(v, (list, tuple)):
                    items.add((key, tuple(sorted(_norm(x) for x in v))))
                else:
                    items.add((key, _norm(v)))
        elif value is not None:
            items.add((key, _norm(value)))
    return items


def matched_nodes(pair: PlanPair) -> list[tuple[str, str]]:
    """(predicted node id, gold node id) for tools present in both plans.

    Repeated tools pair up by order of appearance.
    """
    gold_by_tool: dict[str, list[str]] = defaultdict(list)
    for n in pair.gold.nodes:
        gold_by_tool[n.tool].append(n.node_id)
    taken: Counter = Counter()
    out = []
    for n in pair.predicted.nodes:
        queue = gold_by_tool.get(n.tool, [])
        if taken[n.tool] < len(queue):
            out.append((n.node_id, queue[taken[n.tool]]))
            taken[n.tool] += 1
    return out


def argument_f1(pairs: Sequence[PlanPair]) -> float:
    """Macro F1 over matched tool nodes of their argument items."""
    if not pairs:
        raise EmptyInputError("argument_f1 needs at least one plan pair")
    scores = []
    for p in pairs:
        for pid, gid in matched_nodes(p):
            pred = argument_items(p.predicted_args.get(pid, {}))
            gold = argument_items(p.gold_args.get(gid, {}))
            scores.append(_set_f1(pred, gold))
    if not scores:
        raise NoMatchedToolsError("no tool appears in both a predicted and a gold plan")
    return sum(scores) / len(scores)


def graph_edit_distance(a: ToolPlan | LabeledGraph, b: ToolPlan | LabeledGraph) -> int:
    """Unit-cost edit distance between two plans (or prebuilt graphs)."""
    ga = plan_graph(a.nodes) if isinstance(a, ToolPlan) else a
    gb = plan_graph(b.nodes) if isinstance(b, ToolPlan) else b
    return _graph_edit_distance(ga, gb)


def mean_edit_distance(pairs: Iterable[PlanPair]) -> float:
    dists = [graph_edit_distance(p.predicted, p.gold) for p in pairs]
    if not dists:
        raise EmptyInputError("no plan pairs")
    return sum(dists) / len(dists)
