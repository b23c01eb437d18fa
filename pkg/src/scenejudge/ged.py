"""Exact graph edit distance between small labeled directed graphs.

Unit costs: inserting, deleting or relabeling a node costs 1, and so does
inserting or deleting an edge. A node mapping fixes the cost; we search
mappings depth-first and prune with an admissible bound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from scenejudge.errors import SizeLimitError

EXACT_NODE_LIMIT = 12


@dataclass(frozen=True)
class LabeledGraph:
    labels: tuple[str, ...]
    edges: frozenset[tuple[int, int]]

    @classmethod
    def of(cls, labels: Sequence[str], edges) -> "LabeledGraph":
        return cls(tuple(labels), frozenset((int(a), int(b)) for a, b in edges))

    def __len__(self) -> int:
        return len(self.labels)


def _label_overlap(a: Counter, b: Counter) -> int:
    return sum(min(n, b[k]) for k, n in a.items())


def graph_edit_distance(g1: LabeledGraph, g2: LabeledGraph, limit: int = EXACT_NODE_LIMIT) -> int:
    n1, n2 = len(g1), len(g2)
    if n1 > limit or n2 > limit:
        raise SizeLimitError(f"exact edit distance is limited to {limit} nodes (got {n1} and {n2})")
    e1, e2 = g1.edges, g2.edges

    # visit high-degree nodes first so edge costs show up early
    deg = Counter()
    for a, b in e1:
        deg[a] += 1
        deg[b] += 1
    order = sorted(range(n1), key=lambda v: (-deg[v], v))
    pos = {v: i for i, v in enumerate(order)}
    # E1 edges become decidable once the later endpoint (in visit order) is assigned
    closing: list[list[tuple[int, int]]] = [[] for _ in range(n1)]
    for a, b in e1:
        closing[max(pos[a], pos[b])].append((a, b))
    out2 = [set() for _ in range(n2)]
    for a, b in e2:
        out2[a].add(b)

    best = n1 + n2 + len(e1) + len(e2)
    mapping: dict[int, int | None] = {}
    used = [False] * n2
    rest1 = Counter(g1.labels)
    rest2 = Counter(g2.labels)

    def bound(depth: int, open1: int, open2: int) -> int:
        r1 = n1 - depth
        r2 = n2 - sum(used)
        return max(r1, r2) - _label_overlap(rest1, rest2) + abs(open1 - open2)

    def search(depth: int, cost: int, open1: int, open2: int) -> None:
        # open1 / open2: edges of g1 / g2 whose fate is not yet decided
        nonlocal best
        if cost + bound(depth, open1, open2) >= best:
            return
        if depth == n1:
            best = min(best, cost + (n2 - sum(used)) + open2)
            return
        v = order[depth]
        rest1[g1.labels[v]] -= 1
        for w in list(range(n2)) + [None]:
            if w is not None and used[w]:
                continue
            step = 1 if w is None or g1.labels[v] != g2.labels[w] else 0
            mapping[v] = w
            if w is not None:
                used[w] = True
                rest2[g2.labels[w]] -= 1
            kept = 0
            for a, b in closing[depth]:
                fa, fb = mapping[a], mapping[b]
                if fa is not None and fb is not None and fb in out2[fa]:
                    kept += 1
            closed1 = len(closing[depth])
            # g2 edges whose both endpoints are now images of assigned nodes
            closed2 = 0
            if w is not None:
                for u, fu in mapping.items():
                    if fu is None:
                        continue
                    if fu == w:
                        closed2 += 1 if w in out2[w] else 0
                        continue
                    closed2 += (w in out2[fu]) + (fu in out2[w])
            step += (closed1 - kept) + (closed2 - kept)
            search(depth + 1, cost + step, open1 - closed1, open2 - closed2)
            if w is not None:
                used[w] = False
                rest2[g2.labels[w]] += 1
            del mapping[v]
        rest1[g1.labels[v]] += 1

    search(0, 0, len(e1), len(e2))
    return best


def plan_graph(nodes) -> LabeledGraph:
    """Graph of a tool plan: tool names as labels, dependency edges."""
    index = {n.node_id: i for i, n in enumerate(nodes)}
    return LabeledGraph.of([n.tool for n in nodes], [(index[d], index[n.node_id]) for n in nodes for d in n.depends_on])
