from __future__ import annotations

import numpy as np
import pytest

from oracles import ged_oracle, random_dag
from scenejudge.errors import SizeLimitError
from scenejudge.ged import LabeledGraph, graph_edit_distance, plan_graph
from scenejudge.metrics import graph_edit_distance as plan_ged
from scenejudge.pipeline import PlanNode, ToolPlan


def g(labels, edges=()):
    return LabeledGraph.of(list(labels), edges)


def test_examples():
    a = g("ABC", [(0, 1), (1, 2)])
    assert graph_edit_distance(a, a) == 0
    assert graph_edit_distance(a, g("ABCA", [(0, 1), (1, 2)])) == 1
    assert graph_edit_distance(a, g("ABC", [(1, 0), (1, 2)])) == 2
    assert graph_edit_distance(a, g("ABD", [(0, 1), (1, 2)])) == 1
    assert graph_edit_distance(g(""), a) == 5


def test_size_limit():
    big = g("A" * 13)
    with pytest.raises(SizeLimitError):
        graph_edit_distance(big, g("A"))
    assert graph_edit_distance(g("A" * 12), g("A" * 12)) == 0


def test_plan_graph_and_plan_distance():
    p1 = ToolPlan("c", (PlanNode("x", "get_object_list"), PlanNode("y", "get_object_info", ("x",))))
    p2 = ToolPlan("c", (PlanNode("a", "get_object_info", ("b",)), PlanNode("b", "get_object_list")))
    assert plan_graph(p1.nodes) == g(["get_object_list", "get_object_info"], [(0, 1)])
    assert plan_ged(p1, p2) == 0


def test_matches_oracle_sampled():
    rng = np.random.default_rng(11)
    for _ in range(80):
        l1, e1 = random_dag(rng, 4)
        l2, e2 = random_dag(rng, 4)
        assert graph_edit_distance(g(l1, e1), g(l2, e2)) == ged_oracle(l1, e1, l2, e2)


def test_metric_axioms_sampled():
    rng = np.random.default_rng(5)
    graphs = [random_dag(rng, 4) for _ in range(8)]
    d = [[graph_edit_distance(g(*a), g(*b)) for b in graphs] for a in graphs]
    for i in range(len(graphs)):
        assert d[i][i] == 0
        for j in range(len(graphs)):
            assert d[i][j] == d[j][i]
            for k in range(len(graphs)):
                assert d[i][k] <= d[i][j] + d[j][k]


def test_twelve_nodes_finishes():
    chain = g("ABCABCABCABC", [(i, i + 1) for i in range(11)])
    other = g("ABCABCABCABC", [(i, i + 2) for i in range(10)])
    assert graph_edit_distance(chain, other) <= 21
