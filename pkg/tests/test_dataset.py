from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bundles import counted_entries, make_bundle, write_jsonl
from scenejudge.dataset import BUCKETS, bucket_by_complexity, complexity_bucket, load_bundle
from scenejudge.errors import EmptyInputError, LayoutError, SceneReferenceError, SchemaError
from scenejudge.pipeline import ConstraintType

ENTRIES = {
    "a": ("A bedroom with a red floor. A white bed in it.", "one_room", [("bedroom has red floor", "MS"), ("bed is white", "OS")]),
    "b": ("A living room next to a bedroom.", "two_room", [("two rooms", "FL"), ("door between", "FL"), ("lamp by bed", "OP")]),
    "c": ("Three rooms.", "three_room", [("three rooms", "floor_layout")]),
}


def test_stats_match_hand_count(tmp_path):
    b = load_bundle(make_bundle(tmp_path / "b", ENTRIES))
    assert b.stats == {
        "instructions": 3,
        "constraints": 6,
        "mean_constraints_per_instruction": 2.0,
        "mean_rooms_per_instruction": (1 + 2 + 3) / 3,
    }
    assert [c.ctype for c in b.annotations["b"]] == [ConstraintType.FLOOR_LAYOUT] * 2 + [ConstraintType.OBJECT_PLACEMENT]
    assert b.instruction("c").text == "Three rooms."
    assert set(b.gold_envs) == {"a", "b", "c"}
    assert b.human_labels is None and b.gold_plans is None


def test_labels_and_plans(tmp_path):
    labels = [
        {"instruction_id": "a", "label": True},
        {"instruction_id": "a", "constraint_id": "c1", "label": False},
        {"instruction_id": "a", "scene_id": "other", "label": False},
    ]
    plans = [
        {
            "instruction_id": "b",
            "constraint_id": "c3",
            "rationale": "look",
            "nodes": [
                {"node_id": "n1", "tool": "get_object_list", "depends_on": []},
                {"node_id": "n2", "tool": "get_spatial_relation", "depends_on": ["n1"], "arguments": {"id_tuples": [["lamp|2", "bed|0"]]}},
            ],
        }
    ]
    b = load_bundle(make_bundle(tmp_path / "b", ENTRIES, labels, plans))
    assert b.human_labels == {("a", "a", "holistic"): True, ("a", "a", "c1"): False, ("a", "other", "holistic"): False}
    gp = b.gold_plans[("b", "c3")]
    assert [n.tool for n in gp.plan.nodes] == ["get_object_list", "get_spatial_relation"]
    assert gp.arguments == {"n1": {}, "n2": {"id_tuples": [["lamp|2", "bed|0"]]}}


def test_missing_files(tmp_path):
    with pytest.raises(LayoutError):
        load_bundle(tmp_path / "nope")
    root = make_bundle(tmp_path / "b", ENTRIES)
    (root / "scenes" / "b.json").unlink()
    with pytest.raises(LayoutError):
        load_bundle(root)
    (root / "annotations.jsonl").unlink()
    with pytest.raises(LayoutError):
        load_bundle(root)


def test_unknown_instruction_reference(tmp_path):
    root = make_bundle(tmp_path / "b", ENTRIES)
    with (root / "annotations.jsonl").open("a") as fh:
        fh.write(json.dumps({"instruction_id": "zzz", "id": "c1", "text": "t", "ctype": "FL"}) + "\n")
    with pytest.raises(SceneReferenceError):
        load_bundle(root)


def test_plan_for_unknown_constraint(tmp_path):
    plans = [{"instruction_id": "a", "constraint_id": "c9", "nodes": [{"node_id": "n1", "tool": "get_room_list"}]}]
    with pytest.raises(SceneReferenceError):
        load_bundle(make_bundle(tmp_path / "b", ENTRIES, plans=plans))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda rows: rows[0].update(source_span=[0, 999]),
        lambda rows: rows[1].update(id="c1"),
        lambda rows: rows[0].update(ctype="lighting"),
        lambda rows: rows[0].update(schema_version=2),
        lambda rows: rows[0].pop("text"),
    ],
)
def test_bad_annotations(tmp_path, mutate):
    root = make_bundle(tmp_path / "b", ENTRIES)
    rows = [json.loads(line) for line in (root / "annotations.jsonl").read_text().splitlines()]
    mutate(rows)
    write_jsonl(root / "annotations.jsonl", rows)
    with pytest.raises(SchemaError):
        load_bundle(root)


def test_empty_instruction_text(tmp_path):
    root = make_bundle(tmp_path / "b", ENTRIES)
    write_jsonl(root / "instructions.jsonl", [{"id": "a", "text": "  "}])
    with pytest.raises(EmptyInputError):
        load_bundle(root)


def test_bucket_boundaries():
    assert [complexity_bucket(n) for n in (0, 1, 2, 7, 8, 12, 13, 40)] == [
        "simple", "simple", "simple", "simple", "moderate", "moderate", "complex", "complex",
    ]


def test_bucket_bundle(tmp_path):
    b = load_bundle(make_bundle(tmp_path / "b", counted_entries([7, 12, 13, 2])))
    assert bucket_by_complexity(b) == {"simple": ["ins0", "ins3"], "moderate": ["ins1"], "complex": ["ins2"]}


@given(st.lists(st.integers(0, 30), min_size=1, max_size=50))
def test_buckets_partition(counts):
    names = [complexity_bucket(n) for n in counts]
    assert all(n in BUCKETS for n in names)
    assert sum(names.count(b) for b in BUCKETS) == len(counts)
