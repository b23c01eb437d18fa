"""Builds small benchmark bundles on disk for dataset, CLI and acceptance tests."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


def write_jsonl(path: Path, rows) -> None:
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def copy_registries(dest: Path) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    for name in ("assets.json", "materials.json"):
        shutil.copy(FIXTURES / name, dest / name)
    for sub in ("textures", "thumbs"):
        if (FIXTURES / sub).exists() and not (dest / sub).exists():
            shutil.copytree(FIXTURES / sub, dest / sub)


def copy_scene(fixture: str, dest: Path) -> Path:
    copy_registries(dest.parent)
    shutil.copy(FIXTURES / f"{fixture}.json", dest)
    return dest


def make_bundle(root: Path, entries: dict, labels=None, plans=None) -> Path:
    """``entries`` maps instruction id to (text, scene fixture name, [(text, ctype), ...])."""
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / "instructions.jsonl", [{"schema_version": 1, "id": iid, "text": e[0]} for iid, e in entries.items()])
    ann = []
    for iid, (_, _, cs) in entries.items():
        for i, (text, ctype) in enumerate(cs, 1):
            ann.append({"instruction_id": iid, "id": f"c{i}", "text": text, "ctype": ctype, "source_span": None})
    write_jsonl(root / "annotations.jsonl", ann)
    for iid, (_, fixture, _) in entries.items():
        copy_scene(fixture, root / "scenes" / f"{iid}.json")
    if labels is not None:
        write_jsonl(root / "labels.jsonl", labels)
    if plans is not None:
        write_jsonl(root / "plans.jsonl", plans)
    return root


CTYPES = ("floor_layout", "material_selection", "object_selection", "object_placement")


def counted_entries(counts, fixtures=("one_room", "two_room", "three_room")) -> dict:
    """One instruction per count, with that many constraints cycling through the types."""
    out = {}
    for n, k in enumerate(counts):
        cs = [(f"constraint {j + 1} of instruction {n}", CTYPES[j % 4]) for j in range(k)]
        out[f"ins{n}"] = (f"instruction number {n}", fixtures[n % len(fixtures)], cs)
    return out


def evaluate_script() -> dict:
    """Mock responses for a two-constraint run on the two-room fixture."""
    return {
        "responses": {
            "constraint_identification:*": {
                "constraints": [
                    {"text": "The bedroom contains a bed.", "source_span": [0, 10]},
                    {"text": "The lamp is next to the bed in the bedroom."},
                ]
            },
            "constraint_classification:*": [{"constraint_type": "object_selection"}, {"constraint_type": "Object Placement"}],
            "planning:*": [
                {
                    "rationale": "find the bed",
                    "nodes": [
                        {"node_id": "n1", "tool": "get_object_list", "depends_on": []},
                        {"node_id": "n2", "tool": "get_object_info", "depends_on": ["n1"]},
                    ],
                },
                {
                    "rationale": "look at lamp and bed together",
                    "nodes": [
                        {"node_id": "n1", "tool": "get_object_list", "depends_on": []},
                        {"node_id": "n2", "tool": "get_spatial_relation", "depends_on": ["n1"]},
                        {"node_id": "n3", "tool": "get_topdown_scene", "depends_on": []},
                    ],
                },
            ],
            "argument_selector_1:*": {"arguments": {"room_ids": ["bedroom|1"]}},
            "argument_selector_2:*": {"arguments": {"ids": ["bed|0"]}},
            "argument_selector_5:*": {"arguments": {"id_tuples": [["lamp|2", "bed|0"]]}},
            "validation_OS:*": {"valid": True, "explanation": "bed|0 is present in bedroom|1."},
            "validation_OP:*": {"valid": False, "explanation": "lamp|2 stands about 1.7 m from bed|0."},
        }
    }


def verdict_script(valid: bool) -> dict:
    """Every constraint gets a one-node plan and the same verdict."""
    plan = {"rationale": "list", "nodes": [{"node_id": "n1", "tool": "get_room_list", "depends_on": []}]}
    out = {"planning:*": plan}
    for short in ("FL", "MS", "OS", "OP"):
        out[f"validation_{short}:*"] = {"valid": valid, "explanation": "checked the room list"}
    return {"responses": out}
