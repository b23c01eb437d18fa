from __future__ import annotations

import json

import pytest
from PIL import Image

from bundles import FIXTURES, copy_scene, counted_entries, evaluate_script, make_bundle, verdict_script, write_jsonl
from scenejudge.cli import main

INSTRUCTION = "A bedroom with a bed and a lamp next to the bed."


@pytest.fixture
def workspace(tmp_path):
    scene = copy_scene("two_room", tmp_path / "scene" / "two_room.json")
    script = tmp_path / "script.json"
    script.write_text(json.dumps(evaluate_script()))
    return tmp_path, scene, script


def run_evaluate(scene, script, out, *extra):
    return main(["evaluate", "--scene", str(scene), "--instruction", INSTRUCTION, "--instruction-id", "i1",
                 "--mock-script", str(script), "--out", str(out), *extra])


def test_evaluate_report(workspace, capsys):
    tmp, scene, script = workspace
    assert run_evaluate(scene, script, tmp / "out" / "r.json") == 0
    report = json.loads((tmp / "out" / "r.json").read_text())
    assert report["holistic_valid"] is False and report["complete"] is True
    assert [c["valid"] for c in report["constraints"]] == [True, False]
    assert [c["ctype"] for c in report["constraints"]] == ["object_selection", "object_placement"]
    assert report["transcripts_ref"] == "r.transcripts.jsonl"
    assert report["plans"]["c2"]["nodes"][1]["arguments"] == {"id_tuples": [["lamp|2", "bed|0"]]}
    lines = (tmp / "out" / "r.transcripts.jsonl").read_text().splitlines()
    # identify 1, classify 2, plan 2, argument selection 4, validate 2
    assert len(lines) == 11
    assert "holistic: FAIL" in capsys.readouterr().out


def test_evaluate_is_deterministic(workspace):
    tmp, scene, script = workspace
    run_evaluate(scene, script, tmp / "a" / "r.json", "--parallel", "3")
    run_evaluate(scene, script, tmp / "b" / "r.json")
    a, b = (tmp / "a" / "r.json").read_bytes(), (tmp / "b" / "r.json").read_bytes()
    assert json.loads(a)["config"]["parallel"] == 3
    strip = lambda raw: {k: v for k, v in json.loads(raw).items() if k != "config"}  # noqa: E731
    assert strip(a) == strip(b)
    run_evaluate(scene, script, tmp / "c" / "r.json", "--parallel", "3")
    assert (tmp / "c" / "r.json").read_bytes() == a


def test_evaluate_with_constraints_skips_extraction(workspace):
    tmp, scene, script = workspace
    ann = tmp / "ann.jsonl"
    write_jsonl(ann, [{"instruction_id": "i1", "id": "k1", "text": "The bed is in the bedroom.", "ctype": "object_selection"}])
    assert run_evaluate(scene, script, tmp / "r.json", "--constraints", str(ann)) == 0
    report = json.loads((tmp / "r.json").read_text())
    assert [c["id"] for c in report["constraints"]] == ["k1"]
    templates = {json.loads(line)["template_id"] for line in (tmp / "r.transcripts.jsonl").read_text().splitlines()}
    assert "constraint_identification" not in templates and "constraint_classification" not in templates


def test_evaluate_baseline(workspace):
    tmp, scene, script = workspace
    data = json.loads(script.read_text())
    data["responses"]["vlm_judge_baseline:*"] = [{"valid": True, "explanation": "yes"}, {"valid": False, "explanation": "no"}]
    script.write_text(json.dumps(data))
    code = run_evaluate(scene, script, tmp / "r.json", "--method", "baseline", "--samples", "1", "--resolution", "335")
    assert code == 0
    report = json.loads((tmp / "r.json").read_text())
    assert report["method"] == "vlm_judge_baseline"
    assert [c["valid"] for c in report["constraints"]] == [True, False]


def test_evaluate_bad_scene(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1, "scene_id": "x", "rooms": "nope"}))
    code = main(["evaluate", "--scene", str(bad), "--instruction", "x", "--out", str(tmp_path / "r.json")])
    assert code == 11
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "SchemaError" and record["exit_code"] == 11 and "path" in record


def test_evaluate_writes_partial_report(workspace, capsys):
    tmp, scene, script = workspace
    data = json.loads(script.read_text())
    data["responses"]["validation_OP:*"] = {"error": "timeout"}
    script.write_text(json.dumps(data))
    code = run_evaluate(scene, script, tmp / "r.json")
    assert code == 30
    partial = json.loads((tmp / "r.partial.json").read_text())
    assert [c["valid"] for c in partial["constraints"]] == [True, None]
    assert not (tmp / "r.json").exists()


def test_unreadable_inputs_are_reported(tmp_path, capsys):
    assert main(["evaluate", "--scene", str(tmp_path / "none.json"), "--instruction", "x"]) == 11
    assert json.loads(capsys.readouterr().err)["path"] == str(tmp_path / "none.json")
    code = main(["evaluate", "--scene", str(FIXTURES / "two_room.json"), "--instruction-file", str(tmp_path / "none.txt")])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


# -- render ---------------------------------------------------------------------------------


def test_render_single_png(tmp_path, capsys):
    assert main(["render", "--scene", str(FIXTURES / "two_room.json"), "--tool", "get_topdown_scene",
                 "--out-dir", str(tmp_path), "--resolution", "335"]) == 0
    files = json.loads(capsys.readouterr().out)["files"]
    assert len(files) == 1 and len(list(tmp_path.glob("*.png"))) == 1
    assert max(Image.open(files[0]).size) == 335


def test_render_multiview(tmp_path, capsys):
    main(["render", "--scene", str(FIXTURES / "two_room.json"), "--tool", "get_multiview_rendered_object",
          "--args", '{"object_ids": ["bed|0"]}', "--out-dir", str(tmp_path), "--resolution", "335"])
    assert len(json.loads(capsys.readouterr().out)["files"]) == 4


def test_render_text_tool_prints_record(tmp_path, capsys):
    main(["render", "--scene", str(FIXTURES / "two_room.json"), "--tool", "get_room_list", "--out-dir", str(tmp_path)])
    assert json.loads(capsys.readouterr().out) == {"room_ids": ["living_room|0", "bedroom|1"]}


def test_render_unknown_tool(tmp_path, capsys):
    code = main(["render", "--scene", str(FIXTURES / "two_room.json"), "--tool", "get_xray", "--out-dir", str(tmp_path)])
    assert code == 26
    assert json.loads(capsys.readouterr().err)["error"] == "UnknownToolError"


# -- bench ---------------------------------------------------------------------------------


def bench(root, script_dict, tmp, *extra):
    script = tmp / "bench_script.json"
    script.write_text(json.dumps(script_dict))
    out = tmp / "bench.json"
    assert main(["bench", str(root), "--mock-script", str(script), "--out", str(out), "--resolution", "335", *extra]) == 0
    return json.loads(out.read_text())


def test_bench_all_true(tmp_path):
    root = make_bundle(tmp_path / "b", counted_entries([2, 8, 13]))
    body = bench(root, verdict_script(True), tmp_path, "--reports-dir", str(tmp_path / "reports"))
    assert body["Holistic SR"] == 1.0
    assert list(body["Partial SR"]) == ["Floor Layout", "Material Selection", "Object Selection", "Object Placement", "Avg."]
    assert set(body["Partial SR"].values()) == {1.0}
    assert body["Holistic SR by complexity"] == {"simple": 1.0, "moderate": 1.0, "complex": 1.0}
    assert len(list((tmp_path / "reports").glob("ins*.json"))) == 3


def test_bench_missing_scenes_score_invalid(tmp_path):
    root = make_bundle(tmp_path / "b", counted_entries([2] * 10))
    method = tmp_path / "method"
    copy_scene("one_room", method / "ins0.json")
    body = bench(root, verdict_script(True), tmp_path, "--scenes", str(method))
    assert body["Holistic SR"] == pytest.approx(0.10)
    assert body["missing_scenes"] == [f"ins{i}" for i in range(1, 10)]
    assert body["Partial SR"]["Avg."] == pytest.approx(0.10)


# -- agree and plan-score ----------------------------------------------------------------------


def write_report(path, iid, verdicts):
    rows = [{"id": f"c{i + 1}", "text": "t", "ctype": "floor_layout", "source_span": None, "valid": v,
             "explanation": "e", "evidence": []} for i, v in enumerate(verdicts)]
    path.write_text(json.dumps({"schema_version": 1, "instruction_id": iid, "scene_id": iid, "constraints": rows}))


def test_agree_table(tmp_path, capsys):
    reports = tmp_path / "reports"
    reports.mkdir()
    verdicts = {"a": [True, True], "b": [True, False], "c": [False, False], "d": [True]}
    human = {"a": [True, True], "b": [False, False], "c": [False, True], "d": [True]}
    labels = []
    for iid, vs in verdicts.items():
        write_report(reports / f"{iid}.json", iid, vs)
        labels.append({"instruction_id": iid, "label": all(human[iid])})
        labels += [{"instruction_id": iid, "constraint_id": f"c{i + 1}", "label": h} for i, h in enumerate(human[iid])]
    write_jsonl(tmp_path / "labels.jsonl", labels)
    assert main(["agree", str(reports), str(tmp_path / "labels.jsonl")]) == 0
    body = json.loads(capsys.readouterr().out)
    assert list(body["Holistic"]) == ["F1", "Recall", "Precision", "Cohen's κ"]
    # holistic: predicted T,F,F,T vs gold T,F,F,T
    assert body["Holistic"]["F1"] == 1.0 and body["Holistic"]["Cohen's κ"] == 1.0
    # partial: predicted T,T,T,F,F,F,T vs gold T,T,F,F,F,T,T -> tp 3, fp 1, fn 1, tn 2
    assert body["counts"] == {"holistic": 4, "partial": 7}
    assert body["Partial"]["Precision"] == pytest.approx((3 / 4 + 2 / 3) / 2)
    assert body["Partial"]["Cohen's κ"] == pytest.approx((5 / 7 - (16 / 49 + 9 / 49)) / (1 - 25 / 49))


def test_agree_missing_labels(tmp_path, capsys):
    reports = tmp_path / "reports"
    reports.mkdir()
    write_report(reports / "a.json", "a", [True])
    write_jsonl(tmp_path / "labels.jsonl", [{"instruction_id": "a", "label": True}])
    code = main(["agree", str(reports), str(tmp_path / "labels.jsonl")])
    record = json.loads(capsys.readouterr().err)
    assert code == record["exit_code"] and record["error"] == "AlignmentError"
    assert record["missing"] == ["a@a/c1"]


def plan_row(iid, cid, nodes):
    return {"instruction_id": iid, "constraint_id": cid, "nodes": nodes}


def test_plan_score_table(tmp_path, capsys):
    gold = [
        plan_row("a", "c1", [
            {"node_id": "n1", "tool": "get_object_list"},
            {"node_id": "n2", "tool": "get_object_info", "depends_on": ["n1"], "arguments": {"ids": ["bed|0", "lamp|2"]}},
        ]),
        plan_row("a", "c2", [{"node_id": "n1", "tool": "get_room_list"}]),
    ]
    pred = [
        plan_row("a", "c1", [
            {"node_id": "x", "tool": "get_object_info", "arguments": {"ids": ["bed|0"]}},
            {"node_id": "y", "tool": "get_topdown_scene"},
        ]),
        plan_row("a", "c2", [{"node_id": "n1", "tool": "get_room_list"}]),
    ]
    write_jsonl(tmp_path / "gold.jsonl", gold)
    write_jsonl(tmp_path / "pred.jsonl", pred)
    assert main(["plan-score", str(tmp_path / "pred.jsonl"), str(tmp_path / "gold.jsonl")]) == 0
    body = json.loads(capsys.readouterr().out)
    assert [k for k in body if k in ("Tool F1", "GED", "Argument F1")] == ["Tool F1", "GED", "Argument F1"]
    assert body["Tool F1"] == pytest.approx((0.5 + 1.0) / 2)
    # c1: relabel one node and drop the edge; c2: identical
    assert body["GED"] == pytest.approx((2 + 0) / 2)
    # matched nodes: get_object_info (2/3) and get_room_list (both empty -> 1)
    assert body["Argument F1"] == pytest.approx((2 / 3 + 1.0) / 2)
    assert body["pairs"] == 2
