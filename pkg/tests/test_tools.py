from __future__ import annotations

from collections import Counter

import pytest

from scenejudge.errors import ToolArgumentError, UnknownToolError
from scenejudge.gateway import Gateway, MockBackend
from scenejudge.raster import ImageBuffer
from scenejudge.tools import (
    OutputKind,
    ToolCategory,
    ToolContext,
    invoke_tool,
    load_allowlist,
    lookup,
    render_filenames,
    tool_registry,
    validate_arguments,
)


def test_registry_shape():
    specs = tool_registry()
    assert len(specs) == 21
    assert len({s.name for s in specs}) == 21
    counts = Counter(s.category for s in specs)
    assert counts == {
        ToolCategory.ENVIRONMENT_INTERACTION: 8,
        ToolCategory.TEXTUAL_REASONING: 10,
        ToolCategory.MULTIMODAL_REASONING: 3,
    }


def test_lookup_examples():
    assert lookup("get_room_list").category is ToolCategory.TEXTUAL_REASONING
    assert lookup("get_spatial_relation").output_kind is OutputKind.IMAGE_SET
    with pytest.raises(UnknownToolError):
        lookup("get_everything")


def test_selector_families():
    fam = {s.name: s.selector_family for s in tool_registry()}
    assert fam["get_wall_list"] == 1 and fam["get_door_info"] == 2
    assert fam["get_material_image"] == 3 and fam["get_multiview_rendered_object"] == 4
    assert fam["get_spatial_relation"] == 5


def test_list_output_feeds_info(three_room_env):
    ctx = ToolContext(three_room_env)
    for kind in ("wall", "door", "window", "object"):
        listed = invoke_tool(f"get_{kind}_list", {}, ctx)
        ids = sorted({i for v in listed.values() for i in v})
        info = invoke_tool(f"get_{kind}_info", {"ids": ids}, ctx)
        assert sorted(info) == ids
    rooms = invoke_tool("get_room_list", {}, ctx)["room_ids"]
    assert sorted(invoke_tool("get_room_info", {"ids": rooms}, ctx)) == sorted(rooms)


def test_argument_validation(two_room_env):
    spec = lookup("get_object_info")
    with pytest.raises(ToolArgumentError):
        validate_arguments(spec, {}, two_room_env)
    with pytest.raises(ToolArgumentError):
        validate_arguments(spec, {"ids": ["wall|2"]}, two_room_env)
    with pytest.raises(ToolArgumentError):
        validate_arguments(spec, {"ids": ["bed|0"], "extra": 1}, two_room_env)
    assert validate_arguments(spec, {"ids": ["bed|0", "bed|0"]}, two_room_env) == {"ids": ["bed|0"]}
    rel = lookup("get_spatial_relation")
    assert validate_arguments(rel, {"id_tuples": [["bed|0", "window|1"]]}, two_room_env)
    with pytest.raises(ToolArgumentError):
        validate_arguments(rel, {"id_tuples": ["bed|0"]}, two_room_env)
    subj = lookup("get_property_verification")
    validate_arguments(subj, {"subject_id": "brick_red", "instruction_fragment": "red brick"}, two_room_env)
    with pytest.raises(ToolArgumentError):
        validate_arguments(subj, {"subject_id": "wall|4", "instruction_fragment": "red brick"}, two_room_env)


def test_image_tools_return_image_sets(two_room_env):
    ctx = ToolContext(two_room_env)
    out = invoke_tool("get_topdown_object", {"object_ids": ["bed|0", "lamp|2"]}, ctx)
    assert set(out) == {"bed|0", "lamp|2"} and all(len(v) == 2 for v in out.values())
    rel = invoke_tool("get_spatial_relation", {"id_tuples": [["bed|0", "lamp|2"]]}, ctx)
    assert list(rel) == ["bed|0,lamp|2"]
    assert all(isinstance(i, ImageBuffer) for i in invoke_tool("get_topdown_scene", {}, ctx)["scene"])


def test_multimodal_tools_use_upstream_images(two_room_env):
    gw = Gateway(MockBackend({"object_match:*": {"type_label": "bed"}}))
    upstream = invoke_tool("get_frontview_object", {"object_ids": ["bed|0"]}, ToolContext(two_room_env))
    ctx = ToolContext(two_room_env, gw, dependency_outputs={"n1": upstream})
    assert invoke_tool("get_object_match", {"object_ids": ["bed|0"]}, ctx) == {"bed|0": "bed"}
    assert gw.transcripts[0].images[0]["label"] == "frontview:bed|0"
    # without upstream images the tool falls back to multiview renders
    invoke_tool("get_object_match", {"object_ids": ["bed|0"]}, ToolContext(two_room_env, gw))
    assert len(gw.transcripts[1].images) == 4


def test_property_tools_accept_materials(two_room_env):
    gw = Gateway(
        MockBackend({"property_description:*": {"attributes": {"color": "red", "shape": "flat", "material": "brick"}, "reasoning": "r"}})
    )
    out = invoke_tool("get_property_description", {"subject_ids": ["brick_red"]}, ToolContext(two_room_env, gw))
    assert out["brick_red"]["attributes"]["material"] == "brick"


def test_allowlist_includes_list_info_everywhere():
    allow = load_allowlist()
    base = {s.name for s in tool_registry() if s.category is ToolCategory.TEXTUAL_REASONING}
    for ctype, names in allow.items():
        assert base <= names, ctype
    assert "get_spatial_relation" in allow["object_placement"]
    assert "get_spatial_relation" not in allow["material_selection"]
    assert "get_material_image" not in allow["floor_layout"]


def test_allowlist_file_override(tmp_path):
    path = tmp_path / "allow.json"
    path.write_text('{"always": ["get_room_list"], "floor_layout": ["get_topdown_scene"]}')
    allow = load_allowlist(path)
    assert allow["floor_layout"] == {"get_room_list", "get_topdown_scene"}
    assert allow["object_placement"] == {"get_room_list"}
    path.write_text('{"always": ["get_bogus"]}')
    with pytest.raises(UnknownToolError):
        load_allowlist(path)


def test_render_filenames():
    one = render_filenames("get_topdown_scene", {}, 1)
    assert len(one) == 1 and one[0].startswith("get_topdown_scene__") and one[0].endswith(".png")
    many = render_filenames("get_topdown_object", {"object_ids": ["a"]}, 3)
    assert len(set(many)) == 3 and many[2].endswith("__2.png")
