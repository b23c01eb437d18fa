from __future__ import annotations

import json

import pytest

from scenejudge.errors import KindMismatchError, UnknownIdError, UnknownRoomError
from scenejudge.textual import ComponentKind, get_component_info, list_components, resolve


def test_room_list(two_room_env):
    assert list_components(two_room_env.scene, ComponentKind.ROOM) == ["living_room|0", "bedroom|1"]


def test_objects_in_bedroom(two_room_env):
    assert list_components(two_room_env.scene, "object", ["bedroom|1"]) == {"bedroom|1": ["bed|0", "lamp|2"]}


def test_unknown_room_is_named(two_room_env):
    with pytest.raises(UnknownRoomError) as exc:
        list_components(two_room_env.scene, "door", ["hall|9"])
    assert "hall|9" in str(exc.value)


def test_shared_wall_listed_under_both_rooms(two_room_env):
    walls = list_components(two_room_env.scene, "wall")
    assert "wall|3" in walls["living_room|0"] and "wall|3" in walls["bedroom|1"]


def test_wall_info_record(two_room_env):
    rec = get_component_info(two_room_env.scene, "wall", ["wall|2"])["wall|2"]
    assert rec["material"] == "plaster_white"
    assert rec["height"] == 3.0
    assert rec["direction"] == "north"
    assert rec["room_ids"] == ["living_room|0"]
    assert len(rec["segment"]) == 2


def test_room_info_record(two_room_env):
    rec = get_component_info(two_room_env.scene, "room", ["living_room|0"])["living_room|0"]
    assert len(rec["polygon"]) == 4
    assert rec["floor_material"] == "oak_dark"


def test_kind_mismatch(two_room_env):
    with pytest.raises(KindMismatchError):
        get_component_info(two_room_env.scene, "object", ["wall|2"])


def test_unknown_id(two_room_env):
    with pytest.raises(UnknownIdError):
        resolve(two_room_env.scene, "ghost|0")


def test_info_output_has_exactly_requested_ids_and_is_json(three_room_env):
    out = get_component_info(three_room_env.scene, "object", ["fridge|6", "bed|0"])
    assert list(out) == ["fridge|6", "bed|0"]
    json.dumps(out)


def test_repeated_calls_are_equal(three_room_env):
    a = list_components(three_room_env.scene, "window")
    b = list_components(three_room_env.scene, "window")
    assert a == b
