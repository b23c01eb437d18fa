"""Read-only text queries over a scene (the list/info tool family)."""

from __future__ import annotations

from enum import Enum
from typing import Any, Iterable

from scenejudge.errors import KindMismatchError, UnknownIdError, UnknownRoomError
from scenejudge.scene import Door, Room, Scene, SceneObject, Wall, Window


class ComponentKind(str, Enum):
    ROOM = "room"
    WALL = "wall"
    DOOR = "door"
    WINDOW = "window"
    OBJECT = "object"


def _in_room(kind: ComponentKind, entity: Any, room_id: str) -> bool:
    if kind is ComponentKind.OBJECT:
        return entity.room_id == room_id
    return room_id in entity.room_ids


def list_components(
    scene: Scene, kind: ComponentKind | str, room_ids: Iterable[str] | None = None
) -> list[str] | dict[str, list[str]]:
    """Ids of one component kind, grouped by room.

    ``kind=room`` returns a flat list of room ids and ignores ``room_ids``.
    Otherwise returns ``{room_id: [ids...]}`` for the requested rooms (all
    rooms when ``room_ids`` is None), ids in document order.
    """
    kind = ComponentKind(kind)
    if kind is ComponentKind.ROOM:
        return [r.id for r in scene.rooms]
    if room_ids is None:
        room_ids = [r.id for r in scene.rooms]
    out: dict[str, list[str]] = {}
    for rid in room_ids:
        if scene.room(rid) is None:
            raise UnknownRoomError(rid)
        out[rid] = [e.id for e in scene.entities(kind.value) if _in_room(kind, e, rid)]
    return out


def component_record(entity: Room | Wall | Door | Window | SceneObject) -> dict[str, Any]:
    """JSON-ready record carrying every field of the entity."""
    if isinstance(entity, Room):
        return {
            "id": entity.id,
            "polygon": [list(p) for p in entity.polygon],
            "floor_material": entity.floor_material,
        }
    if isinstance(entity, Wall):
        return {
            "id": entity.id,
            "room_ids": list(entity.room_ids),
            "segment": [list(p) for p in entity.segment],
            "height": entity.height,
            "width": entity.width,
            "material": entity.material,
            "direction": entity.direction,
        }
    if isinstance(entity, Door):
        return {
            "id": entity.id,
            "asset_id": entity.asset_id,
            "room_ids": list(entity.room_ids),
            "wall_id": entity.wall_id,
            "position": list(entity.position),
            "open": entity.open,
        }
    if isinstance(entity, Window):
        return {
            "id": entity.id,
            "asset_id": entity.asset_id,
            "room_ids": list(entity.room_ids),
            "wall_id": entity.wall_id,
            "position": list(entity.position),
        }
    return {
        "id": entity.id,
        "asset_id": entity.asset_id,
        "room_id": entity.room_id,
        "position": list(entity.position),
        "rotation": entity.rotation,
        "footprint": [list(p) for p in entity.footprint],
        "wall_mounted": entity.wall_mounted,
    }


def resolve(scene: Scene, component_id: str, kind: ComponentKind | str | None = None):
    hit = scene.find(component_id)
    if hit is None:
        if kind == ComponentKind.ROOM:
            raise UnknownRoomError(component_id)
        raise UnknownIdError(component_id)
    actual, entity = hit
    if kind is not None and actual != ComponentKind(kind).value:
        raise KindMismatchError(component_id, ComponentKind(kind).value, actual)
    return entity


def get_component_info(scene: Scene, kind: ComponentKind | str, ids: Iterable[str]) -> dict[str, dict[str, Any]]:
    kind = ComponentKind(kind)
    return {cid: component_record(resolve(scene, cid, kind)) for cid in ids}
