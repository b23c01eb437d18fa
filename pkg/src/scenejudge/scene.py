"""Canonical scene representation, registries, parsing and validation.

Coordinates are meters. Plan points are ``(x, y)`` with ``+y`` pointing
north; 3D positions are ``(x, y, z)`` where ``z`` is the elevation of the
entity's base above the floor. Rotation is degrees about the vertical axis;
rotation 0 means the object faces south (``-y``) and angles increase
counter-clockwise seen from above.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

from scenejudge import geometry
from scenejudge.errors import (
    GeometryError,
    SceneReferenceError,
    SceneSyntaxError,
    SchemaError,
    UnknownAssetError,
)

SCHEMA_VERSION = 1
DIRECTIONS = ("north", "south", "east", "west")
HOST_WALL_TOLERANCE = 0.5

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]
RGBA = tuple[int, int, int, int]


@dataclass(frozen=True)
class Room:
    id: str
    polygon: tuple[Point2, ...]
    floor_material: str


@dataclass(frozen=True)
class Wall:
    id: str
    room_ids: tuple[str, ...]
    segment: tuple[Point2, Point2]
    height: float
    width: float
    material: str
    direction: str


@dataclass(frozen=True)
class Door:
    id: str
    asset_id: str
    room_ids: tuple[str, ...]
    wall_id: str
    position: Point3
    open: bool


@dataclass(frozen=True)
class Window:
    id: str
    asset_id: str
    room_ids: tuple[str, ...]
    wall_id: str
    position: Point3


@dataclass(frozen=True)
class SceneObject:
    id: str
    asset_id: str
    room_id: str
    position: Point3
    rotation: float
    footprint: tuple[Point2, ...]
    wall_mounted: bool


@dataclass(frozen=True)
class Scene:
    scene_id: str
    rooms: tuple[Room, ...]
    walls: tuple[Wall, ...]
    doors: tuple[Door, ...]
    windows: tuple[Window, ...]
    objects: tuple[SceneObject, ...]
    material_registry_ref: str = ""
    asset_registry_ref: str = ""
    _lookup: Mapping[str, tuple[str, Any]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, tuple[str, Any]] = {}
        for kind, attr in _KIND_FIELDS.items():
            for entity in getattr(self, attr):
                index.setdefault(entity.id, (kind, entity))
        object.__setattr__(self, "_lookup", MappingProxyType(index))

    def find(self, component_id: str) -> tuple[str, Any] | None:
        """Return ``(kind, entity)`` for an id, or ``None``."""
        return self._lookup.get(component_id)

    def room(self, room_id: str) -> Room | None:
        hit = self.find(room_id)
        return hit[1] if hit and hit[0] == "room" else None

    def entities(self, kind: str) -> tuple[Any, ...]:
        return getattr(self, _KIND_FIELDS[kind])


_KIND_FIELDS = {
    "room": "rooms",
    "wall": "walls",
    "door": "doors",
    "window": "windows",
    "object": "objects",
}

# -- registries --------------------------------------------------------------


@dataclass(frozen=True)
class Material:
    rgba: RGBA
    texture_path: str | None = None


@dataclass(frozen=True)
class Dimensions:
    width: float
    depth: float
    height: float


@dataclass(frozen=True)
class Asset:
    type_label: str
    dominant_rgba: RGBA
    dimensions: Dimensions
    thumbnail_paths: tuple[str, ...] = ()


@dataclass(frozen=True)
class MaterialRegistry:
    entries: Mapping[str, Material]
    base_dir: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __contains__(self, name: object) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> Material:
        return self.entries[name]


@dataclass(frozen=True)
class AssetRegistry:
    entries: Mapping[str, Asset]
    base_dir: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __contains__(self, asset_id: object) -> bool:
        return asset_id in self.entries

    def get(self, asset_id: str, owner_id: str | None = None) -> Asset:
        try:
            return self.entries[asset_id]
        except KeyError:
            raise UnknownAssetError(asset_id, owner_id) from None


@dataclass(frozen=True)
class SceneEnv:
    """A scene together with the registries every tool reads."""

    scene: Scene
    materials: MaterialRegistry
    assets: AssetRegistry
    base_dir: Path | None = field(default=None, compare=False)


# -- parsing -----------------------------------------------------------------


def _load_json(document: bytes | str) -> Any:
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SceneSyntaxError(f"document is not UTF-8: {exc}") from exc
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise SceneSyntaxError(f"malformed JSON: {exc}") from exc


def _get(obj: Mapping, key: str, path: str) -> Any:
    if not isinstance(obj, Mapping):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    return obj[key]


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected string, got {type(value).__name__}")
    return value


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise SchemaError(path, "expected a finite number")
    return float(value)


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected boolean, got {type(value).__name__}")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected array, got {type(value).__name__}")
    return value


def _point(value: Any, path: str, dims: int) -> tuple[float, ...]:
    items = _list(value, path)
    if len(items) != dims:
        raise SchemaError(path, f"expected {dims} coordinates, got {len(items)}")
    return tuple(_num(v, f"{path}[{i}]") for i, v in enumerate(items))


def _str_list(value: Any, path: str) -> tuple[str, ...]:
    return tuple(_str(v, f"{path}[{i}]") for i, v in enumerate(_list(value, path)))


def _footprint(value: Any, path: str) -> tuple[Point2, ...]:
    if isinstance(value, Mapping):
        box = _get(value, "box", path)
        lo = _point(_get(box, "min", f"{path}.box"), f"{path}.box.min", 2)
        hi = _point(_get(box, "max", f"{path}.box"), f"{path}.box.max", 2)
        return ((lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1]))
    return tuple(_point(v, f"{path}[{i}]", 2) for i, v in enumerate(_list(value, path)))  # type: ignore[misc]


def scene_from_dict(data: Any) -> Scene:
    """Build a :class:`Scene` from decoded JSON, checking structure only."""
    if not isinstance(data, Mapping):
        raise SchemaError("$", "expected a JSON object at top level")
    version = _get(data, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {version!r}")

    rooms = []
    for i, r in enumerate(_list(_get(data, "rooms", ""), "rooms")):
        p = f"rooms[{i}]"
        rooms.append(
            Room(
                id=_str(_get(r, "id", p), f"{p}.id"),
                polygon=tuple(
                    _point(v, f"{p}.polygon[{k}]", 2)
                    for k, v in enumerate(_list(_get(r, "polygon", p), f"{p}.polygon"))
                ),
                floor_material=_str(_get(r, "floor_material", p), f"{p}.floor_material"),
            )
        )
    walls = []
    for i, w in enumerate(_list(_get(data, "walls", ""), "walls")):
        p = f"walls[{i}]"
        seg = _list(_get(w, "segment", p), f"{p}.segment")
        if len(seg) != 2:
            raise SchemaError(f"{p}.segment", "expected exactly two endpoints")
        walls.append(
            Wall(
                id=_str(_get(w, "id", p), f"{p}.id"),
                room_ids=_str_list(_get(w, "room_ids", p), f"{p}.room_ids"),
                segment=(_point(seg[0], f"{p}.segment[0]", 2), _point(seg[1], f"{p}.segment[1]", 2)),
                height=_num(_get(w, "height", p), f"{p}.height"),
                width=_num(_get(w, "width", p), f"{p}.width"),
                material=_str(_get(w, "material", p), f"{p}.material"),
                direction=_str(_get(w, "direction", p), f"{p}.direction"),
            )
        )
    doors = []
    for i, d in enumerate(_list(_get(data, "doors", ""), "doors")):
        p = f"doors[{i}]"
        doors.append(
            Door(
                id=_str(_get(d, "id", p), f"{p}.id"),
                asset_id=_str(_get(d, "asset_id", p), f"{p}.asset_id"),
                room_ids=_str_list(_get(d, "room_ids", p), f"{p}.room_ids"),
                wall_id=_str(_get(d, "wall_id", p), f"{p}.wall_id"),
                position=_point(_get(d, "position", p), f"{p}.position", 3),  # type: ignore[arg-type]
                open=_bool(_get(d, "open", p), f"{p}.open"),
            )
        )
    windows = []
    for i, w in enumerate(_list(_get(data, "windows", ""), "windows")):
        p = f"windows[{i}]"
        windows.append(
            Window(
                id=_str(_get(w, "id", p), f"{p}.id"),
                asset_id=_str(_get(w, "asset_id", p), f"{p}.asset_id"),
                room_ids=_str_list(_get(w, "room_ids", p), f"{p}.room_ids"),
                wall_id=_str(_get(w, "wall_id", p), f"{p}.wall_id"),
                position=_point(_get(w, "position", p), f"{p}.position", 3),  # type: ignore[arg-type]
            )
        )
    objects = []
    for i, o in enumerate(_list(_get(data, "objects", ""), "objects")):
        p = f"objects[{i}]"
        objects.append(
            SceneObject(
                id=_str(_get(o, "id", p), f"{p}.id"),
                asset_id=_str(_get(o, "asset_id", p), f"{p}.asset_id"),
                room_id=_str(_get(o, "room_id", p), f"{p}.room_id"),
                position=_point(_get(o, "position", p), f"{p}.position", 3),  # type: ignore[arg-type]
                rotation=_num(_get(o, "rotation", p), f"{p}.rotation"),
                footprint=_footprint(_get(o, "footprint", p), f"{p}.footprint"),
                wall_mounted=_bool(_get(o, "wall_mounted", p), f"{p}.wall_mounted"),
            )
        )
    return Scene(
        scene_id=_str(_get(data, "scene_id", ""), "scene_id"),
        rooms=tuple(rooms),
        walls=tuple(walls),
        doors=tuple(doors),
        windows=tuple(windows),
        objects=tuple(objects),
        material_registry_ref=_str(data.get("material_registry_ref", ""), "material_registry_ref"),
        asset_registry_ref=_str(data.get("asset_registry_ref", ""), "asset_registry_ref"),
    )


def parse_scene(document: bytes | str) -> Scene:
    """Parse a scene document and enforce every invariant.

    Raises the error matching the first violation found: structural problems
    raise :class:`SchemaError`, dangling ids :class:`SceneReferenceError`,
    and geometric or range problems :class:`GeometryError`.
    """
    scene = scene_from_dict(_load_json(document))
    violations = validate_scene(scene)
    if violations:
        _raise_for(violations[0])
    return scene


def _raise_for(v: "Violation"):
    if v.category == "reference":
        raise SceneReferenceError(v.entity_id, v.missing_id or "", v.message)
    if v.category == "duplicate":
        raise SchemaError(v.entity_id, v.message)
    raise GeometryError(f"{v.entity_id}: {v.message}")


def scene_to_dict(scene: Scene) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "scene_id": scene.scene_id,
        "material_registry_ref": scene.material_registry_ref,
        "asset_registry_ref": scene.asset_registry_ref,
        "rooms": [
            {"id": r.id, "polygon": [list(p) for p in r.polygon], "floor_material": r.floor_material}
            for r in scene.rooms
        ],
        "walls": [
            {
                "id": w.id,
                "room_ids": list(w.room_ids),
                "segment": [list(p) for p in w.segment],
                "height": w.height,
                "width": w.width,
                "material": w.material,
                "direction": w.direction,
            }
            for w in scene.walls
        ],
        "doors": [
            {
                "id": d.id,
                "asset_id": d.asset_id,
                "room_ids": list(d.room_ids),
                "wall_id": d.wall_id,
                "position": list(d.position),
                "open": d.open,
            }
            for d in scene.doors
        ],
        "windows": [
            {
                "id": w.id,
                "asset_id": w.asset_id,
                "room_ids": list(w.room_ids),
                "wall_id": w.wall_id,
                "position": list(w.position),
            }
            for w in scene.windows
        ],
        "objects": [
            {
                "id": o.id,
                "asset_id": o.asset_id,
                "room_id": o.room_id,
                "position": list(o.position),
                "rotation": o.rotation,
                "footprint": [list(p) for p in o.footprint],
                "wall_mounted": o.wall_mounted,
            }
            for o in scene.objects
        ],
    }


def serialize_scene(scene: Scene) -> bytes:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True).encode("utf-8")


def scene_hash(scene: Scene) -> str:
    return hashlib.sha256(serialize_scene(scene)).hexdigest()


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    entity_id: str
    rule: str
    message: str
    category: str = "geometry"  # reference | duplicate | geometry | value
    missing_id: str | None = None


def validate_scene(
    scene: Scene,
    materials: MaterialRegistry | None = None,
    assets: AssetRegistry | None = None,
) -> list[Violation]:
    """Check every scene invariant and return the violations found.

    Registry membership (floor/wall materials, asset ids) is only checked
    when the corresponding registry is passed.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for kind, attr in _KIND_FIELDS.items():
        for entity in getattr(scene, attr):
            if entity.id in seen:
                out.append(Violation(entity.id, "unique_id", f"duplicate id {entity.id!r}", "duplicate"))
            seen.add(entity.id)

    room_ids = {r.id for r in scene.rooms}
    walls = {w.id: w for w in scene.walls}

    def ref(source: str, target: str, pool: Iterable[str], rule: str):
        if target not in pool:
            out.append(
                Violation(source, rule, f"{source!r} references unknown id {target!r}", "reference", target)
            )

    for r in scene.rooms:
        if len(r.polygon) < 3:
            out.append(Violation(r.id, "polygon_vertices", f"room polygon has {len(r.polygon)} vertices, need >= 3"))
        elif not geometry.is_simple_polygon(r.polygon):
            out.append(Violation(r.id, "polygon_simple", "room polygon is self-intersecting"))
        if materials is not None and r.floor_material not in materials:
            out.append(Violation(r.id, "floor_material", f"unknown floor material {r.floor_material!r}", "value"))

    for w in scene.walls:
        if not 1 <= len(w.room_ids) <= 2:
            out.append(Violation(w.id, "wall_rooms", f"wall references {len(w.room_ids)} rooms, need 1 or 2", "value"))
        for rid in w.room_ids:
            ref(w.id, rid, room_ids, "wall_room_ref")
        if w.height <= 0:
            out.append(Violation(w.id, "wall_height", "height must be > 0", "value"))
        if w.width <= 0:
            out.append(Violation(w.id, "wall_width", "width must be > 0", "value"))
        if w.segment[0] == w.segment[1]:
            out.append(Violation(w.id, "wall_segment", "segment endpoints coincide"))
        if w.direction not in DIRECTIONS:
            out.append(Violation(w.id, "wall_direction", f"direction {w.direction!r} not in {DIRECTIONS}", "value"))
        if materials is not None and w.material not in materials:
            out.append(Violation(w.id, "wall_material", f"unknown wall material {w.material!r}", "value"))

    for opening in (*scene.doors, *scene.windows):
        for rid in opening.room_ids:
            ref(opening.id, rid, room_ids, "opening_room_ref")
        host = walls.get(opening.wall_id)
        if host is None:
            ref(opening.id, opening.wall_id, walls, "opening_wall_ref")
        elif host.segment[0] != host.segment[1]:
            dist = geometry.distance_point_segment(opening.position[:2], *host.segment)
            if dist > HOST_WALL_TOLERANCE:
                out.append(
                    Violation(opening.id, "opening_on_wall", f"position is {dist:.3f} m from host wall {host.id!r}")
                )
        if assets is not None and opening.asset_id not in assets:
            ref(opening.id, opening.asset_id, assets.entries, "asset_ref")

    for o in scene.objects:
        ref(o.id, o.room_id, room_ids, "object_room_ref")
        if not 0 <= o.rotation < 360:
            out.append(Violation(o.id, "rotation_range", f"rotation {o.rotation} outside [0, 360)", "value"))
        if len(o.footprint) < 3 or abs(geometry.polygon_area(o.footprint)) <= 1e-12:
            out.append(Violation(o.id, "footprint_area", "footprint has no positive area"))
        if assets is not None and o.asset_id not in assets:
            ref(o.id, o.asset_id, assets.entries, "asset_ref")
    return out


# -- registries I/O ----------------------------------------------------------


def _rgba(value: Any, path: str) -> RGBA:
    items = _list(value, path)
    if len(items) != 4 or not all(isinstance(c, int) and not isinstance(c, bool) and 0 <= c <= 255 for c in items):
        raise SchemaError(path, "expected four integers in [0, 255]")
    return tuple(items)  # type: ignore[return-value]


def parse_material_registry(document: bytes | str, base_dir: Path | None = None) -> MaterialRegistry:
    data = _load_json(document)
    entries = {}
    for name, m in _get(data, "materials", "").items():
        p = f"materials.{name}"
        if not name:
            raise SchemaError(p, "material name must be non-empty")
        rgba = _rgba(_get(m, "rgba", p), f"{p}.rgba")
        if rgba[3] == 0:
            raise SchemaError(f"{p}.rgba", "alpha must be > 0")
        tex = m.get("texture_path")
        entries[name] = Material(rgba=rgba, texture_path=None if tex is None else _str(tex, f"{p}.texture_path"))
    return MaterialRegistry(entries, base_dir)


def parse_asset_registry(document: bytes | str, base_dir: Path | None = None) -> AssetRegistry:
    data = _load_json(document)
    entries = {}
    for asset_id, a in _get(data, "assets", "").items():
        p = f"assets.{asset_id}"
        dims = _get(a, "dimensions", p)
        d = Dimensions(
            width=_num(_get(dims, "width", f"{p}.dimensions"), f"{p}.dimensions.width"),
            depth=_num(_get(dims, "depth", f"{p}.dimensions"), f"{p}.dimensions.depth"),
            height=_num(_get(dims, "height", f"{p}.dimensions"), f"{p}.dimensions.height"),
        )
        if min(d.width, d.depth, d.height) <= 0:
            raise GeometryError(f"{asset_id}: dimensions must be strictly positive")
        entries[asset_id] = Asset(
            type_label=_str(_get(a, "type_label", p), f"{p}.type_label"),
            dominant_rgba=_rgba(_get(a, "dominant_rgba", p), f"{p}.dominant_rgba"),
            dimensions=d,
            thumbnail_paths=_str_list(a.get("thumbnail_paths") or [], f"{p}.thumbnail_paths"),
        )
    return AssetRegistry(entries, base_dir)


def load_scene_env(path: str | Path) -> SceneEnv:
    """Load a scene file plus the registries it references (paths relative to the file)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise SchemaError(str(path), f"cannot read scene file: {exc}") from exc
    scene = parse_scene(raw)
    base = path.parent
    materials = _load_registry(base, scene.material_registry_ref, "material_registry_ref", parse_material_registry)
    assets = _load_registry(base, scene.asset_registry_ref, "asset_registry_ref", parse_asset_registry)
    violations = validate_scene(scene, materials, assets)
    if violations:
        _raise_for(violations[0])
    return SceneEnv(scene, materials, assets, base)


def _load_registry(base: Path, ref: str, field_name: str, parser):
    if not ref:
        raise SchemaError(field_name, "registry reference is required to load a scene environment")
    reg_path = base / ref
    try:
        raw = reg_path.read_bytes()
    except OSError as exc:
        raise SchemaError(field_name, f"cannot read registry {reg_path}: {exc}") from exc
    return parser(raw, reg_path.parent)
