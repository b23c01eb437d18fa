"""Deterministic orthographic renders of a scene.

Top-down views look straight down with north up. Elevation views (front
views of objects, wall views) look horizontally; their image ``u`` axis is
the viewer's right and ``v`` is height above the floor.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from scenejudge import geometry, style
from scenejudge.errors import (
    EmptySceneError,
    MaterialNotInSceneError,
    UnknownAssetError,
    UnknownMaterialError,
)
from scenejudge.raster import Canvas, ImageBuffer, Viewport, blend, burn_text, solid, text_size
from scenejudge.scene import Door, Room, SceneEnv, SceneObject, Wall, Window
from scenejudge.textual import ComponentKind, resolve

DEFAULT_RESOLUTION = style.DEFAULT_RESOLUTION["local"]
Vec = tuple[float, float]


def _sub(a: Vec, b: Vec) -> Vec:
    return (a[0] - b[0], a[1] - b[1])


def _dot(a: Vec, b: Vec) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _unit(v: Vec) -> Vec:
    n = math.hypot(*v)
    return (v[0] / n, v[1] / n)


def facing(rotation: float) -> Vec:
    """Unit plan vector an object faces; rotation 0 faces south."""
    t = math.radians(rotation)
    return (math.sin(t), -math.cos(t))


def _right_of(view_dir: Vec) -> Vec:
    return (view_dir[1], -view_dir[0])


def opening_segment(env: SceneEnv, opening: Door | Window) -> tuple[Vec, Vec]:
    """Plan segment a door/window occupies on its host wall."""
    wall = resolve(env.scene, opening.wall_id, ComponentKind.WALL)
    a, b = wall.segment
    t = geometry.project_onto_segment(opening.position[:2], a, b)
    t = min(1.0, max(0.0, t))
    along = _unit(_sub(b, a))
    center = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    half = env.assets.get(opening.asset_id, opening.id).dimensions.width / 2.0
    return (
        (center[0] - along[0] * half, center[1] - along[1] * half),
        (center[0] + along[0] * half, center[1] + along[1] * half),
    )


def _into_room(env: SceneEnv, wall: Wall, room_id: str | None = None) -> Vec:
    """Unit normal of ``wall`` pointing toward the interior of ``room_id``."""
    a, b = wall.segment
    d = _unit(_sub(b, a))
    n = (-d[1], d[0])
    room = env.scene.room(room_id or wall.room_ids[0])
    if room is not None:
        c = geometry.polygon_centroid(room.polygon)
        if _dot(_sub(c, a), n) < 0:
            n = (-n[0], -n[1])
    return n


def _entity_points(env: SceneEnv, entity) -> list[Vec]:
    if isinstance(entity, SceneObject):
        return list(entity.footprint)
    if isinstance(entity, Room):
        return list(entity.polygon)
    if isinstance(entity, Wall):
        return list(entity.segment)
    return list(opening_segment(env, entity))


# -- top-down drawing ------------------------------------------------------------


def _label(canvas: Canvas, text: str, anchor: Vec, resolution: int, opacity: float = 1.0) -> None:
    """Burn a label just above-left of a world anchor point."""
    scale = style.label_scale(resolution)
    col, row = canvas.vp.to_px(*anchor)
    _, h = text_size(text, scale)
    if opacity >= 1.0:
        canvas.text(int(math.floor(col)), int(math.floor(row)) - h - 1, text, scale)


def _draw_object(canvas: Canvas, env: SceneEnv, obj: SceneObject, opacity: float = 1.0) -> None:
    rgba = env.assets.get(obj.asset_id, obj.id).dominant_rgba
    canvas.fill_polygon(obj.footprint, rgba, opacity)


def _draw_wall(canvas: Canvas, wall: Wall, resolution: int, opacity: float = 1.0) -> None:
    canvas.stroke_segment(*wall.segment, style.WALL_STROKE, style.stroke_px(resolution), opacity)


def _draw_door(canvas: Canvas, env: SceneEnv, door: Door, resolution: int, opacity: float = 1.0) -> None:
    a, b = opening_segment(env, door)
    width = style.stroke_px(resolution)
    canvas.stroke_segment(a, b, style.DOOR_GLYPH, width + 1, opacity)
    if not door.open:
        return
    wall = resolve(env.scene, door.wall_id, ComponentKind.WALL)
    n = _into_room(env, wall)
    radius = math.hypot(*_sub(b, a))
    along = _unit(_sub(b, a))
    arc = []
    for k in range(9):
        t = (math.pi / 2) * k / 8
        arc.append(
            (
                a[0] + radius * (math.cos(t) * along[0] + math.sin(t) * n[0]),
                a[1] + radius * (math.cos(t) * along[1] + math.sin(t) * n[1]),
            )
        )
    canvas.stroke_polyline(arc, style.DOOR_GLYPH, width, opacity=opacity)
    canvas.stroke_segment(a, arc[-1], style.DOOR_GLYPH, width, opacity)


def _draw_window(canvas: Canvas, env: SceneEnv, window: Window, resolution: int, opacity: float = 1.0) -> None:
    a, b = opening_segment(env, window)
    wall = resolve(env.scene, window.wall_id, ComponentKind.WALL)
    n = _into_room(env, wall)
    width = style.stroke_px(resolution)
    off = (width + 1) / canvas.vp.scale
    for sign in (-1, 1):
        shift = (n[0] * off * sign, n[1] * off * sign)
        canvas.stroke_segment(
            (a[0] + shift[0], a[1] + shift[1]), (b[0] + shift[0], b[1] + shift[1]), style.WINDOW_GLYPH, width, opacity
        )


def _draw_plan(canvas: Canvas, env: SceneEnv, resolution: int, target: SceneObject | None = None) -> None:
    scene = env.scene
    for room in scene.rooms:
        canvas.fill_polygon(room.polygon, env.materials[room.floor_material].rgba)
    for obj in scene.objects:
        if obj is not target:
            _draw_object(canvas, env, obj)
    for wall in scene.walls:
        _draw_wall(canvas, wall, resolution)
    for door in scene.doors:
        _draw_door(canvas, env, door, resolution)
    for window in scene.windows:
        _draw_window(canvas, env, window, resolution)
    for obj in scene.objects:
        if obj is not target:
            x0, _, _, y1 = geometry.bbox(obj.footprint)
            _label(canvas, obj.id, (x0, y1), resolution)
    if target is not None:
        _draw_object(canvas, env, target)
        x0, _, _, y1 = geometry.bbox(target.footprint)
        _label(canvas, target.id, (x0, y1), resolution)


def _framed(points: Sequence[Vec], margin: float, min_half: float = 0.25) -> tuple[Vec, float]:
    x0, y0, x1, y1 = geometry.bbox(points)
    half = max(x1 - x0, y1 - y0) / 2.0 * (1.0 + margin)
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0), max(half, min_half)


def get_topdown_scene(env: SceneEnv, resolution: int = DEFAULT_RESOLUTION) -> ImageBuffer:
    """Plan view of the whole scene framed to every room plus a 5% margin."""
    if not env.scene.rooms:
        raise EmptySceneError(f"scene {env.scene.scene_id!r} has no rooms")
    pts = [p for r in env.scene.rooms for p in r.polygon]
    center, half = _framed(pts, style.SCENE_MARGIN)
    canvas = Canvas(Viewport.square(center, half, resolution))
    _draw_plan(canvas, env, resolution)
    return canvas.image(f"topdown:{env.scene.scene_id}")


def room_mask(vp: Viewport, polygon: Sequence[Vec]) -> np.ndarray:
    """Boolean mask of pixels whose centers fall inside ``polygon``."""
    probe = Canvas(vp, background=(0, 0, 0, 0))
    probe.fill_polygon(polygon, (255, 255, 255, 255))
    return probe.data[:, :, 0] == 255


def get_topdown_room(env: SceneEnv, room_id: str, resolution: int = DEFAULT_RESOLUTION) -> ImageBuffer:
    """Plan view framed on one room; everything outside it is dimmed."""
    room = resolve(env.scene, room_id, ComponentKind.ROOM)
    center, half = _framed(room.polygon, style.SCENE_MARGIN)
    vp = Viewport.square(center, half, resolution)
    canvas = Canvas(vp)
    _draw_plan(canvas, env, resolution)
    outside = ~room_mask(vp, room.polygon)
    bg = solid(vp.width_px, vp.height_px, style.BACKGROUND)
    canvas.data[outside] = blend(bg[outside], canvas.data[outside], style.DIM_OPACITY)
    return canvas.image(f"topdown_room:{room_id}")


def get_topdown_object(
    env: SceneEnv, object_ids: Iterable[str], resolution: int = DEFAULT_RESOLUTION
) -> dict[str, list[ImageBuffer]]:
    """Two overhead crops per object, near then far, centered on its footprint."""
    out: dict[str, list[ImageBuffer]] = {}
    for oid in object_ids:
        obj = resolve(env.scene, oid, ComponentKind.OBJECT)
        center = geometry.polygon_centroid(obj.footprint)
        radius = geometry.footprint_radius(obj.footprint)
        views = []
        for factor in style.TOPDOWN_OBJECT_LADDER:
            canvas = Canvas(Viewport.square(center, factor * radius, resolution))
            _draw_plan(canvas, env, resolution, target=obj)
            views.append(canvas.image(f"{oid}@{factor:g}x"))
        out[oid] = views
    return out


# -- elevation views ------------------------------------------------------------------


def _projected_extent(points: Iterable[Vec], right: Vec) -> tuple[float, float]:
    us = [_dot(p, right) for p in points]
    return min(us), max(us)


def get_frontview_object(
    env: SceneEnv, object_ids: Iterable[str], resolution: int = DEFAULT_RESOLUTION
) -> dict[str, ImageBuffer]:
    """Elevation looking at each object's front, with neighbors within 2 m."""
    out: dict[str, ImageBuffer] = {}
    for oid in object_ids:
        target = resolve(env.scene, oid, ComponentKind.OBJECT)
        view_dir = tuple(-c for c in facing(target.rotation))
        right = _right_of(view_dir)  # type: ignore[arg-type]

        def box(obj: SceneObject):
            u0, u1 = _projected_extent(obj.footprint, right)
            z = obj.position[2]
            return u0, z, u1, z + env.assets.get(obj.asset_id, obj.id).dimensions.height

        tu0, tz0, tu1, tz1 = box(target)
        half = max(tu1 - tu0, tz1 - tz0) / 2.0 * 1.6
        vp = Viewport.square(((tu0 + tu1) / 2.0, (tz0 + tz1) / 2.0), half, resolution)
        canvas = Canvas(vp)
        canvas.fill_rect(vp.center_u - 2 * half, vp.center_v - 2 * half, vp.center_u + 2 * half, 0.0, style.FLOOR_STRIP)

        tpos = target.position[:2]
        neighbors = [
            o
            for o in env.scene.objects
            if o is not target
            and math.hypot(o.position[0] - tpos[0], o.position[1] - tpos[1]) <= style.FRONTVIEW_NEIGHBOR_RADIUS
        ]
        # painter's order: farthest from the camera first
        neighbors.sort(key=lambda o: -_dot(geometry.polygon_centroid(o.footprint), view_dir))  # type: ignore[arg-type]
        for o in neighbors:
            u0, v0, u1, v1 = box(o)
            canvas.fill_rect(u0, v0, u1, v1, env.assets.get(o.asset_id, o.id).dominant_rgba)

        canvas.fill_rect(tu0, tz0, tu1, tz1, env.assets.get(target.asset_id, oid).dominant_rgba)
        corners = [(tu0, tz0), (tu1, tz0), (tu1, tz1), (tu0, tz1)]
        canvas.stroke_polyline(corners, style.OUTLINE, style.MIN_STROKE_PX, closed=True)
        _label(canvas, oid, (tu0, tz1), resolution)
        dims = f"{tu1 - tu0:.2f}x{tz1 - tz0:.2f}m"
        col, row = vp.to_px(tu0, tz0)
        canvas.text(int(col), int(row) + 2, dims, style.label_scale(resolution))
        out[oid] = canvas.image(f"frontview:{oid}")
    return out


def _wall_mounted_on(env: SceneEnv, wall: Wall) -> list[SceneObject]:
    return [
        o
        for o in env.scene.objects
        if o.wall_mounted
        and o.room_id in wall.room_ids
        and geometry.distance_point_segment(geometry.polygon_centroid(o.footprint), *wall.segment)
        <= style.WALL_MOUNT_TOLERANCE
    ]


def _tiled(texture: np.ndarray, width: int, height: int) -> np.ndarray:
    reps_y = -(-height // texture.shape[0])
    reps_x = -(-width // texture.shape[1])
    return np.tile(texture, (reps_y, reps_x, 1))[:height, :width]


def _texture(env: SceneEnv, name: str) -> np.ndarray | None:
    material = env.materials[name]
    if not material.texture_path:
        return None
    base = env.materials.base_dir or env.base_dir
    path = (base / material.texture_path) if base is not None else material.texture_path
    return ImageBuffer.load(path).to_array()


def wall_frame(env: SceneEnv, wall: Wall, resolution: int) -> tuple[Viewport, Vec]:
    """Viewport of a wall elevation and the plan 'right' vector of the viewer."""
    n = _into_room(env, wall)
    right = _right_of((-n[0], -n[1]))
    u0, u1 = _projected_extent(wall.segment, right)
    m = 1.0 + style.SCENE_MARGIN
    vp = Viewport.fit(((u0 + u1) / 2.0, wall.height / 2.0), (u1 - u0) / 2.0 * m, wall.height / 2.0 * m, resolution)
    return vp, right


def get_wall_scene(
    env: SceneEnv, wall_ids: Iterable[str], resolution: int = DEFAULT_RESOLUTION
) -> dict[str, ImageBuffer]:
    """Wall elevations seen from inside the wall's first room.

    Only the wall surface, its doors and windows, and wall-mounted objects are
    drawn; freestanding furniture is removed so nothing occludes the wall.
    """
    out: dict[str, ImageBuffer] = {}
    for wid in wall_ids:
        wall = resolve(env.scene, wid, ComponentKind.WALL)
        vp, right = wall_frame(env, wall, resolution)
        canvas = Canvas(vp)
        u0, u1 = _projected_extent(wall.segment, right)
        tex = _texture(env, wall.material)
        if tex is None:
            canvas.fill_rect(u0, 0.0, u1, wall.height, env.materials[wall.material].rgba)
        else:
            c0, r0 = vp.to_px(u0, wall.height)
            c1, r1 = vp.to_px(u1, 0.0)
            c0, r0, c1, r1 = (int(round(x)) for x in (c0, r0, c1, r1))
            canvas.data[r0:r1, c0:c1] = _tiled(tex, c1 - c0, r1 - r0)

        for door in (d for d in env.scene.doors if d.wall_id == wid):
            a, b = opening_segment(env, door)
            du0, du1 = _projected_extent((a, b), right)
            h = env.assets.get(door.asset_id, door.id).dimensions.height
            canvas.fill_rect(du0, 0.0, du1, h, style.DOOR_GLYPH)
            _label(canvas, door.id, (du0, h), resolution)
        for window in (w for w in env.scene.windows if w.wall_id == wid):
            a, b = opening_segment(env, window)
            wu0, wu1 = _projected_extent((a, b), right)
            z0 = window.position[2]
            z1 = z0 + env.assets.get(window.asset_id, window.id).dimensions.height
            canvas.fill_rect(wu0, z0, wu1, z1, style.WINDOW_GLYPH)
            canvas.stroke_polyline([(wu0, z0), (wu1, z0), (wu1, z1), (wu0, z1)], style.WINDOW_FRAME, closed=True)
            canvas.stroke_segment(((wu0 + wu1) / 2, z0), ((wu0 + wu1) / 2, z1), style.WINDOW_FRAME)
            _label(canvas, window.id, (wu0, z1), resolution)
        for obj in _wall_mounted_on(env, wall):
            ou0, ou1 = _projected_extent(obj.footprint, right)
            z0 = obj.position[2]
            z1 = z0 + env.assets.get(obj.asset_id, obj.id).dimensions.height
            canvas.fill_rect(ou0, z0, ou1, z1, env.assets.get(obj.asset_id, obj.id).dominant_rgba)
            _label(canvas, obj.id, (ou0, z1), resolution)
        out[wid] = canvas.image(f"wall:{wid}")
    return out


# -- materials and assets ------------------------------------------------------------


def materials_in_scene(env: SceneEnv) -> list[str]:
    used: list[str] = []
    for name in [r.floor_material for r in env.scene.rooms] + [w.material for w in env.scene.walls]:
        if name not in used:
            used.append(name)
    return used


def get_material_image(env: SceneEnv, material_names: Iterable[str]) -> dict[str, ImageBuffer]:
    """256x256 swatch per material; only materials used by a wall or floor."""
    used = set(materials_in_scene(env))
    out: dict[str, ImageBuffer] = {}
    for name in material_names:
        if name not in env.materials:
            raise UnknownMaterialError(name)
        if name not in used:
            raise MaterialNotInSceneError(name)
        tex = _texture(env, name)
        size = style.SWATCH_SIZE
        arr = solid(size, size, env.materials[name].rgba) if tex is None else _tiled(tex, size, size)
        out[name] = ImageBuffer.from_array(arr, f"material:{name}")
    return out


MULTIVIEW_NAMES = ("front", "back", "left", "right")


def get_multiview_rendered_object(
    env: SceneEnv, object_ids: Iterable[str], resolution: int = DEFAULT_RESOLUTION
) -> dict[str, list[ImageBuffer]]:
    """Front/back/left/right appearance of each object's asset.

    Registry thumbnails are used verbatim when present; otherwise each view is
    a flat box in the asset's dominant color. All four synthesized views share
    one scale so relative proportions survive.
    """
    out: dict[str, list[ImageBuffer]] = {}
    for oid in object_ids:
        obj = resolve(env.scene, oid, ComponentKind.OBJECT)
        if obj.asset_id not in env.assets:
            raise UnknownAssetError(obj.asset_id, oid)
        asset = env.assets.get(obj.asset_id, oid)
        if asset.thumbnail_paths:
            base = env.assets.base_dir or env.base_dir
            out[oid] = [
                ImageBuffer.load(base / p if base is not None else p, f"{oid}:{name}")
                for name, p in zip(MULTIVIEW_NAMES, asset.thumbnail_paths)
            ]
            continue
        d = asset.dimensions
        scale = 0.8 * resolution / max(d.width, d.depth, d.height)
        views = []
        for name in MULTIVIEW_NAMES:
            across = d.width if name in ("front", "back") else d.depth
            bw, bh = int(round(across * scale)), int(round(d.height * scale))
            arr = solid(resolution, resolution, style.BACKGROUND)
            c0, r0 = (resolution - bw) // 2, (resolution - bh) // 2
            arr[r0 : r0 + bh, c0 : c0 + bw] = asset.dominant_rgba
            burn_text(arr, 1, 1, name, style.label_scale(resolution))
            views.append(ImageBuffer.from_array(arr, f"{oid}:{name}"))
        out[oid] = views
    return out


# -- spatial relations ------------------------------------------------------------------


def relation_key(members: Sequence[str]) -> str:
    return ",".join(members)


def get_spatial_relation(
    env: SceneEnv, id_tuples: Iterable[Sequence[str]], resolution: int = DEFAULT_RESOLUTION
) -> dict[tuple[str, ...], ImageBuffer]:
    """Plan view isolating each group of components.

    Group members are drawn at full strength with id labels, room outlines at
    30% strength for orientation, and nothing else.
    """
    out: dict[tuple[str, ...], ImageBuffer] = {}
    for members in id_tuples:
        members = tuple(members)
        entities = [resolve(env.scene, m) for m in members]
        pts = [p for e in entities for p in _entity_points(env, e)]
        center, half = _framed(pts, style.RELATION_MARGIN, min_half=0.5)
        canvas = Canvas(Viewport.square(center, half, resolution))
        for room in env.scene.rooms:
            canvas.stroke_polyline(
                room.polygon, style.ROOM_OUTLINE, style.stroke_px(resolution), closed=True, opacity=style.DIM_OPACITY
            )
        for e in entities:
            if isinstance(e, SceneObject):
                _draw_object(canvas, env, e)
            elif isinstance(e, Wall):
                _draw_wall(canvas, e, resolution)
            elif isinstance(e, Door):
                _draw_door(canvas, env, e, resolution)
            elif isinstance(e, Window):
                _draw_window(canvas, env, e, resolution)
            elif isinstance(e, Room):
                canvas.stroke_polyline(e.polygon, style.ROOM_OUTLINE, style.stroke_px(resolution), closed=True)
        for e in entities:
            p = _entity_points(env, e)
            x0, _, _, y1 = geometry.bbox(p)
            _label(canvas, e.id, (x0, y1), resolution)
        out[members] = canvas.image(f"relation:{relation_key(members)}")
    return out
