"""The 21 named tools: specs, argument checking, and invocation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from scenejudge import multimodal, render
from scenejudge.errors import ScenejudgeError, ToolArgumentError, UnknownIdError, UnknownToolError
from scenejudge.gateway import Gateway
from scenejudge.raster import ImageBuffer
from scenejudge.scene import SceneEnv
from scenejudge.textual import ComponentKind, get_component_info, list_components


class ToolCategory(str, Enum):
    ENVIRONMENT_INTERACTION = "environment_interaction"
    TEXTUAL_REASONING = "textual_reasoning"
    MULTIMODAL_REASONING = "multimodal_reasoning"


class OutputKind(str, Enum):
    TEXT_RECORD = "text_record"
    IMAGE_SET = "image_set"


@dataclass(frozen=True)
class ArgSpec:
    name: str
    type: str  # "str" | "str_list" | "id_groups"
    required: bool = True
    # what ids must resolve to: a ComponentKind value, "material", "subject", "component", or None
    refers_to: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "type": self.type, "required": self.required, "refers_to": self.refers_to}


@dataclass
class ToolContext:
    env: SceneEnv
    gateway: Gateway | None = None
    resolution: int = render.DEFAULT_RESOLUTION
    dependency_outputs: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    category: ToolCategory
    argument_schema: tuple[ArgSpec, ...]
    output_kind: OutputKind
    selector_family: int
    description: str
    run: Callable[[ToolContext, dict[str, Any]], Any] = field(repr=False, compare=False)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "category": self.category.value,
            "arguments": [a.to_json() for a in self.argument_schema],
            "output_kind": self.output_kind.value,
            "description": self.description,
        }


# -- bindings ------------------------------------------------------------------------

ImageSet = dict[str, list[ImageBuffer]]


def _list_tool(kind: ComponentKind):
    def run(ctx: ToolContext, args: dict[str, Any]):
        if kind is ComponentKind.ROOM:
            return {"room_ids": list_components(ctx.env.scene, kind)}
        return list_components(ctx.env.scene, kind, args.get("room_ids"))

    return run


def _info_tool(kind: ComponentKind):
    def run(ctx: ToolContext, args: dict[str, Any]):
        return get_component_info(ctx.env.scene, kind, args["ids"])

    return run


def _images_from_dependencies(ctx: ToolContext, subject: str) -> list[ImageBuffer]:
    for output in ctx.dependency_outputs.values():
        payload = getattr(output, "payload", output)
        if isinstance(payload, dict) and subject in payload:
            views = payload[subject]
            if isinstance(views, list) and views and all(isinstance(v, ImageBuffer) for v in views):
                return list(views)
    return []


def subject_images(ctx: ToolContext, subject: str) -> list[ImageBuffer]:
    """Images of an object or material: upstream outputs first, else a fresh render."""
    views = _images_from_dependencies(ctx, subject)
    if views:
        return views
    hit = ctx.env.scene.find(subject)
    if hit is not None and hit[0] == "object":
        return render.get_multiview_rendered_object(ctx.env, [subject], ctx.resolution)[subject]
    if subject in ctx.env.materials:
        return [render.get_material_image(ctx.env, [subject])[subject]]
    raise UnknownIdError(subject)


def _need_gateway(ctx: ToolContext) -> Gateway:
    if ctx.gateway is None:
        raise ScenejudgeError("multimodal tools need a model gateway")
    return ctx.gateway


def _object_match(ctx: ToolContext, args: dict[str, Any]):
    images = {oid: subject_images(ctx, oid) for oid in args["object_ids"]}
    return multimodal.get_object_match(_need_gateway(ctx), images)


def _property_description(ctx: ToolContext, args: dict[str, Any]):
    images = {sid: subject_images(ctx, sid) for sid in args["subject_ids"]}
    reports = multimodal.get_property_description(_need_gateway(ctx), args["subject_ids"], images, args.get("metadata"))
    return {sid: r.to_json() for sid, r in reports.items()}


def _property_verification(ctx: ToolContext, args: dict[str, Any]):
    sid = args["subject_id"]
    report = multimodal.get_property_verification(
        _need_gateway(ctx), sid, subject_images(ctx, sid), args["instruction_fragment"]
    )
    return {sid: report.to_json()}


def _wrap_single(key_fn, fn):
    def run(ctx: ToolContext, args: dict[str, Any]) -> ImageSet:
        img = fn(ctx, args)
        return {key_fn(args): [img]}

    return run


def _wrap_map(fn):
    def run(ctx: ToolContext, args: dict[str, Any]) -> ImageSet:
        return {k: (v if isinstance(v, list) else [v]) for k, v in fn(ctx, args).items()}

    return run


_E, _T, _M = ToolCategory.ENVIRONMENT_INTERACTION, ToolCategory.TEXTUAL_REASONING, ToolCategory.MULTIMODAL_REASONING
_TEXT, _IMG = OutputKind.TEXT_RECORD, OutputKind.IMAGE_SET


def _build() -> dict[str, ToolSpec]:
    specs: list[ToolSpec] = []
    for kind in ComponentKind:
        plural = f"{kind.value}s"
        if kind is ComponentKind.ROOM:
            list_args: tuple[ArgSpec, ...] = ()
            list_desc = "List every room id in the scene."
        else:
            list_args = (ArgSpec("room_ids", "str_list", required=False, refers_to="room"),)
            list_desc = f"Map each given room id to the ids of its {plural}."
        specs.append(ToolSpec(f"get_{kind.value}_list", _T, list_args, _TEXT, 1, list_desc, _list_tool(kind)))
        specs.append(
            ToolSpec(
                f"get_{kind.value}_info",
                _T,
                (ArgSpec("ids", "str_list", refers_to=kind.value),),
                _TEXT,
                2,
                f"Full structured record for each given {kind.value} id.",
                _info_tool(kind),
            )
        )
    specs += [
        ToolSpec(
            "get_topdown_scene", _E, (), _IMG, 3, "Top-down image of the whole scene.",
            _wrap_single(lambda a: "scene", lambda c, a: render.get_topdown_scene(c.env, c.resolution)),
        ),
        ToolSpec(
            "get_topdown_room", _E, (ArgSpec("room_id", "str", refers_to="room"),), _IMG, 3,
            "Top-down image framed on one room.",
            _wrap_single(lambda a: a["room_id"], lambda c, a: render.get_topdown_room(c.env, a["room_id"], c.resolution)),
        ),
        ToolSpec(
            "get_wall_scene", _E, (ArgSpec("wall_ids", "str_list", refers_to="wall"),), _IMG, 3,
            "Unobstructed elevation image of each wall with its doors, windows and wall-mounted objects.",
            _wrap_map(lambda c, a: render.get_wall_scene(c.env, a["wall_ids"], c.resolution)),
        ),
        ToolSpec(
            "get_material_image", _E, (ArgSpec("material_names", "str_list", refers_to="material"),), _IMG, 3,
            "Swatch image of each wall or floor material used in the scene.",
            _wrap_map(lambda c, a: render.get_material_image(c.env, a["material_names"])),
        ),
        ToolSpec(
            "get_frontview_object", _E, (ArgSpec("object_ids", "str_list", refers_to="object"),), _IMG, 4,
            "Front elevation of each object, centered, with nearby objects for context.",
            _wrap_map(lambda c, a: render.get_frontview_object(c.env, a["object_ids"], c.resolution)),
        ),
        ToolSpec(
            "get_topdown_object", _E, (ArgSpec("object_ids", "str_list", refers_to="object"),), _IMG, 4,
            "Two overhead crops per object at near and far distances.",
            _wrap_map(lambda c, a: render.get_topdown_object(c.env, a["object_ids"], c.resolution)),
        ),
        ToolSpec(
            "get_multiview_rendered_object", _E, (ArgSpec("object_ids", "str_list", refers_to="object"),), _IMG, 4,
            "Front, back, left and right appearance of each object's asset.",
            _wrap_map(lambda c, a: render.get_multiview_rendered_object(c.env, a["object_ids"], c.resolution)),
        ),
        ToolSpec(
            "get_spatial_relation", _E, (ArgSpec("id_tuples", "id_groups", refers_to="component"),), _IMG, 5,
            "Top-down image isolating each group of components (objects, doors, windows, walls).",
            _wrap_map(
                lambda c, a: {
                    render.relation_key(k): v
                    for k, v in render.get_spatial_relation(c.env, a["id_tuples"], c.resolution).items()
                }
            ),
        ),
        ToolSpec(
            "get_object_match", _M, (ArgSpec("object_ids", "str_list", refers_to="object"),), _TEXT, 4,
            "Object type label for each object id, read from its rendered views.",
            _object_match,
        ),
        ToolSpec(
            "get_property_description", _M,
            (ArgSpec("subject_ids", "str_list", refers_to="subject"), ArgSpec("metadata", "str", required=False)),
            _TEXT, 4,
            "Color, shape and material of each object or material, with reasoning.",
            _property_description,
        ),
        ToolSpec(
            "get_property_verification", _M,
            (ArgSpec("subject_id", "str", refers_to="subject"), ArgSpec("instruction_fragment", "str")),
            _TEXT, 4,
            "Check the attributes a description mentions against the subject's images.",
            _property_verification,
        ),
    ]
    return {s.name: s for s in specs}


_REGISTRY = _build()


def tool_registry() -> list[ToolSpec]:
    return list(_REGISTRY.values())


def lookup(name: str) -> ToolSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownToolError(name) from None


# -- argument checking -------------------------------------------------------------


def _check_ref(env: SceneEnv, value: str, refers_to: str | None, where: str) -> None:
    if refers_to is None:
        return
    if refers_to == "material":
        if value not in env.materials:
            raise ToolArgumentError(f"{where}: unknown material {value!r}")
        return
    if refers_to == "subject":
        hit = env.scene.find(value)
        if (hit is None or hit[0] != "object") and value not in env.materials:
            raise ToolArgumentError(f"{where}: {value!r} is neither an object id nor a material")
        return
    hit = env.scene.find(value)
    if hit is None:
        raise ToolArgumentError(f"{where}: unknown id {value!r}")
    if refers_to != "component" and hit[0] != refers_to:
        raise ToolArgumentError(f"{where}: {value!r} is a {hit[0]}, expected a {refers_to}")


def validate_arguments(spec: ToolSpec, args: Mapping[str, Any], env: SceneEnv) -> dict[str, Any]:
    """Return a normalized copy of ``args`` or raise :class:`ToolArgumentError`."""
    if not isinstance(args, Mapping):
        raise ToolArgumentError(f"{spec.name}: arguments must be an object")
    known = {a.name for a in spec.argument_schema}
    extra = set(args) - known
    if extra:
        raise ToolArgumentError(f"{spec.name}: unexpected arguments {sorted(extra)}")
    out: dict[str, Any] = {}
    for a in spec.argument_schema:
        where = f"{spec.name}.{a.name}"
        if a.name not in args or args[a.name] is None:
            if a.required:
                raise ToolArgumentError(f"{where}: missing required argument")
            continue
        value = args[a.name]
        if a.type == "str":
            if not isinstance(value, str) or not value:
                raise ToolArgumentError(f"{where}: expected a non-empty string")
            _check_ref(env, value, a.refers_to, where)
            out[a.name] = value
        elif a.type == "str_list":
            if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
                raise ToolArgumentError(f"{where}: expected a non-empty list of strings")
            for v in value:
                _check_ref(env, v, a.refers_to, where)
            out[a.name] = list(dict.fromkeys(value))
        elif a.type == "id_groups":
            if not isinstance(value, list) or not value:
                raise ToolArgumentError(f"{where}: expected a non-empty list of id groups")
            groups = []
            for g in value:
                if not isinstance(g, (list, tuple)) or not g or not all(isinstance(v, str) for v in g):
                    raise ToolArgumentError(f"{where}: each group must be a non-empty list of ids")
                for v in g:
                    _check_ref(env, v, a.refers_to, where)
                groups.append(list(g))
            out[a.name] = groups
        else:  # pragma: no cover - schema typo guard
            raise AssertionError(a.type)
    return out


def invoke_tool(name: str, args: Mapping[str, Any], ctx: ToolContext) -> Any:
    spec = lookup(name)
    return spec.run(ctx, validate_arguments(spec, args, ctx.env))


def argument_ids(spec: ToolSpec, args: Mapping[str, Any]) -> list[tuple[str, str]]:
    """``(value, refers_to)`` for every id-like argument value."""
    out = []
    for a in spec.argument_schema:
        if a.refers_to is None or a.name not in args or args[a.name] is None:
            continue
        value = args[a.name]
        if a.type == "str":
            out.append((value, a.refers_to))
        elif a.type == "str_list":
            out += [(v, a.refers_to) for v in value]
        else:
            out += [(v, a.refers_to) for g in value for v in g]
    return out


def args_hash(arguments: Mapping[str, Any]) -> str:
    return hashlib.sha256(json.dumps(arguments, sort_keys=True).encode("utf-8")).hexdigest()[:12]


def render_filenames(tool: str, arguments: Mapping[str, Any], count: int) -> list[str]:
    """``<tool>__<args-hash>.png``, with an index suffix when a call yields several images."""
    stem = f"{tool}__{args_hash(arguments)}"
    if count == 1:
        return [f"{stem}.png"]
    return [f"{stem}__{i}.png" for i in range(count)]


# -- allow-list ------------------------------------------------------------------------


def load_allowlist(path: str | Path | None = None) -> dict[str, frozenset[str]]:
    """Tool names permitted per constraint type (the ``always`` set is merged in)."""
    if path is None:
        raw = resources.files("scenejudge").joinpath("data/allowlist.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    data = json.loads(raw)
    always = set(data.get("always", []))
    out = {}
    for ctype in ("floor_layout", "material_selection", "object_selection", "object_placement"):
        names = always | set(data.get(ctype, []))
        unknown = names - set(_REGISTRY)
        if unknown:
            raise UnknownToolError(sorted(unknown)[0])
        out[ctype] = frozenset(names)
    return out


def tool_menu(names: Sequence[str]) -> str:
    """Human-readable list of tools with their argument schemas, for prompts."""
    lines = []
    for name in sorted(names):
        spec = lookup(name)
        args = ", ".join(f"{a.name}: {a.type}{'' if a.required else '?'}" for a in spec.argument_schema)
        lines.append(f"- {name}({args}): {spec.description}")
    return "\n".join(lines)


__all__ = [
    "ArgSpec",
    "OutputKind",
    "ToolCategory",
    "ToolContext",
    "ToolSpec",
    "args_hash",
    "argument_ids",
    "invoke_tool",
    "load_allowlist",
    "lookup",
    "render_filenames",
    "tool_menu",
    "tool_registry",
    "validate_arguments",
]
