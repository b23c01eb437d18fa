"""Tools that turn rendered images into text through the model gateway.

One gateway call is made per subject so a single exchange never mixes
images of different subjects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from scenejudge.errors import ChecklistEmptyError, EmptyInputError, ParseError
from scenejudge.gateway import ChatRequest, Gateway
from scenejudge.raster import ImageBuffer

REQUIRED_DESCRIPTION_ATTRIBUTES = ("color", "shape", "material")


@dataclass(frozen=True)
class PropertyReport:
    subject_id: str
    attributes: dict[str, str] = field(default_factory=dict)
    reasoning: str = ""

    def to_json(self) -> dict[str, Any]:
        return {"subject_id": self.subject_id, "attributes": dict(self.attributes), "reasoning": self.reasoning}


def _attribute_map(payload: Mapping[str, Any]) -> dict[str, str]:
    attrs = payload.get("attributes")
    if not isinstance(attrs, dict) or not attrs:
        raise ParseError("'attributes' must be a non-empty object")
    return {str(k).strip().lower(): str(v) for k, v in attrs.items()}


def get_object_match(gateway: Gateway, images: Mapping[str, Sequence[ImageBuffer]]) -> dict[str, str]:
    """Type label per object id, from its multiview renders."""
    if not images:
        raise EmptyInputError("get_object_match needs at least one object")
    out: dict[str, str] = {}
    for oid, views in images.items():
        if not views:
            raise EmptyInputError(f"no images for {oid!r}")

        def check(payload: dict[str, Any]) -> str:
            label = str(payload["type_label"]).strip()
            if not label:
                raise ParseError("'type_label' is empty")
            return label

        out[oid] = gateway.chat(ChatRequest("object_match", {"object_id": oid}, tuple(views)), check)
    return out


def get_property_description(
    gateway: Gateway,
    subject_ids: Sequence[str],
    images: Mapping[str, Sequence[ImageBuffer]],
    metadata: str | None = None,
) -> dict[str, PropertyReport]:
    """Color, shape, material (and more) for each subject, with reasoning."""
    if not subject_ids:
        raise EmptyInputError("get_property_description needs at least one subject")
    out: dict[str, PropertyReport] = {}
    for sid in subject_ids:
        views = images.get(sid)
        if not views:
            raise EmptyInputError(f"no images for {sid!r}")

        def check(payload: dict[str, Any], sid=sid) -> PropertyReport:
            attrs = _attribute_map(payload)
            missing = [a for a in REQUIRED_DESCRIPTION_ATTRIBUTES if a not in attrs]
            if missing:
                raise ParseError(f"attributes missing {missing}")
            return PropertyReport(sid, attrs, str(payload.get("reasoning", "")))

        variables = {"subject_id": sid, "metadata": metadata or "(none)"}
        out[sid] = gateway.chat(ChatRequest("property_description", variables, tuple(views)), check)
    return out


def get_property_verification(
    gateway: Gateway, subject_id: str, images: Sequence[ImageBuffer], instruction_fragment: str
) -> PropertyReport:
    """Two-stage check: a text-only call picks the attributes, an image call reads them."""
    if not instruction_fragment or not instruction_fragment.strip():
        raise EmptyInputError("instruction fragment is empty")
    if not images:
        raise EmptyInputError(f"no images for {subject_id!r}")

    def checklist_of(payload: dict[str, Any]) -> list[str]:
        raw = payload["attributes"]
        if not isinstance(raw, list):
            raise ParseError("'attributes' must be a list of names")
        names: list[str] = []
        for a in raw:
            name = str(a).strip().lower()
            if name and name not in names:
                names.append(name)
        return names

    stage1 = {"subject_id": subject_id, "instruction_fragment": instruction_fragment}
    checklist = gateway.chat(ChatRequest("property_verification_stage1", stage1), checklist_of)
    if not checklist:
        raise ChecklistEmptyError(f"no checkable attributes in {instruction_fragment!r}")

    def exact(payload: dict[str, Any]) -> PropertyReport:
        attrs = _attribute_map(payload)
        if set(attrs) != set(checklist):
            raise ParseError(f"reported attributes {sorted(attrs)} differ from checklist {checklist}")
        return PropertyReport(subject_id, {k: attrs[k] for k in checklist}, str(payload.get("reasoning", "")))

    stage2 = {**stage1, "checklist": json.dumps(checklist)}
    return gateway.chat(ChatRequest("property_verification_stage2", stage2, tuple(images)), exact)
