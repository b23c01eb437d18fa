"""Prompt templates for every model-facing step.

Bodies use ``$name`` placeholders. Every template asks for exactly one
fenced ```json block; prose outside the block is ignored by the parser.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Mapping

from scenejudge.errors import TemplateError

ROLES = (
    "constraint_identification",
    "constraint_classification",
    "planning",
    "argument_selector_1",
    "argument_selector_2",
    "argument_selector_3",
    "argument_selector_4",
    "argument_selector_5",
    "validation_FL",
    "validation_MS",
    "validation_OS",
    "validation_OP",
    "property_description",
    "property_verification_stage1",
    "property_verification_stage2",
    "object_match",
    "vlm_judge_baseline",
)

SYSTEM_PROMPT = (
    "You are a meticulous evaluator of 3D indoor scenes. Think step by step if useful, "
    "then give your final answer as a single fenced ```json block exactly matching the requested keys."
)

REPAIR_SUFFIX = (
    "Your previous answer could not be used: $problem\n"
    "Answer again with a single fenced ```json block containing exactly the requested keys."
)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    role: str
    body: str
    # True: images required; False: images forbidden; None: either
    expects_images: bool | None
    required_keys: tuple[str, ...]

    def placeholders(self) -> set[str]:
        names = set()
        for m in string.Template.pattern.finditer(self.body):
            name = m.group("named") or m.group("braced")
            if name:
                names.add(name)
        return names

    def render(self, variables: Mapping[str, str]) -> str:
        missing = self.placeholders() - set(variables)
        if missing:
            raise TemplateError(f"template {self.id!r} is missing variables: {sorted(missing)}")
        return string.Template(self.body).substitute(variables)


_CONSTRAINT_TYPES = """\
- floor_layout: the spatial layout of rooms, walls, doors and windows.
- material_selection: the visual appearance of floors and walls.
- object_selection: the appearance of objects, including doors and windows.
- object_placement: where objects are placed and how they are rotated."""

_ARG_COMMON = """\
Scene instruction:
$instruction

Constraint under evaluation:
$constraint

Tool execution plan:
$plan

Planning rationale:
$rationale

Tool to call next: $tool
$tool_description
Argument schema (JSON): $argument_schema

Outputs of the tools this step depends on:
$prior_outputs

Explanations from earlier constraint evaluations:
$prior_explanations
"""

_VALIDATION = """\
You are checking one constraint of a scene instruction against evidence gathered by tools.
Focus: $focus

Scene instruction:
$instruction

Constraint:
$constraint

Tool outputs (attached images are referenced by their labels):
$tool_outputs

Explanations from earlier constraint evaluations:
$prior_explanations

Decide whether the scene satisfies the constraint. Cite component ids in the explanation.
Return {"valid": true|false, "explanation": "..."}.
"""

_FOCUS = {
    "validation_FL": "floor layout: rooms, walls, doors and windows, their adjacency, counts and positions.",
    "validation_MS": "material selection: colors, patterns and textures of floors and walls.",
    "validation_OS": "object selection: which objects exist and how they look (type, color, shape, material).",
    "validation_OP": "object placement: positions, distances, orientations and relations between components.",
}


def _t(role: str, body: str, expects_images: bool | None, *keys: str) -> PromptTemplate:
    return PromptTemplate(role, role, body, expects_images, keys)


TEMPLATES: dict[str, PromptTemplate] = {}


def _register(t: PromptTemplate) -> None:
    TEMPLATES[t.id] = t


_register(_t(
    "constraint_identification",
    """\
Split the scene instruction into atomic constraints. Each constraint must be a self-contained
sentence: replace pronouns and references such as "it" or "that room" with the full description
of the entity they refer to, and merge several attributes of the same entity into one statement.
Report the character span of the instruction each constraint came from, or null.

Instruction:
$instruction

Return {"constraints": [{"text": "...", "source_span": [start, end] | null}, ...]}.
""",
    False,
    "constraints",
))

_register(_t(
    "constraint_classification",
    "Classify the constraint into exactly one type:\n"
    + _CONSTRAINT_TYPES
    + """

Constraint:
$constraint

Return {"constraint_type": "<one of the four names>"}.
""",
    False,
    "constraint_type",
))

_register(_t(
    "planning",
    """\
Plan which tools to run to check the constraint. Nodes form a directed acyclic graph; a node may
depend on outputs of earlier nodes and independent nodes run in parallel. Reuse facts already
established in earlier explanations instead of re-running tools for them.

Scene instruction:
$instruction

Constraint ($constraint_type):
$constraint

Allowed tools:
$tools

Explanations from earlier constraint evaluations:
$prior_explanations

Return {"rationale": "...", "nodes": [{"node_id": "n1", "tool": "<tool name>", "depends_on": []}, ...]}.
""",
    False,
    "rationale",
    "nodes",
))

_ARG_FAMILIES = {
    "argument_selector_1": "The tool lists component ids per room. Choose the rooms whose components are needed.",
    "argument_selector_2": "The tool returns detailed records. Choose exactly the component ids relevant to the constraint.",
    "argument_selector_3": "The tool renders rooms, walls or materials. Choose the room, walls or material names to render.",
    "argument_selector_4": "The tool works on individual objects or materials. Choose the subjects to inspect.",
    "argument_selector_5": "The tool isolates groups of components. Choose the groups whose spatial relation must be seen.",
}
for _role, _hint in _ARG_FAMILIES.items():
    _register(_t(
        _role,
        _hint + "\nOnly use ids that appear in the dependency outputs or earlier explanations.\n\n" + _ARG_COMMON
        + '\nReturn {"arguments": {<argument name>: <value>, ...}}.\n',
        False,
        "arguments",
    ))

for _role, _focus in _FOCUS.items():
    _register(_t(_role, _VALIDATION.replace("$focus", _focus), None, "valid", "explanation"))

_register(_t(
    "property_description",
    """\
Describe the subject $subject_id shown in the attached images. Report at least its color, shape
and material, plus any other salient attributes.

Additional metadata:
$metadata

Return {"attributes": {"color": "...", "shape": "...", "material": "...", ...}, "reasoning": "..."}.
""",
    True,
    "attributes",
    "reasoning",
))

_register(_t(
    "property_verification_stage1",
    """\
List the visual attributes of $subject_id that must be checked to verify this description
(for example color, pattern, texture, material, shape). Use short lowercase attribute names.

Description:
$instruction_fragment

Return {"attributes": ["...", ...]}.
""",
    False,
    "attributes",
))

_register(_t(
    "property_verification_stage2",
    """\
Look at the attached images of $subject_id and report the value of each listed attribute.
Report exactly these attributes and no others: $checklist

Description being verified:
$instruction_fragment

Return {"attributes": {<attribute>: "<observed value>", ...}, "reasoning": "..."}.
""",
    True,
    "attributes",
))

_register(_t(
    "object_match",
    """\
The attached images show object $object_id from several sides. What type of object is it?
Answer with a short common noun phrase such as "armchair" or "floor lamp".

Return {"type_label": "..."}.
""",
    True,
    "type_label",
))

_register(_t(
    "vlm_judge_baseline",
    """\
The attached images show a 3D indoor scene from four viewpoints.

Scene instruction:
$instruction

Constraint:
$constraint

Does the scene satisfy the constraint? (sample $sample)
Return {"valid": true|false, "explanation": "..."}.
""",
    True,
    "valid",
    "explanation",
))

assert set(TEMPLATES) == set(ROLES), set(ROLES) ^ set(TEMPLATES)


def get_template(template_id: str) -> PromptTemplate:
    try:
        return TEMPLATES[template_id]
    except KeyError:
        raise TemplateError(f"unknown template {template_id!r}") from None
