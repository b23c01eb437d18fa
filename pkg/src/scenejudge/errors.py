"""Exception hierarchy shared by every subsystem.

Each error carries a stable ``exit_code`` so the CLI can map failures to
process status without string matching.
"""

from __future__ import annotations


class ScenejudgeError(Exception):
    """Base class for all package errors."""

    exit_code = 1


# -- scene parsing -----------------------------------------------------------


class SceneSyntaxError(ScenejudgeError):
    """The scene document is not well-formed JSON."""

    exit_code = 10


class SchemaError(ScenejudgeError):
    """A field is missing or has the wrong type; ``path`` locates it."""

    exit_code = 11

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SceneReferenceError(ScenejudgeError):
    """An entity references an id that does not exist."""

    exit_code = 12

    def __init__(self, source_id: str, missing_id: str, message: str | None = None):
        self.source_id = source_id
        self.missing_id = missing_id
        super().__init__(message or f"{source_id!r} references unknown id {missing_id!r}")


class GeometryError(ScenejudgeError):
    """A geometric invariant is violated."""

    exit_code = 13


# -- tool lookups ------------------------------------------------------------


class UnknownIdError(ScenejudgeError):
    exit_code = 20

    def __init__(self, component_id: str, message: str | None = None):
        self.component_id = component_id
        super().__init__(message or f"unknown id {component_id!r}")


class UnknownRoomError(UnknownIdError):
    def __init__(self, room_id: str):
        super().__init__(room_id, f"unknown room {room_id!r}")


class KindMismatchError(ScenejudgeError):
    exit_code = 21

    def __init__(self, component_id: str, expected: str, actual: str):
        self.component_id = component_id
        self.expected = expected
        self.actual = actual
        super().__init__(f"{component_id!r} is a {actual}, not a {expected}")


class UnknownMaterialError(ScenejudgeError):
    exit_code = 22

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown material {name!r}")


class MaterialNotInSceneError(ScenejudgeError):
    exit_code = 23

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"material {name!r} is not used by any wall or floor in the scene")


class UnknownAssetError(ScenejudgeError):
    exit_code = 24

    def __init__(self, asset_id: str, owner_id: str | None = None):
        self.asset_id = asset_id
        self.owner_id = owner_id
        where = f" (referenced by {owner_id!r})" if owner_id else ""
        super().__init__(f"unknown asset {asset_id!r}{where}")


class EmptySceneError(ScenejudgeError):
    exit_code = 25


class UnknownToolError(ScenejudgeError):
    exit_code = 26

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown tool {name!r}")


class ToolArgumentError(ScenejudgeError):
    """Arguments do not satisfy a tool's argument schema."""

    exit_code = 27


# -- model gateway -----------------------------------------------------------


class GatewayError(ScenejudgeError):
    """Transport failure after the retry budget is exhausted."""

    exit_code = 30


class ParseError(ScenejudgeError):
    """Every attempt produced an unparseable or rejected response."""

    exit_code = 31


class TemplateError(ScenejudgeError):
    """Unknown template, missing placeholder variable, or image precondition."""

    exit_code = 32


class UnscriptedCallError(GatewayError):
    """The mock backend has no scripted response for a request key."""

    exit_code = 33


class EmptyInputError(ScenejudgeError):
    exit_code = 34


class ChecklistEmptyError(ParseError):
    exit_code = 35


# -- pipeline ----------------------------------------------------------------


class PlanInvalidError(ParseError):
    exit_code = 40


class ArgumentInvalidError(ParseError):
    exit_code = 41


# -- metrics / dataset -------------------------------------------------------


class DegenerateMarginalsError(ScenejudgeError):
    exit_code = 50


class NoMatchedToolsError(ScenejudgeError):
    exit_code = 51


class SizeLimitError(ScenejudgeError):
    exit_code = 52


class LayoutError(ScenejudgeError):
    """A benchmark bundle directory is missing required files."""

    exit_code = 60


class AlignmentError(ScenejudgeError):
    """Two files that must cover the same ids do not."""

    exit_code = 61

    def __init__(self, missing: list[str], message: str):
        self.missing = missing
        super().__init__(f"{message}: {', '.join(missing)}")
