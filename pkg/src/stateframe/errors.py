"""Typed exceptions raised across the package.

Input-file problems carry a (line, column) position so callers can point
at the offending spot; engine-level problems carry whatever identifiers
make the failure reproducible (item codes, state names, rule locations).
"""

from __future__ import annotations


class StateFrameError(Exception):
    """Base class for every error this package raises on purpose."""


class PositionedError(StateFrameError):
    """An error tied to a location in an input file."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ParseError(PositionedError):
    """Malformed input text (wrong column count, bad token, bad value)."""


class DuplicateKey(PositionedError):
    """A uniqueness key appeared twice within one export."""


class UnknownDatumKind(PositionedError):
    """A datum name that is neither built in nor a legal custom name."""


class DanglingParent(PositionedError):
    """An item row names a parent item code that the export never defines."""

    def __init__(self, item_code: str, parent: str, line: int, column: int = 1):
        super().__init__(
            f"item '{item_code}' names unknown parent '{parent}'", line, column
        )
        self.item_code = item_code
        self.parent = parent


class CycleDetected(PositionedError):
    """Filiation edges loop back on themselves."""

    def __init__(self, path: tuple[str, ...], line: int, column: int = 1):
        super().__init__(f"filiation cycle: {' -> '.join(path)}", line, column)
        self.path = path


class ArityError(PositionedError):
    """A link rule has the wrong number of source states for its transform."""


class TransformTypeError(PositionedError):
    """A transform was declared for a datum kind it cannot operate on."""


class DuplicateTarget(PositionedError):
    """Two link rules write the same production state for one datum."""


class UnknownUnit(StateFrameError):
    """A raw unit outside the accepted vocabulary."""


class ValueUnitMismatch(StateFrameError):
    """A raw unit that is legal in general but wrong for the datum kind."""


class MixedVariants(StateFrameError):
    """A transform received inputs of more than one value variant."""


class UnsupportedVariant(StateFrameError):
    """A transform received a value variant it is not defined for."""


class EmptyInput(StateFrameError):
    """A non-constant transform received no inputs."""


class ConflictingRecord(StateFrameError):
    """Two registration records give different values for one state+datum."""


class MissingSourceValue(StateFrameError):
    """A link rule reads a regulatory state that carries no value."""

    def __init__(self, rule: object, state: str):
        super().__init__(f"rule sources state '{state}' which carries no value")
        self.rule = rule
        self.state = state


class FrameMismatch(StateFrameError):
    """Two frames that must describe the same (product, datum) do not."""


class SharedFinalNode(StateFrameError):
    """A final item code is reachable from another product's final."""

    def __init__(self, item_code: str):
        super().__init__(f"final item '{item_code}' is shared with another product")
        self.item_code = item_code


class UnknownItemCode(StateFrameError):
    """A queried item code does not exist in the graph."""

    def __init__(self, item_code: str):
        super().__init__(f"unknown item code '{item_code}'")
        self.item_code = item_code


class PipelineError(StateFrameError):
    """Inconsistent inputs discovered while wiring the validation run."""
