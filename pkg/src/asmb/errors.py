"""Error types shared across the engine.

Every error raised on a documented failure path derives from EngineError so
callers (CLI, session service) can report them uniformly.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all documented engine failures."""

    code = "engine_error"

    def to_json(self) -> dict:
        return {"error": self.code, "detail": str(self)}


class LineError(EngineError):
    """A parse failure attributable to one line of an input file."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


# -- mesh / molecule loading ------------------------------------------------

class MalformedLine(LineError):
    code = "malformed_line"


class IndexOutOfRange(LineError):
    code = "index_out_of_range"


class UnparseableRecord(LineError):
    code = "unparseable_record"


class NoAtoms(EngineError):
    code = "no_atoms"


class EmptyMesh(EngineError):
    code = "empty_mesh"


# -- scene structure ---------------------------------------------------------

class UnknownId(EngineError):
    code = "unknown_id"

    def __init__(self, entity_id):
        super().__init__(f"no entity with id {entity_id}")
        self.entity_id = entity_id


class ConflictingMembership(EngineError):
    code = "conflicting_membership"


class MeshMismatch(EngineError):
    code = "mesh_mismatch"


class ChainInvariantViolated(EngineError):
    code = "chain_invariant_violated"


class TimeOutOfRange(EngineError):
    code = "time_out_of_range"


# -- physics -----------------------------------------------------------------

class NonFiniteState(EngineError):
    code = "non_finite_state"


class DanglingEndpoint(EngineError):
    code = "dangling_endpoint"


class NoTerminusData(EngineError):
    code = "no_terminus_data"


# -- serialization -----------------------------------------------------------

class VersionMismatch(EngineError):
    code = "version_mismatch"


class SchemaViolation(EngineError):
    code = "schema_violation"

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DanglingReference(EngineError):
    code = "dangling_reference"


class RangeError(EngineError):
    code = "range_error"


# -- session service ---------------------------------------------------------

class BindFailure(EngineError):
    code = "bind_failure"


class InvalidCommand(EngineError):
    """A well-formed request that cannot apply to the current document state."""

    code = "invalid_command"
