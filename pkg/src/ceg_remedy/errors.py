"""Exception hierarchy shared across the package.

Every error raised by the library derives from :class:`CegRemedyError` so
callers (and the CLI) can catch one base class and still discriminate on
type for machine-readable reporting.
"""


class CegRemedyError(Exception):
    """Base class for all library errors."""

    #: short machine-readable code, overridden per subclass
    code = "error"

    def payload(self) -> dict:
        """Machine-readable description used by the CLI's --json mode."""
        return {"error": self.code, "message": str(self)}


class InconsistentMerge(CegRemedyError):
    code = "inconsistent-merge"


class PathExplosion(CegRemedyError):
    code = "path-explosion"


class InvalidPath(CegRemedyError):
    code = "invalid-path"


class ZeroConditioningSet(CegRemedyError):
    code = "zero-conditioning-set"


class ZeroDenominator(CegRemedyError):
    code = "zero-denominator"


class UnmappedEvent(CegRemedyError):
    code = "unmapped-event"

    def __init__(self, message: str, events=()):
        super().__init__(message)
        self.events = tuple(events)

    def payload(self) -> dict:
        out = super().payload()
        out["events"] = [list(e) if isinstance(e, tuple) else e for e in self.events]
        return out


class ConflictingConstraints(CegRemedyError):
    code = "conflicting-constraints"


class ScoreFailure(CegRemedyError):
    code = "score-failure"


class OrphanVariable(CegRemedyError):
    code = "orphan-variable"


class InconsistentAssignment(CegRemedyError):
    code = "inconsistent-assignment"


class UnknownVariable(CegRemedyError):
    code = "unknown-variable"


class AmbiguousPath(CegRemedyError):
    """Raised by the latent-path map when several paths match.

    Carries the candidate paths and their normalised prior masses so a
    caller may resolve the tie explicitly (never silently).
    """

    code = "ambiguous-path"

    def __init__(self, message: str, candidates=()):
        super().__init__(message)
        #: list of (path, weight) pairs, weights normalised over candidates
        self.candidates = list(candidates)

    def payload(self) -> dict:
        out = super().payload()
        out["candidates"] = [
            {"path": p.key(), "weight": w} for p, w in self.candidates
        ]
        return out


class NoMatchingEdge(CegRemedyError):
    code = "no-matching-edge"


class MissingTable(CegRemedyError):
    code = "missing-table"


class MisalignedIndicator(CegRemedyError):
    code = "misaligned-indicator"


class WeightsNotNormalized(CegRemedyError):
    code = "weights-not-normalized"


class InvalidPartition(CegRemedyError):
    code = "invalid-partition"


class NotIdentifiable(CegRemedyError):
    code = "not-identifiable"

    def __init__(self, message: str, condition: str = ""):
        super().__init__(message)
        #: name of the failing criterion condition
        self.condition = condition

    def payload(self) -> dict:
        out = super().payload()
        out["condition"] = self.condition
        return out


class BadWeights(CegRemedyError):
    code = "bad-weights"


class SchemaError(CegRemedyError):
    """Bundle validation failure with a JSON-pointer-style location."""

    code = "schema-error"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer

    def __str__(self) -> str:
        base = super().__str__()
        return f"{base} (at {self.pointer})" if self.pointer else base

    def payload(self) -> dict:
        out = super().payload()
        out["pointer"] = self.pointer
        return out
