"""Exception hierarchy shared by all modules.

``DomainError`` marks inputs that are mathematically out of scope for the
requested computation (as opposed to I/O or programming errors); the CLI maps
it to exit code 2 with a machine-readable payload.
"""

from __future__ import annotations


class DomainError(Exception):
    """Base class for well-posedness failures of a requested computation."""

    kind = "domain_error"

    def payload(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class NotFullPlaneError(DomainError):
    """The operation needs increments whose cumulant grows in every direction."""

    kind = "not_full_plane"


class NotSymmetricError(DomainError):
    """The operation is only defined for centrally symmetric increment laws."""

    kind = "not_symmetric"


class OutsideDomainError(DomainError):
    """Requested point lies outside the effective domain of the rate function."""

    kind = "outside_domain"


class NoConvergenceError(DomainError):
    """An iterative solve exhausted its iteration budget."""

    kind = "no_convergence"


class NoCandidateError(DomainError):
    """No admissible (level, direction, orientation) triple exists for the target area."""

    kind = "no_candidate"


class OutOfRangeError(DomainError):
    """Target area is at or beyond the attainable range; carries the computed bound."""

    kind = "out_of_range"

    def __init__(self, message: str, a_max: float):
        super().__init__(message)
        self.a_max = float(a_max)

    def payload(self) -> dict:
        out = super().payload()
        out["a_max"] = self.a_max
        return out
