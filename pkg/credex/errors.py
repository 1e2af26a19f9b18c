# credex/errors.py
"""
Exception hierarchy. Every error carries a human ``detail`` plus the HTTP
status used by the service and the exit code used by the CLI
(2 = bad input/usage, 3 = numerical/algorithmic failure).
"""


class CredexError(Exception):
    status_code = 400
    exit_code = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InputError(CredexError):
    status_code = 422


class NumericalError(CredexError):
    status_code = 422
    exit_code = 3


# ---------- belief-core ----------
class BadFrame(InputError):
    pass


class NonNormalized(InputError):
    pass


class EmptySetMass(InputError):
    pass


class BadSubset(InputError):
    pass


class FrameMismatch(InputError):
    pass


class EmptySubset(InputError):
    pass


# ---------- credal-partition ----------
class InvalidIndex(InputError):
    pass


class EmptyFocalSet(InputError):
    pass


class NonNormalizedRow(InputError):
    pass


class SchemaViolation(InputError):
    pass


class MissingCentroid(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class UnsupportedDimension(InputError):
    pass


class UtilityAxiomViolation(InputError):
    pass


class InstanceTooLarge(InputError):
    pass


# ---------- algorithms ----------
class DegenerateInit(NumericalError):
    pass


class NonMonotoneObjective(NumericalError):
    pass


class IndistinguishableCentroids(NumericalError):
    pass


class ZeroResidentCentroids(NumericalError):
    pass
