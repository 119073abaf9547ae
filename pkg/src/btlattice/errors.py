"""Named error types shared by every module.

Each error carries a stable ``code`` (its class name) and an optional
``location`` describing where in the input the problem was found.  The CLI
maps every subclass of :class:`DomainError` to exit status 2.
"""


class DomainError(Exception):
    code = "DomainError"

    def __init__(self, message="", location=None, **details):
        super().__init__(message)
        self.message = message
        self.location = location
        self.details = details

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        cls.code = cls.__name__

    def to_json(self):
        out = {"error": self.code, "message": self.message}
        if self.location is not None:
            out["location"] = self.location
        if self.details:
            out["details"] = {k: _plain(v) for k, v in self.details.items()}
        return out


def _plain(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return str(v)


class NonUnit(DomainError):
    pass


class PrecisionExhausted(DomainError):
    pass


class ZeroAtPrecision(DomainError):
    pass


class CharPolyDoesNotSplit(DomainError):
    pass


class NotNested(DomainError):
    pass


class NotNormalized(DomainError):
    pass


class FlagNotAdmissible(DomainError):
    pass


class CombinatorialBlowup(DomainError):
    pass


class SignatureMismatch(DomainError):
    pass


class NotTrivialising(DomainError):
    pass


class NotFactorable(DomainError):
    pass


class DeterminantMismatch(DomainError):
    pass


class ResonantResidue(DomainError):
    pass


class FlagNotStable(DomainError):
    pass


class SubspaceNotStable(DomainError):
    pass


class NotLogarithmicAtInfinity(DomainError):
    pass


class NotDiagonalizable(DomainError):
    pass


class NotFound(DomainError):
    pass


class CertificateInconsistent(DomainError):
    pass


class BudgetExceeded(DomainError):
    def __init__(self, message="", partial=None, **kw):
        super().__init__(message, **kw)
        self.partial = partial


class SchemaError(Exception):
    """Malformed input payload (CLI exit status 3)."""
