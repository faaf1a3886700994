"""Exception hierarchy shared by the simulator, transformer and CLI."""


class QecwError(Exception):
    """Base class for every error raised by this package."""

    kind = "QecwError"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class SimulationError(QecwError):
    kind = "SimulationError"


class UnallocatedQubit(SimulationError):
    kind = "UnallocatedQubit"


class AncillaNotReturned(SimulationError):
    kind = "AncillaNotReturned"


class UnboundName(SimulationError):
    kind = "UnboundName"


class StochasticNoisePresent(SimulationError):
    kind = "StochasticNoisePresent"


class MismatchedRegisters(SimulationError):
    kind = "MismatchedRegisters"


class ShadowedBinder(QecwError):
    kind = "ShadowedBinder"


class NotUnitary(QecwError):
    kind = "NotUnitary"


class UnknownCode(QecwError):
    kind = "UnknownCode"


class CodeMismatch(QecwError):
    kind = "CodeMismatch"


class OverlappingTuples(QecwError):
    kind = "OverlappingTuples"


class UnknownQubit(QecwError):
    kind = "UnknownQubit"


class BadSite(QecwError):
    kind = "BadSite"


class ValidationFailed(QecwError):
    kind = "ValidationFailed"

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations) or "invalid program")

    def to_dict(self):
        d = super().to_dict()
        d["violations"] = [v.to_dict() for v in self.report.violations]
        return d


class ProgramSyntaxError(QecwError):
    """Malformed program document; ``location`` names the offending field."""

    kind = "SyntaxError"

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)

    def to_dict(self):
        d = super().to_dict()
        d["location"] = self.location
        return d


class UnsupportedVersion(ProgramSyntaxError):
    kind = "UnsupportedVersion"
