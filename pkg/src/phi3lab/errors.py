"""Exception types raised by the laboratory."""


class Phi3LabError(Exception):
    """Base class for all errors raised by phi3lab."""


class NoBracket(Phi3LabError):
    pass


class NonConvergence(Phi3LabError):
    pass


class QuadratureUnstable(Phi3LabError):
    pass


class ZeroCoupling(Phi3LabError, ValueError):
    pass


class OscillationUnderresolved(Phi3LabError):
    pass


class WrongTime(Phi3LabError, ValueError):
    pass


class AliasRisk(Phi3LabError, ValueError):
    pass


class UnderResolved(Phi3LabError, ValueError):
    pass


class HankelUnderflow(Phi3LabError):
    pass


class FactorizationFailure(Phi3LabError):
    pass


class DegenerateGrid(Phi3LabError, ValueError):
    pass


class NotCoercive(Phi3LabError):
    pass


class Overflow(Phi3LabError, OverflowError):
    pass


class ConfigInvalid(Phi3LabError, ValueError):
    pass


class IoFailure(Phi3LabError, OSError):
    pass
