"""Exception hierarchy shared by all modules."""


class NonholoError(Exception):
    """Base class for every error raised by this package."""


class IllConditioned(NonholoError, ArithmeticError):
    pass


class SingularPairing(NonholoError):
    """The complement matrix ``A`` does not pair invertibly with ``Gc``."""


class NotAnnihilator(NonholoError):
    """The supplied ``Q`` is not annihilated by ``Gc^T``."""


class DimensionTooSmall(NonholoError, ValueError):
    pass


class ChartError(NonholoError):
    """State left the domain on which a coordinate chart is defined."""


class NearSingularChart(ChartError):
    """``f_w`` requested too close to the surface ``z1 = 0``."""


class ChartViolation(ChartError):
    pass


class ChartGuard(ChartError):
    """Controller evaluated with ``|w1|`` at or below its guard."""


class DomainViolation(ChartError):
    """Car configuration outside ``|theta|, |phi| < pi/2``."""


class SingularInput(NonholoError):
    pass


class InvalidStart(NonholoError, ValueError):
    pass


class NumericalFailure(NonholoError):
    pass


class ConfigError(NonholoError, ValueError):
    pass
