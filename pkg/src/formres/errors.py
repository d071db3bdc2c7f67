"""Exception hierarchy shared by all modules."""


class FormresError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(FormresError):
    """Invalid user input (bad parameters, malformed run configuration)."""


class NumericalError(FormresError):
    """A numerical procedure could not deliver a trustworthy answer."""


class DegenerateSpacetime(ConfigError):
    pass


class RootBracketFailure(NumericalError):
    pass


class SectorMismatch(ConfigError):
    pass


class RankDeficiency(NumericalError):
    pass


class HorizonDomain(ConfigError):
    pass


class AxisSingularity(ConfigError):
    pass


class DegenerateTrapping(ConfigError):
    pass


class CflViolation(ConfigError):
    pass


class NonfiniteField(NumericalError):
    pass


class SeriesDivergence(NumericalError):
    pass


class IndicialCollision(NumericalError):
    pass
