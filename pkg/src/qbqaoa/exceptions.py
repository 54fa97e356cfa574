class QBQAOAError(ValueError):
    """Base class for errors raised by this package."""


class MalformedData(QBQAOAError):
    pass


class MissingValue(MalformedData):
    pass


class SingularCovariance(QBQAOAError):
    pass


class InfeasibleProblem(QBQAOAError):
    pass


class CapExceeded(QBQAOAError):
    """An enumeration or simulation would exceed its configured size cap."""


class NormDrift(QBQAOAError):
    """State norm drifted beyond tolerance during evolution."""


class ConfigError(QBQAOAError):
    pass
