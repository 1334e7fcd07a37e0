"""Exception hierarchy shared by all netcert modules."""


class NetcertError(Exception):
    """Base class for every error raised by this package."""


class InputError(NetcertError, ValueError):
    """An argument, file or model does not satisfy a documented precondition."""


class SiteError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class NotHermitianError(InputError):
    pass


class NormalizationError(InputError):
    pass


class AlphabetError(InputError):
    pass


class MissingInputsError(InputError):
    pass


class InvalidWeightsError(InputError):
    pass


class SourceIndependenceError(InputError):
    pass


class RankDeficientFrameError(InputError):
    pass


class SchemaError(InputError):
    pass


class NotPositiveError(InputError):
    pass


class NumericalError(NetcertError, ArithmeticError):
    """A computed object violates an invariant that exact arithmetic guarantees."""


class NegativeProbabilityError(NumericalError):
    pass


class KrausCompletenessError(NumericalError):
    pass


class ConventionError(NumericalError):
    pass
