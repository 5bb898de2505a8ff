"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
``InputError`` (bad shapes, bad files, bad configuration) and
``NumericalError`` (the math could not proceed).
"""


class ZSDAError(Exception):
    """Base class for every error raised by this package."""


class InputError(ZSDAError, ValueError):
    pass


class NumericalError(ZSDAError, ArithmeticError):
    pass


class DimensionMismatch(InputError):
    pass


class RankDeficient(InputError):
    pass


class NotOrthonormal(InputError):
    """A loaded basis is too far from orthonormal to be repaired."""


class EmptyTrainingSet(InputError):
    pass


class InsufficientSamples(InputError):
    pass


class ComplementUnavailable(InputError):
    pass


class InvalidConfig(InputError):
    pass


class UnknownTargetId(InputError):
    pass


class MissingLabels(InputError):
    pass


class ManifestError(InputError):
    pass


class DegenerateVariance(NumericalError):
    pass


class DegenerateKernel(NumericalError):
    pass


class SingularUpdate(NumericalError):
    pass


class StalledLineSearch(NumericalError):
    pass
