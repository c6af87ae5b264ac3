class BellError(ValueError):
    """Base class for every domain error raised by the library"""


class NormalizationError(BellError):
    pass


class SignalingError(BellError):
    pass


class NegativeProbability(BellError):
    pass


class DimensionMismatch(BellError):
    pass


class ShapeMismatch(BellError):
    pass


class InvalidBias(BellError):
    pass


class InvalidWeights(BellError):
    pass


class InvalidCG(BellError):
    pass


class InvalidDistribution(BellError):
    pass


class InvalidChannel(BellError):
    pass


class InvalidArity(BellError):
    pass


class InvalidProtocol(BellError):
    pass


class AlphabetMismatch(BellError):
    pass


class InvalidPhaseIndex(BellError):
    pass


class InvalidEpsilon(BellError):
    pass


class DomainError(BellError):
    pass


class DegenerateChannel(BellError):
    pass
