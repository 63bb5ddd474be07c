"""Exception hierarchy shared by every pipeline stage.

Each class name doubles as the machine-readable error name printed by the CLI.
"""


class HandGeomError(Exception):
    """Base class for all data errors raised by the toolkit."""

    @property
    def name(self) -> str:
        return type(self).__name__


# imaging
class UnsupportedFormat(HandGeomError):
    pass


class ImageTooSmall(HandGeomError):
    pass


class InvalidThreshold(HandGeomError, ValueError):
    pass


class EmptyForeground(HandGeomError):
    pass


# contour
class ComponentTooSmall(HandGeomError):
    pass


class DefectiveAcquisition(HandGeomError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# features
class WrongSchema(HandGeomError):
    pass


class SchemaMismatch(HandGeomError):
    pass


class EmptyTrainingSet(HandGeomError):
    pass


# codes
class InvalidParameters(HandGeomError, ValueError):
    pass


class WrongLength(HandGeomError, ValueError):
    pass


class LengthMismatch(HandGeomError, ValueError):
    pass


class TooLargeToEnumerate(HandGeomError):
    pass


class TooManyClasses(HandGeomError):
    pass


class InfeasibleDimensions(HandGeomError):
    pass


# mlp
class DimensionMismatch(HandGeomError, ValueError):
    pass


class ShapeMismatch(HandGeomError, ValueError):
    pass


class InvalidGamma(HandGeomError, ValueError):
    pass


class SingularNormalEquations(HandGeomError):
    pass


class NonFiniteLoss(HandGeomError):
    pass


class MixedSignatures(HandGeomError):
    pass


class UnknownLabel(HandGeomError):
    pass


# classify
class EmptyGallery(HandGeomError):
    pass


class KindMismatch(HandGeomError):
    pass


class UnknownClaim(HandGeomError):
    pass


# eval
class EmptyScores(HandGeomError):
    pass


class IncompleteTensor(HandGeomError):
    pass


# synth
class InvalidParams(HandGeomError, ValueError):
    pass


class GenerationExhausted(HandGeomError):
    pass
