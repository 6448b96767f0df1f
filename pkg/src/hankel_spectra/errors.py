"""Exception hierarchy.

Every exception carries a stable ``code`` string; the CLI emits it in
structured error reports so shell pipelines can branch on the failure class.
"""


class HankelSpectraError(Exception):
    code = "Internal"


class EmptyInputError(HankelSpectraError):
    code = "EmptyInput"


class NegativeEntryError(HankelSpectraError):
    code = "NegativeEntry"

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"negative entry at index {index}")


class NonInterlacingError(HankelSpectraError):
    code = "NonInterlacing"

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"interlacing violated at index {index}")


class PoleProximityError(HankelSpectraError):
    code = "PoleProximity"

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"evaluation point too close to pole {index}")


class WeightRangeError(HankelSpectraError):
    """Weight product over- or underflows double precision."""

    code = "WeightRange"


class DegenerateSpectrumError(HankelSpectraError):
    code = "DegenerateSpectrum"


class DegenerateMeasureError(HankelSpectraError):
    code = "DegenerateMeasure"


class NonUnimodularPhaseError(HankelSpectraError):
    code = "NonUnimodularPhase"


class SupportNotCyclicError(HankelSpectraError):
    code = "SupportNotCyclic"


class SquareRootFailureError(HankelSpectraError):
    code = "SquareRootFailure"


class BundleInvariantError(HankelSpectraError):
    """An assembled operator tuple violates one of its defining identities."""

    code = "BundleInvariant"


class NotHankelError(HankelSpectraError):
    code = "NotHankel"


class ClusterAmbiguityError(HankelSpectraError):
    code = "ClusterAmbiguity"


class TruncationTooSmallError(HankelSpectraError):
    code = "TruncationTooSmall"


class InternalConsistencyError(HankelSpectraError):
    """Two independent computations of the same quantity disagree."""

    code = "InternalConsistency"


class ThetaAtOriginNonzeroError(HankelSpectraError):
    code = "ThetaAtOriginNonzero"


class RootOffCircleError(HankelSpectraError):
    code = "RootOffCircle"


class SchemaError(HankelSpectraError):
    code = "Schema"
