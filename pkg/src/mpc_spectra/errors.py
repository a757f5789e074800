"""Exception hierarchy shared by every module."""


class MpcSpectraError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


class DimensionMismatch(MpcSpectraError):
    pass


class NotSchurStable(MpcSpectraError):
    pass


class WeightNotPositiveDefinite(MpcSpectraError):
    pass


class NotPositiveSemidefinite(MpcSpectraError):
    pass


class NotPositiveDefinite(MpcSpectraError):
    pass


class HessianNotPositiveDefinite(MpcSpectraError):
    pass


class NoConstraints(MpcSpectraError):
    pass


class ProblemTooLarge(MpcSpectraError):
    pass


class NonFinite(MpcSpectraError):
    pass


class NonConverged(MpcSpectraError):
    """Raised by adaptive quadrature/extremum search when the grid cap is hit."""


class SingularResolvent(MpcSpectraError):
    pass


class CrossTermNotEliminated(MpcSpectraError):
    pass


class CrossTermPresent(MpcSpectraError):
    pass


class SymbolNotPD(MpcSpectraError):
    pass


class ComplexSpectrumResidue(MpcSpectraError):
    pass


class RankMismatch(MpcSpectraError):
    pass


class DegenerateMoments(MpcSpectraError):
    pass


class InvalidConfig(MpcSpectraError):
    pass


class NotConverged(MpcSpectraError):
    pass


class ParseError(MpcSpectraError):
    pass
