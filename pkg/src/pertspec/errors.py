"""Exception types raised across the package."""


class PertSpecError(Exception):
    """Base class for all package errors."""


class ShellDegenerate(PertSpecError):
    pass


class NoSolution(PertSpecError):
    pass


class InconsistentVolume(PertSpecError):
    pass


class BasisMismatch(PertSpecError):
    pass


class CutoffTooSmall(PertSpecError):
    pass


class DimensionMismatch(PertSpecError):
    pass


class NoConvergence(PertSpecError):
    pass


class CompanionFailure(PertSpecError):
    pass


class WindingMismatch(PertSpecError):
    pass


class TooLarge(PertSpecError):
    pass


class NearSingularA(PertSpecError):
    pass


class EmptyEnsemble(PertSpecError):
    pass


class BinDegenerate(PertSpecError):
    pass


class BinMismatch(PertSpecError):
    pass


class MetadataMismatch(PertSpecError):
    pass


class ConfigError(PertSpecError):
    pass
