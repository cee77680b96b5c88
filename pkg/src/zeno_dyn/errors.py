"""Exception hierarchy shared by every module."""


class ZenoError(Exception):
    """Base class for all errors raised by zeno_dyn."""


class StructuralError(ZenoError, ValueError):
    """Mismatched grids, regions outside a grid, wrong dimensions."""


class DomainError(ZenoError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateStateError(ZenoError):
    """A state has (numerically) zero norm where a nonzero one is required."""


class CapacityError(ZenoError):
    """Requested size exceeds what an operation can handle."""


class BoxTooSmallError(ZenoError):
    """Amplitude reaches the edge of the periodic computational box."""


class TruncationError(ZenoError):
    """A retained eigenbasis does not cover the state being expanded."""


class UndersamplingError(ZenoError):
    """Sampling is too coarse to resolve an oscillatory integrand."""


class FitError(ZenoError):
    """Too few usable points for a power-law fit."""


class ConfigError(ZenoError):
    """Invalid configuration document."""
