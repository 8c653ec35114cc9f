"""Exception types shared across the package."""

from __future__ import annotations


class MirrorStereoError(Exception):
    """Base class for all package-specific errors."""


class InvalidPlane(MirrorStereoError):
    """Mirror plane parameters are malformed (e.g. non-unit normal)."""


class InvalidTransform(MirrorStereoError):
    """A transform that must be rigid is not (non-orthogonal, det != +1)."""


class FrameError(MirrorStereoError):
    """Operands are expressed in incompatible coordinate frames."""


class BehindCamera(MirrorStereoError):
    """Projection requested for a point at or behind the camera plane."""


class ShapeError(MirrorStereoError):
    """Array dimensions do not match."""


class TooFewPoints(MirrorStereoError):
    """Not enough masked points for a stable estimate."""


class DegenerateCloud(MirrorStereoError):
    """Point spread does not determine a unique plane (collinear or isotropic)."""


class IllConditioned(MirrorStereoError):
    """Triangulation rays are too close to parallel, or the baseline is zero."""


class EmptyInput(MirrorStereoError):
    """An operation received an empty collection it cannot work with."""


class UnknownView(MirrorStereoError):
    """Referenced view id does not exist."""


class ConfigError(MirrorStereoError):
    """Invalid or inconsistent configuration values."""


class PlaneUnavailable(MirrorStereoError):
    """Symmetric loss requested but no mirror plane estimate exists."""


class NumericalFailure(MirrorStereoError):
    """Optimization produced a non-finite loss or gradient."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class EmptyCloud(MirrorStereoError):
    """Metric requested on an empty point cloud."""


class NoVirtualViews(MirrorStereoError):
    """Pair graph requested with zero virtual views."""


class EmptyVideo(MirrorStereoError):
    """Video pair graph requested for zero frames."""


class PlacementFailure(MirrorStereoError):
    """Automatic camera placement did not find a valid pose."""


class ParseError(MirrorStereoError):
    """A scene or data file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = str(path) if path else ""
        if line is not None:
            loc = f"{loc}:{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
