"""Exception types raised across the package.

Every domain error derives from :class:`LocalPackError` so callers (and the
command line front end) can separate domain failures from programming errors.
"""
from __future__ import annotations


class LocalPackError(Exception):
    """Base class for domain errors."""


# geometry
class UnboundedRegion(LocalPackError):
    pass


class EmptyInterior(LocalPackError):
    pass


class DegenerateFace(LocalPackError):
    pass


class MissingSteinerData(LocalPackError):
    pass


# bodies
class UnknownBody(LocalPackError):
    pass


class SingularBasis(LocalPackError):
    pass


# local cells
class UnboundedCell(LocalPackError):
    pass


class DegenerateVertex(LocalPackError):
    pass


class PerturbationFailed(LocalPackError):
    pass


# colour graphs
class NotGeneral(LocalPackError):
    pass


class NotTriangulable(LocalPackError):
    pass


class ColorCountMismatch(LocalPackError):
    pass


class BadDegree(LocalPackError):
    pass


class DiagonalExists(LocalPackError):
    pass


class CapExceeded(LocalPackError):
    pass


# optimisation
class InfeasibleSeed(LocalPackError):
    pass


class NearSingularTriple(LocalPackError):
    pass


class NonpositiveVolume(LocalPackError):
    pass


# truncater bounds
class NonBallTruncater(LocalPackError):
    pass


class SelfIntersecting(LocalPackError):
    pass


class AngleOutOfRange(LocalPackError):
    pass


class EmptySection(LocalPackError):
    pass


class NonpositiveMu(LocalPackError):
    pass


class EmptyDomain(LocalPackError):
    pass


class SectionTopology(LocalPackError):
    """The sphere section has more than one boundary loop."""
