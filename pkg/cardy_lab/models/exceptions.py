"""Custom exceptions used in the percolation laboratory"""


class MeshTooCoarse(Exception):
    pass


class InvalidSpec(Exception):
    pass


class UnknownVertex(Exception):
    pass


class UnknownArc(Exception):
    pass


class WrongMarkedPointCount(Exception):
    pass


class EmptyRegion(Exception):
    pass


class TooManySites(Exception):
    pass


class OutsideCoveredRegion(Exception):
    pass


class BoundaryFace(Exception):
    pass


class OutOfRange(Exception):
    pass


class UnsupportedDomain(Exception):
    pass


class QuadratureFailure(Exception):
    pass


class OutOfDomain(Exception):
    pass


class NearPole(Exception):
    pass


class StatisticalFloor(Exception):
    pass


class ZeroCount(Exception):
    pass


class DegeneratePoints(Exception):
    pass


class ParseError(Exception):
    pass


class ConfigValidationError(Exception):
    pass


class ManifestMismatch(Exception):
    pass


class WorkerFailure(Exception):
    pass
