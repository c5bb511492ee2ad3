"""Exception hierarchy shared by all modules."""


class VisoptError(Exception):
    """Base class."""


class InvalidPolygon(VisoptError):
    pass


class HoleOutsideOuter(VisoptError):
    pass


class OverlappingHoles(VisoptError):
    pass


class DegenerateRay(VisoptError):
    pass


class ObserverOutsideFreeSpace(VisoptError):
    pass


# locate() uses the shorter name
OutsideFreeSpace = ObserverOutsideFreeSpace


class ArrangementDegeneracy(VisoptError):
    def __init__(self, message, ids=()):
        super().__init__(message)
        self.ids = tuple(ids)


class TooCloseToReflexVertex(VisoptError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class InfeasibleDirection(VisoptError):
    pass


class InfiniteRay(VisoptError):
    pass


class DomainError(VisoptError, ValueError):
    pass


class GradientUnavailable(VisoptError):
    pass


class ScenarioError(VisoptError):
    """Bad scenario file; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
