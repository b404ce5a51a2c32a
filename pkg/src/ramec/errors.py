"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An argument is outside its documented domain."""


class DegenerateGeometry(ValueError):
    """Two points coincide where a direction is required."""


class InfeasibleProblem(ValueError):
    """The resource problem has no feasible point.

    ``user`` names the first user whose minimum-bits requirement cannot be met.
    """

    def __init__(self, message, user=None):
        super().__init__(message)
        self.user = user
