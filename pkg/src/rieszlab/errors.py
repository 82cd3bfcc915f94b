"""Exception hierarchy shared by all modules."""


class RieszlabError(Exception):
    """Base class for library errors."""


class DomainError(RieszlabError):
    """Input outside the documented domain (bad parameter, singular point, ...)."""


class InvariantError(RieszlabError):
    """A constructor invariant is violated (non-unit vector, bad frame, ...)."""


class SolverError(RieszlabError):
    """An iterative solver exhausted its budget or found no bracket."""


class NumericalError(RieszlabError):
    """A computed quantity violates a structural expectation beyond tolerance."""
