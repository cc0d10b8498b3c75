"""Exception and warning classes shared across isolab."""


class IsolabError(Exception):
    pass


class DegenerateEllipse(IsolabError, ValueError):
    pass


class ZoneViolation(IsolabError, ValueError):
    pass


class OverlapViolation(IsolabError, ValueError):
    pass


class GrazingOrCorner(IsolabError):
    """Raised when a ray hits the boundary tangentially or too close to a corner."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class CapMismatch(IsolabError, ValueError):
    pass


class IllConditioned(IsolabError):
    pass


class OutsideDomain(IsolabError, ValueError):
    pass


class SupportViolation(IsolabError, ValueError):
    pass


class Inconclusive(IsolabError):
    pass


class GridTooCoarse(IsolabError, ValueError):
    pass


class ParseError(IsolabError):
    pass


class ValidationError(IsolabError, ValueError):
    pass


class MissedEigenvalueWarning(UserWarning):
    pass
