"""Exception hierarchy shared by all fockflow modules."""


class FockflowError(Exception):
    """Base class for every error raised by fockflow."""


class ConfigurationError(FockflowError, ValueError):
    """A model or scenario was set up in a way the numerics cannot honour."""


class DomainError(FockflowError, ValueError):
    """An argument lies outside the interval where an operation is defined."""


class ContractError(FockflowError, ValueError):
    """Two inputs that must agree (grids, bins, ...) do not."""


class EventFileError(FockflowError):
    """Malformed event file; ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
