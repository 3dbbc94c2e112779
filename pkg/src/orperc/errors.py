"""Exception types raised across the package."""


class OrpercError(Exception):
    """Base class for all package errors."""


class InvalidSpec(OrpercError, ValueError):
    """Malformed graph specification (empty, zero or duplicate directions...)."""


class InvalidWindow(OrpercError, ValueError):
    pass


class InvalidBracket(OrpercError, ValueError):
    pass


class InvalidArgument(OrpercError, ValueError):
    pass


class CapExceeded(OrpercError):
    """Exact enumeration requested on more edges than the configured cap."""


class NoCertificate(OrpercError):
    """A certificate (decay constants, good set) could not be produced."""
