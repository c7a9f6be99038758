"""Exception types shared across the workbench.

The CLI maps each class to an exit code, so callers can tell bad input
apart from a blown resource budget or a failed verification.
"""


class CommlabError(Exception):
    exit_code = 1


class InputError(CommlabError, ValueError):
    exit_code = 2


class ResourceError(CommlabError):
    exit_code = 4


class VerificationError(CommlabError):
    exit_code = 3


class ProtocolError(CommlabError):
    exit_code = 3


class SearchFailure(CommlabError):
    """A randomized search ran out of attempts (not a correctness bug)."""
    exit_code = 5


class ConstructionFailure(CommlabError):
    """A rejection-sampling construction ran out of attempts."""
    exit_code = 5


class DecodeError(CommlabError):
    exit_code = 3
