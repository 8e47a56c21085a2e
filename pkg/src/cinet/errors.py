"""Exception hierarchy for the engine.

``EngineError`` covers every domain-level failure. The CLI maps it to exit
code 1 and the HTTP service maps it to a 400 response; anything else is a
bug or a usage error.
"""


class EngineError(Exception):
    """Base class for domain errors raised by engine operations."""


class InvalidNetworkError(EngineError):
    """A network document could not be parsed, or an operation was given a
    network that fails structural validation."""


class NotDecomposableError(EngineError):
    """A chain rewrite was requested for a combination function that does not
    factor into two-argument stages under the requested ordering."""


class InconsistentEvidenceError(EngineError):
    """The supplied evidence has probability zero under the network."""
