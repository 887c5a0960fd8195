"""Error taxonomy for the tip package.

Exit-code mapping used by the CLI:

* :class:`SchemaError`        -> exit code 2 (malformed input file / config)
* :class:`MetricContractError`-> exit code 3 (a metric precondition is violated
  by otherwise well-formed inputs, e.g. indistinguishable actions)
* partial sweep failure       -> exit code 4 (handled in the CLI layer)
"""


class TipError(Exception):
    """Base class for all package errors."""


class SchemaError(TipError):
    """An input file or mapping does not match its declared schema.

    The message always names the offending field (or the missing key).
    """


class MetricContractError(TipError):
    """Well-formed inputs violate a metric precondition.

    Examples: a zero utility difference where a direction is required, a
    utility value exceeding its declared bound, mismatched grid domains.
    """


class DomainMismatchError(MetricContractError):
    """Two grid functions/embeddings live on different domains."""


class BoundViolationError(MetricContractError):
    """A sampled utility value exceeds the declared almost-sure bound."""


class NotSquareIntegrableError(MetricContractError):
    """A density was diagnosed as lying outside L2 on its domain."""
