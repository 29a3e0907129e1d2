"""Error hierarchy shared by every layer of the hub.

Each error carries a stable string ``code`` that is also the wire-visible
error identifier returned by the HTTP service.
"""


class HubError(Exception):
    code = "internal_error"

    def __init__(self, message: str | None = None):
        super().__init__(message if message is not None else self.code)


class ParseError(HubError):
    """Byte sequence is not a well-formed model encoding."""

    code = "parse_error"


class InvalidModelError(HubError):
    """Well-formed encoding whose contents violate a model invariant."""

    code = "invalid_model"


class ShapeMismatchError(HubError):
    code = "shape_mismatch"


class InvalidNameError(HubError):
    code = "invalid_name"


class ModelExistsError(HubError):
    code = "model_exists"


class ModelNotFoundError(HubError):
    code = "model_not_found"


class VersionNotFoundError(HubError):
    code = "version_not_found"


class DuplicateContributionError(HubError):
    code = "duplicate_contribution"


class StaleBaseError(HubError):
    code = "stale_base"


class ContributionNotPendingError(HubError):
    code = "contribution_not_pending"


class EmptyAggregationError(HubError):
    code = "empty_aggregation"


class InvalidArgumentsError(HubError):
    code = "invalid_arguments"
