"""Exception hierarchy shared across the package."""


class ScreeningError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ScreeningError, ValueError):
    """An algorithm, budget or experiment is configured inconsistently."""


class DatasetError(ScreeningError, ValueError):
    """An empirical dataset file cannot be used."""


class DatasetParseError(DatasetError):
    def __init__(self, path, line_no, reason):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class EmptyAlternativeError(DatasetError):
    def __init__(self, path, alt_id):
        self.alt_id = alt_id
        super().__init__(f"{path}: alternative {alt_id} has no observations")


class AlternativeCountError(DatasetError):
    def __init__(self, path, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"{path}: declared k={expected} but found {found} alternatives")


class StreamExhaustedError(ScreeningError, RuntimeError):
    """A recorded stream ran past its horizon."""


class LlmError(ScreeningError, RuntimeError):
    """Base class for remote-evaluator failures."""


class CollectionError(LlmError):
    """No usable value after exhausting the re-query allowance."""

    def __init__(self, message, last_response=None, alt_id=None):
        self.last_response = last_response
        self.alt_id = alt_id
        super().__init__(message)


class TransportError(LlmError):
    """The endpoint could not be reached or kept failing at the HTTP level."""

    def __init__(self, message, retries=0, alt_id=None):
        self.retries = retries
        self.alt_id = alt_id
        super().__init__(message)
