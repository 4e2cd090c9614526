"""Exception hierarchy shared across the package."""


class PocError(Exception):
    """Base class for all package errors."""


class CatalogNotFound(PocError, KeyError):
    pass


class LabelValueError(PocError, ValueError):
    pass


class ShapeError(PocError, ValueError):
    pass


class PromptError(PocError, ValueError):
    pass


class NoValidRegion(PocError):
    pass


class GenerationRejected(PocError):
    pass


class DegenerateLabels(PocError, ValueError):
    pass


class BackendError(PocError):
    """Failure talking to an inpainting or segmentation backend.

    ``retryable`` tells the retry policy whether another attempt can help
    (transport hiccups, truncated bodies) or not (contract violations).
    """

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable
