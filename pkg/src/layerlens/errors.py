"""Exception hierarchy shared by every layerlens module."""


class LayerLensError(Exception):
    """Base class for all errors raised by layerlens."""


class ConfigurationError(LayerLensError):
    pass


class DuplicateEntryError(LayerLensError):
    pass


class EmptyInputError(LayerLensError):
    pass


class BoundsError(LayerLensError, IndexError):
    pass


class InputError(LayerLensError, ValueError):
    """Malformed arguments to a model or engine operation."""


class ParseError(LayerLensError, ValueError):
    pass


class FormatError(LayerLensError, ValueError):
    """A weight or report document does not match its declared layout."""


class DivergenceError(LayerLensError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch}: loss={loss!r}")
        self.epoch = epoch
        self.loss = loss


class CapacityError(LayerLensError):
    pass


class NumericalError(LayerLensError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SerializationError(LayerLensError):
    pass
