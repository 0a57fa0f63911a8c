"""Exception hierarchy shared by every stage of the pipeline."""

from sklearn.exceptions import NotFittedError


class SemweaveError(Exception):
    """Base class for all errors raised by semweave."""


class MalformedDocumentError(SemweaveError, ValueError):
    """An input file could not be parsed or violates its schema."""

    def __init__(self, path, location, message):
        self.path = str(path)
        self.location = location
        super().__init__(f"{self.path}: {location}: {message}")


class OntologyCycleError(SemweaveError, ValueError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("subclass cycle: " + " -> ".join(self.cycle))


class UnknownEntityError(SemweaveError, LookupError):
    pass


class ModelValidationError(SemweaveError, ValueError):
    """A semantic model violates a structural invariant."""


class DanglingReferenceError(ModelValidationError):
    pass


class SourceFormatError(SemweaveError, ValueError):
    pass


class TrainingCoverageError(SemweaveError, ValueError):
    pass


class NotTrainedError(SemweaveError, NotFittedError):
    pass


class DuplicateModelError(SemweaveError, ValueError):
    pass


class NoModelError(SemweaveError, RuntimeError):
    """No candidate semantic model could be produced."""


class InvariantViolation(SemweaveError, RuntimeError):
    pass


class ConfigError(SemweaveError, ValueError):
    """Invalid user-supplied parameter; the CLI maps this to exit code 2."""
