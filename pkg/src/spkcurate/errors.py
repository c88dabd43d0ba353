"""Exception types shared across the package.

ValidationError (and subclasses) map to CLI exit code 2, NumericalError
(and subclasses) to exit code 3.
"""


class ValidationError(ValueError):
    """Malformed values, broken preconditions, or inconsistent shapes."""


class ParseError(ValidationError):
    """A file does not match its declared format."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MissingArtifactError(ValidationError):
    """A command input artifact does not exist."""


class StaleArtifactError(ValidationError):
    """An artifact was produced under a different config hash."""


class NumericalError(RuntimeError):
    """Runtime numerical failure."""


class SingularityError(NumericalError):
    """A transform would divide by a (near-)zero eigenvalue."""

    def __init__(self, index: int, eigenvalue: float):
        self.index = index
        self.eigenvalue = eigenvalue
        super().__init__(
            f"eigenvalue {index} is {eigenvalue:.3e}, below the singularity tolerance"
        )


class TrainingError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = "non-finite loss"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class SamplingError(NumericalError):
    """Sampling produced non-finite values."""
