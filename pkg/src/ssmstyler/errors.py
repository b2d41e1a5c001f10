"""Exception hierarchy shared across the pipeline."""


class SsmStylerError(Exception):
    """Base class for all library errors."""


class InvalidArgument(SsmStylerError, ValueError):
    """A caller-supplied value violates an operation precondition."""


class InvalidConfig(SsmStylerError, ValueError):
    """A configuration object is internally inconsistent or mismatched."""


class NumericConfigError(SsmStylerError, ValueError):
    """A numeric setup is unusable, e.g. the overlap-add window sum has zeros."""


class DegenerateEmbedding(SsmStylerError, ValueError):
    """Normalization of an exactly-zero embedding vector was requested."""


class CorruptCheckpoint(SsmStylerError, ValueError):
    """A parameter store or checkpoint file is inconsistent with the model."""


class AbortStep(SsmStylerError, RuntimeError):
    """An optimizer step or training step hit a non-finite value."""
