"""Exception hierarchy shared across the package.

The CLI maps every ``FinetError`` to exit code 1; argparse usage errors
exit with 2 on their own.
"""


class FinetError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FinetError):
    """Tensor shapes do not agree for the requested operation."""


class ParseError(FinetError):
    """Malformed input line (corpus or embedding file)."""


class SpanError(FinetError):
    """Mention span indices out of bounds or empty."""


class CorpusError(FinetError):
    """Invalid corpus-level input (empty stream, empty gold set, ...)."""


class UnknownLabelError(FinetError):
    """A label is missing from the label index in strict mode."""


class GradientProbeError(FinetError):
    """The loss became non-finite while probing a coordinate."""


class CheckpointError(FinetError):
    """Checkpoint file is unreadable, wrong version, or inconsistent."""


class TrainingError(FinetError):
    """Training aborted (non-finite loss)."""


class EncoderMismatchError(FinetError):
    """A command requires a different encoder than the checkpoint holds."""
