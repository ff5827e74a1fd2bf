"""
Exception types shared across the rating model packages.
"""


class ScreenRatingError(Exception):
    """Base class for every error raised by screen_rating"""


class DimensionError(ScreenRatingError, ValueError):
    """Operand shapes do not agree"""


class ConfigurationError(ScreenRatingError, ValueError):
    """A configuration value is unknown or out of range"""


class ContractError(ScreenRatingError, ValueError):
    """A caller broke an operation's precondition"""


class SchemaError(ScreenRatingError):
    """A manifest or checkpoint is missing required structure"""


class ImageDecodeError(ScreenRatingError):
    """Image bytes could not be decoded"""


class NonFiniteError(ScreenRatingError, FloatingPointError):
    """A tensor holds NaN or Inf while finite checks are enabled"""


class NonFiniteLossError(ScreenRatingError):
    """Training loss became NaN or Inf"""

    def __init__(self, epoch: int, batch_index: int, sample_keys: list):
        self.epoch = epoch
        self.batch_index = batch_index
        self.sample_keys = list(sample_keys)
        super().__init__(
            f"Non-finite loss at epoch {epoch}, batch {batch_index} "
            f"(samples: {', '.join(self.sample_keys[:5])}"
            f"{'...' if len(self.sample_keys) > 5 else ''})"
        )


class CheckpointError(ScreenRatingError):
    """Checkpoint file is malformed, has an unknown version or wrong keys"""
