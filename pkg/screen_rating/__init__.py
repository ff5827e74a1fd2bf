"""
screen_rating: a lightweight image + text regressor for app-screen ratings.

A depthwise separable image encoder and a small transformer text encoder
feed a concatenation fusion layer and an MLP head, all trained from
scratch on a numpy autodiff engine.
"""

from .activations import ActivationKind, activate
from .config import (DistillWeights, FusionConfig, ImageEncoderConfig, ModelConfig,
                     TextEncoderConfig, get_preset)
from .conv_cost import (ConvShape, cost_reduction_ratio, separable_conv_cost,
                        standard_conv_cost)
from .errors import (CheckpointError, ConfigurationError, ContractError, DimensionError,
                     ImageDecodeError, NonFiniteError, NonFiniteLossError, SchemaError,
                     ScreenRatingError)
from .fusion_head import FusionHead, fuse
from .gradient_check import grad_check
from .metrics import MetricsReport, evaluate
from .model import RatingModel, count_parameters
from .tensor import Tensor, layer_norm, matmul

__version__ = "0.1.0"

__all__ = [
    "ActivationKind", "activate",
    "DistillWeights", "FusionConfig", "ImageEncoderConfig", "ModelConfig",
    "TextEncoderConfig", "get_preset",
    "ConvShape", "cost_reduction_ratio", "separable_conv_cost", "standard_conv_cost",
    "CheckpointError", "ConfigurationError", "ContractError", "DimensionError",
    "ImageDecodeError", "NonFiniteError", "NonFiniteLossError", "SchemaError",
    "ScreenRatingError",
    "FusionHead", "fuse", "grad_check", "MetricsReport", "evaluate",
    "RatingModel", "count_parameters", "Tensor", "layer_norm", "matmul",
]
