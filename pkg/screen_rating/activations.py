"""
Activation functions used after fusion and inside the encoders.

Swish is the activation the rating head defaults to. Mish, GELU and GoLU
follow their standard published definitions:

    Swish(x)  = x * sigmoid(x)
    Mish(x)   = x * tanh(softplus(x))
    GELU(x)   = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))   (tanh form)
    GoLU(x)   = x * exp(-exp(-x))                                 (Gompertz gate)
    HSwish(x) = x * ReLU6(x + 3) / 6
"""

from enum import Enum
from typing import Union

import numpy as np

from .errors import ConfigurationError
from .tensor import Tensor, elementwise, stable_sigmoid

_GELU_C = np.sqrt(2.0 / np.pi)


class ActivationKind(str, Enum):
    SWISH = "Swish"
    MISH = "Mish"
    GELU = "GELU"
    GOLU = "GoLU"
    SIGMOID = "Sigmoid"
    HSWISH = "HSwish"
    IDENTITY = "Identity"  # "no activation after fusion" variant

    @classmethod
    def parse(cls, value: Union[str, "ActivationKind"]) -> "ActivationKind":
        if isinstance(value, cls):
            return value
        for kind in cls:
            if str(value).lower() == kind.value.lower():
                return kind
        raise ConfigurationError(
            f"Unknown activation '{value}'. Expected one of: {', '.join(k.value for k in cls)}"
        )


def _swish(x):
    return x * stable_sigmoid(x)


def _swish_grad(x, y):
    s = stable_sigmoid(x)
    return s + x * s * (1.0 - s)


def _mish(x):
    return x * np.tanh(np.logaddexp(0.0, x))


def _mish_grad(x, y):
    t = np.tanh(np.logaddexp(0.0, x))
    return t + x * (1.0 - t * t) * stable_sigmoid(x)


def _gelu(x):
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x ** 3)))


def _gelu_grad(x, y):
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * x * x)


def _gompertz(x):
    # exp(-x) overflows below about -709; the gate is exactly 0 long before that
    return np.exp(-np.exp(-np.maximum(x, -30.0)))


def _golu(x):
    return x * _gompertz(x)


def _golu_grad(x, y):
    e = np.exp(-np.maximum(x, -30.0))
    return _gompertz(x) * (1.0 + x * e)


def _hswish(x):
    return x * np.clip(x + 3.0, 0.0, 6.0) / 6.0


def _hswish_grad(x, y):
    return np.where(x < -3.0, 0.0, np.where(x > 3.0, 1.0, (2.0 * x + 3.0) / 6.0))


_TABLE = {
    ActivationKind.SWISH: (_swish, _swish_grad),
    ActivationKind.MISH: (_mish, _mish_grad),
    ActivationKind.GELU: (_gelu, _gelu_grad),
    ActivationKind.GOLU: (_golu, _golu_grad),
    ActivationKind.SIGMOID: (stable_sigmoid, lambda x, y: y * (1.0 - y)),
    ActivationKind.HSWISH: (_hswish, _hswish_grad),
}


def activate(x: Tensor, kind: Union[str, ActivationKind]) -> Tensor:
    kind = ActivationKind.parse(kind)
    if kind is ActivationKind.IDENTITY:
        return x
    forward, derivative = _TABLE[kind]
    return elementwise(x, forward, derivative)
