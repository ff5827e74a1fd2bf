"""
Parameter containers shared by the encoders and the rating head.
"""

from collections import OrderedDict
from typing import Dict, Optional

import numpy as np

from .errors import CheckpointError
from .tensor import Tensor, add, layer_norm, matmul, reshape


def fan_in_normal(rng: np.random.Generator, shape, fan_in: int, gain: float = 1.0,
                  dtype=np.float64) -> np.ndarray:
    """Normal init with std = gain / sqrt(fan_in)"""
    return (rng.standard_normal(shape) * (gain / np.sqrt(fan_in))).astype(dtype)


class Module:
    """Owns named parameters and child modules in registration order"""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self._children: "OrderedDict[str, Module]" = OrderedDict()

    def add_parameter(self, name: str, data: np.ndarray) -> Tensor:
        tensor = Tensor(data, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_module(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> Dict[str, Tensor]:
        named: Dict[str, Tensor] = OrderedDict()
        for name, tensor in self._params.items():
            named[f"{prefix}{name}"] = tensor
        for child_name, child in self._children.items():
            named.update(child.named_parameters(f"{prefix}{child_name}."))
        return named

    def num_parameters(self) -> int:
        return sum(t.size for t in self.named_parameters().values())

    def zero_grad(self) -> None:
        for tensor in self.named_parameters().values():
            tensor.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return OrderedDict((k, t.data.copy()) for k, t in self.named_parameters().items())

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Copy arrays into parameters; the key sets must match exactly"""
        named = self.named_parameters()
        missing = sorted(set(named) - set(state))
        unexpected = sorted(set(state) - set(named))
        if missing or unexpected:
            raise CheckpointError(
                f"parameter keys differ: missing={missing[:5]} unexpected={unexpected[:5]}"
            )
        for key, tensor in named.items():
            array = np.asarray(state[key])
            if array.shape != tensor.shape:
                raise CheckpointError(
                    f"shape mismatch for '{key}': checkpoint {array.shape}, model {tensor.shape}"
                )
            tensor.data[...] = array


class Linear(Module):
    """y = x W + b with W stored as [in, out]"""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 gain: float = 1.0, dtype=np.float64):
        super().__init__()
        self.weight = self.add_parameter(
            "weight", fan_in_normal(rng, (in_features, out_features), in_features, gain, dtype)
        )
        self.bias = self.add_parameter("bias", np.zeros(out_features, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim == 1:
            return reshape(self(reshape(x, (1, x.shape[0]))), (self.bias.shape[0],))
        return add(matmul(x, self.weight), self.bias)


class LayerNorm(Module):
    def __init__(self, width: int, eps: float = 1e-5, dtype=np.float64):
        super().__init__()
        self.eps = eps
        self.gain = self.add_parameter("gain", np.ones(width, dtype=dtype))
        self.bias = self.add_parameter("bias", np.zeros(width, dtype=dtype))

    def __call__(self, x: Tensor, eps: Optional[float] = None) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps if eps is None else eps)
