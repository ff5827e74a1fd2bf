"""
Tensor Engine
=============
Dense numpy-backed tensors with reverse-mode differentiation.

Every operation builds a node that remembers its parents and a backward
closure. ``Tensor.backward`` replays the closures in reverse topological
order, accumulating gradients into every tensor with ``requires_grad``.

Operations provided here:
- elementwise arithmetic, abs, exp, log, sqrt, tanh, sigmoid
- matmul (rank >= 2, batched leading dims), reductions, reshape, transpose
- concat, indexing, embedding lookup, gather along the last axis
- softmax / log_softmax with temperature, dropout, layer_norm
- 2-D convolutions (standard, depthwise, pointwise) and average pooling

Convolutions report their multiply-accumulate counts to any active
``count_macs()`` context.
"""

from __future__ import annotations

import logging
from collections import Counter
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, DimensionError, NonFiniteError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence]

_FINITE_CHECKS = False
_GRAD_ENABLED = True
_MAC_COUNTERS: List["MacCounter"] = []


@contextmanager
def finite_checks(enabled: bool = True) -> Iterator[None]:
    """Raise NonFiniteError as soon as any op produces NaN or Inf"""
    global _FINITE_CHECKS
    previous = _FINITE_CHECKS
    _FINITE_CHECKS = enabled
    try:
        yield
    finally:
        _FINITE_CHECKS = previous


@contextmanager
def no_grad() -> Iterator[None]:
    """Build no graph inside the block (evaluation and finite differences)"""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class MacCounter:
    """Multiply-accumulate tally collected from convolution kernels"""

    def __init__(self):
        self.total = 0
        self.by_kind: Counter = Counter()

    def record(self, kind: str, macs: int) -> None:
        self.total += int(macs)
        self.by_kind[kind] += int(macs)


@contextmanager
def count_macs() -> Iterator[MacCounter]:
    counter = MacCounter()
    _MAC_COUNTERS.append(counter)
    try:
        yield counter
    finally:
        _MAC_COUNTERS.remove(counter)


def _record_macs(kind: str, macs: int) -> None:
    for counter in _MAC_COUNTERS:
        counter.record(kind, macs)


class Tensor:
    """
    n-dimensional array with an optional gradient slot.

    ``data`` is a numpy array (float64 unless float32 is passed in);
    ``grad`` has the same shape once a backward pass reaches the tensor.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False,
                 dtype: Optional[np.dtype] = None, name: Optional[str] = None):
        if dtype is None:
            is_float = isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64)
            dtype = data.dtype if is_float else np.float64
        self.data = np.array(data, dtype=dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        _check_finite(self.data, "tensor construction")

    @classmethod
    def _node(cls, data: np.ndarray, parents: Sequence["Tensor"],
              backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        needs_grad = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        out.requires_grad = needs_grad
        out._parents = tuple(parents) if needs_grad else ()
        out._backward = backward if needs_grad else None
        _check_finite(data, "operation output")
        return out

    # ------------------------------------------------------------------ #
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match tensor shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype)
        else:
            self.grad = self.grad + grad

    def backward(self, grad: Optional[ArrayLike] = None) -> None:
        """Reverse-mode sweep from this tensor; scalar outputs seed with 1"""
        if grad is None:
            if self.data.size != 1:
                raise ContractError(
                    f"backward() without an explicit gradient needs a scalar, got shape {self.shape}"
                )
            seed = np.ones_like(self.data)
        else:
            seed = np.broadcast_to(np.asarray(grad, dtype=self.data.dtype), self.data.shape)

        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        self._accumulate(np.array(seed))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar ----------------------------------------------------- #
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __neg__(self): return neg(self)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, index): return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        return transpose(self, axes if axes else None)


def _check_finite(data: np.ndarray, where: str) -> None:
    if _FINITE_CHECKS and data.dtype.kind == "f" and not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite value in {where} (shape {data.shape})")


def as_tensor(value: Union[Tensor, ArrayLike], like: Optional[Tensor] = None) -> Tensor:
    """Wrap constants; constants take the dtype of ``like`` when given"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=like.dtype if like is not None else None)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------- #
# Elementwise arithmetic
# ---------------------------------------------------------------------- #

def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))

    return Tensor._node(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))

    return Tensor._node(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g * b.data, a.shape))
        b._accumulate(_unbroadcast(g * a.data, b.shape))

    return Tensor._node(a.data * b.data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g / b.data, a.shape))
        b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return Tensor._node(a.data / b.data, (a, b), backward)


def neg(x: Tensor) -> Tensor:
    return Tensor._node(-x.data, (x,), lambda g: x._accumulate(-g))


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def elementwise(x: Tensor, forward: Callable[[np.ndarray], np.ndarray],
                derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Tensor:
    """Apply ``forward`` elementwise; ``derivative(x, y)`` gives dy/dx"""
    out = forward(x.data)

    def backward(g):
        x._accumulate(g * derivative(x.data, out))

    return Tensor._node(out, (x,), backward)


def abs_(x: Tensor) -> Tensor:
    return elementwise(x, np.abs, lambda xd, y: np.sign(xd))


def exp(x: Tensor) -> Tensor:
    return elementwise(x, np.exp, lambda xd, y: y)


def log(x: Tensor) -> Tensor:
    return elementwise(x, np.log, lambda xd, y: 1.0 / xd)


def sqrt(x: Tensor) -> Tensor:
    return elementwise(x, np.sqrt, lambda xd, y: 0.5 / y)


def tanh(x: Tensor) -> Tensor:
    return elementwise(x, np.tanh, lambda xd, y: 1.0 - y * y)


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x: Tensor) -> Tensor:
    return elementwise(x, stable_sigmoid, lambda xd, y: y * (1.0 - y))


# ---------------------------------------------------------------------- #
# Linear algebra and shape manipulation
# ---------------------------------------------------------------------- #

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")

    def backward(g):
        a._accumulate(_unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        b._accumulate(_unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return Tensor._node(np.matmul(a.data, b.data), (a, b), backward)


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x._accumulate(np.broadcast_to(g, x.shape))

    return Tensor._node(np.asarray(out), (x,), backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[ax] for ax in axes]))
    if count == 0:
        raise DimensionError(f"mean over an empty axis of shape {x.shape}")
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Tensor._node(x.data.reshape(shape), (x,), lambda g: x._accumulate(g.reshape(x.shape)))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor._node(np.transpose(x.data, axes), (x,),
                        lambda g: x._accumulate(np.transpose(g, inverse)))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise DimensionError(
                f"concat shape mismatch along axis {axis}: {[t.shape for t in tensors]}"
            )
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, bounds, axis=ax)):
            t._accumulate(piece)

    return Tensor._node(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward)


def getitem(x: Tensor, index) -> Tensor:
    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        x._accumulate(full)

    return Tensor._node(np.array(x.data[index]), (x,), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup ``table[ids]``; ``ids`` is an integer array"""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError(
            f"token id out of range for embedding table with {table.shape[0]} rows"
        )

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        table._accumulate(full)

    return Tensor._node(table.data[ids], (table,), backward)


def gather_last(x: Tensor, index: np.ndarray) -> Tensor:
    """Pick one entry per row along the last axis: out[..., ] = x[..., index[...]]"""
    index = np.asarray(index, dtype=np.int64)
    if index.shape != x.shape[:-1]:
        raise DimensionError(f"gather index shape {index.shape} does not match {x.shape[:-1]}")
    expanded = index[..., None]

    def backward(g):
        full = np.zeros_like(x.data)
        np.put_along_axis(full, expanded, g[..., None], axis=-1)
        x._accumulate(full)

    return Tensor._node(np.take_along_axis(x.data, expanded, axis=-1)[..., 0], (x,), backward)


# ---------------------------------------------------------------------- #
# Normalization, softmax, dropout
# ---------------------------------------------------------------------- #

def softmax(x: Tensor, axis: int = -1, temperature: float = 1.0) -> Tensor:
    if temperature <= 0:
        raise ContractError(f"softmax temperature must be positive, got {temperature}")
    z = x.data / temperature
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        x._accumulate(y * (g - (g * y).sum(axis=axis, keepdims=True)) / temperature)

    return Tensor._node(y, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1, temperature: float = 1.0) -> Tensor:
    if temperature <= 0:
        raise ContractError(f"softmax temperature must be positive, got {temperature}")
    z = x.data / temperature
    shifted = z - z.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        probs = np.exp(out)
        x._accumulate((g - probs * g.sum(axis=axis, keepdims=True)) / temperature)

    return Tensor._node(out, (x,), backward)


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """Inverted dropout; evaluation mode returns ``x`` itself"""
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ContractError("dropout in training mode needs a random generator")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return mul(x, Tensor(keep, dtype=x.dtype))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis with population variance, then scale and shift"""
    n = x.shape[-1] if x.ndim else 0
    if n == 0:
        raise DimensionError(f"layer_norm over a zero-length axis (shape {x.shape})")
    if gain.shape != (n,) or bias.shape != (n,):
        raise DimensionError(
            f"layer_norm gain {gain.shape} / bias {bias.shape} must match last axis {n}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gain.data + bias.data

    def backward(g):
        lead = tuple(range(g.ndim - 1))
        gain._accumulate((g * xhat).sum(axis=lead))
        bias._accumulate(g.sum(axis=lead))
        gx_hat = g * gain.data
        x._accumulate(
            inv / n * (n * gx_hat
                       - gx_hat.sum(axis=-1, keepdims=True)
                       - xhat * (gx_hat * xhat).sum(axis=-1, keepdims=True))
        )

    return Tensor._node(out, (x, gain, bias), backward)


# ---------------------------------------------------------------------- #
# Convolutions and pooling (NCHW)
# ---------------------------------------------------------------------- #

def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def _window(xp: np.ndarray, i: int, j: int, stride: int, ho: int, wo: int) -> Tuple[slice, ...]:
    return (slice(None), slice(None),
            slice(i, i + stride * (ho - 1) + 1, stride),
            slice(j, j + stride * (wo - 1) + 1, stride))


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Standard convolution. x [B, C, H, W], weight [N, C, K, K]"""
    if x.ndim != 4 or weight.ndim != 4 or x.shape[1] != weight.shape[1] \
            or weight.shape[2] != weight.shape[3]:
        raise DimensionError(f"conv2d shape mismatch: input {x.shape}, weight {weight.shape}")
    batch, channels, height, width = x.shape
    out_ch, _, k, _ = weight.shape
    ho = conv_output_size(height, k, stride, padding)
    wo = conv_output_size(width, k, stride, padding)
    if ho < 1 or wo < 1:
        raise DimensionError(f"conv2d kernel {k} too large for input {x.shape}")
    xp = _pad(x.data, padding)
    out = np.zeros((batch, out_ch, ho, wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            patch = xp[_window(xp, i, j, stride, ho, wo)]
            out += np.einsum("bchw,nc->bnhw", patch, weight.data[:, :, i, j], optimize=True)
    if bias is not None:
        out += bias.data[None, :, None, None]
    _record_macs("standard", k * k * channels * out_ch * ho * wo * batch)

    def backward(g):
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(weight.data)
        for i in range(k):
            for j in range(k):
                window = _window(xp, i, j, stride, ho, wo)
                gxp[window] += np.einsum("bnhw,nc->bchw", g, weight.data[:, :, i, j], optimize=True)
                gw[:, :, i, j] = np.einsum("bnhw,bchw->nc", g, xp[window], optimize=True)
        x._accumulate(gxp[:, :, padding:padding + height, padding:padding + width])
        weight._accumulate(gw)
        if bias is not None:
            bias._accumulate(g.sum(axis=(0, 2, 3)))

    parents = (x, weight) + ((bias,) if bias is not None else ())
    return Tensor._node(out, parents, backward)


def depthwise_conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
                     stride: int = 1, padding: int = 0) -> Tensor:
    """Per-channel spatial filter. x [B, C, H, W], weight [C, 1, K, K]"""
    if x.ndim != 4 or weight.ndim != 4 or weight.shape[0] != x.shape[1] \
            or weight.shape[1] != 1 or weight.shape[2] != weight.shape[3]:
        raise DimensionError(
            f"depthwise_conv2d shape mismatch: input {x.shape}, weight {weight.shape}"
        )
    batch, channels, height, width = x.shape
    k = weight.shape[2]
    ho = conv_output_size(height, k, stride, padding)
    wo = conv_output_size(width, k, stride, padding)
    if ho < 1 or wo < 1:
        raise DimensionError(f"depthwise kernel {k} too large for input {x.shape}")
    xp = _pad(x.data, padding)
    out = np.zeros((batch, channels, ho, wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            out += xp[_window(xp, i, j, stride, ho, wo)] * weight.data[None, :, 0, i, j, None, None]
    if bias is not None:
        out += bias.data[None, :, None, None]
    _record_macs("depthwise", k * k * channels * ho * wo * batch)

    def backward(g):
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(weight.data)
        for i in range(k):
            for j in range(k):
                window = _window(xp, i, j, stride, ho, wo)
                gxp[window] += g * weight.data[None, :, 0, i, j, None, None]
                gw[:, 0, i, j] = (g * xp[window]).sum(axis=(0, 2, 3))
        x._accumulate(gxp[:, :, padding:padding + height, padding:padding + width])
        weight._accumulate(gw)
        if bias is not None:
            bias._accumulate(g.sum(axis=(0, 2, 3)))

    parents = (x, weight) + ((bias,) if bias is not None else ())
    return Tensor._node(out, parents, backward)


def pointwise_conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """1x1 cross-channel mix. x [B, C, H, W], weight [N, C]"""
    if x.ndim != 4 or weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise DimensionError(
            f"pointwise_conv2d shape mismatch: input {x.shape}, weight {weight.shape}"
        )
    batch, channels, height, width = x.shape
    out_ch = weight.shape[0]
    out = np.einsum("bchw,nc->bnhw", x.data, weight.data, optimize=True)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    _record_macs("pointwise", channels * out_ch * height * width * batch)

    def backward(g):
        x._accumulate(np.einsum("bnhw,nc->bchw", g, weight.data, optimize=True))
        weight._accumulate(np.einsum("bnhw,bchw->nc", g, x.data, optimize=True))
        if bias is not None:
            bias._accumulate(g.sum(axis=(0, 2, 3)))

    parents = (x, weight) + ((bias,) if bias is not None else ())
    return Tensor._node(out, parents, backward)


def avg_pool2d(x: Tensor, kernel: int) -> Tensor:
    """Non-overlapping average pooling with stride == kernel"""
    batch, channels, height, width = x.shape
    if height % kernel or width % kernel:
        raise DimensionError(f"avg_pool2d kernel {kernel} does not tile input {x.shape}")
    ho, wo = height // kernel, width // kernel
    blocks = x.data.reshape(batch, channels, ho, kernel, wo, kernel)

    def backward(g):
        spread = np.repeat(np.repeat(g, kernel, axis=2), kernel, axis=3)
        x._accumulate(spread / (kernel * kernel))

    return Tensor._node(blocks.mean(axis=(3, 5)), (x,), backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """[B, C, H, W] -> [B, C]"""
    return mean(x, axis=(2, 3))
