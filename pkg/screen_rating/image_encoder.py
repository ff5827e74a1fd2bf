"""
Image Encoder
=============
MobileNet-style convolutional encoder producing the image vector v.

Layout (S = input size):
    stem      3x3 standard conv, stride 2, HSwish            -> S/2
    stage 0   inverted residual block, stride 2              -> S/4
    stage 1   inverted residual block(s), stride 2  -> tap f1 (S/8)
    stage 2   inverted residual block(s), stride 2  -> tap f2 (S/16)
    stage 3   inverted residual block(s), stride 2  -> tap f3 (S/32)

Each tap goes through its own 1x1 convolution to d_v channels and is
globally average-pooled to p_i. Each p_i is standardized across its
channels (no learned scale) so the three scales enter the projection at
unit variance; concat(p1, p2, p3) is projected to d_v (W_v, b_v) and
layer-normalized.

Every block is expand (1x1) -> depthwise (KxK) -> project (1x1), so all
spatial filtering is depthwise separable; the stem is the only standard
convolution.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from .activations import ActivationKind, activate
from .config import ImageEncoderConfig
from .conv_cost import LayerCost
from .errors import DimensionError
from .nn import LayerNorm, Linear, Module, fan_in_normal
from .tensor import (Tensor, add, concat, conv2d, conv_output_size, depthwise_conv2d,
                     global_avg_pool, layer_norm, pointwise_conv2d, reshape)

logger = logging.getLogger(__name__)

# Gain for ReLU-family activations under fan-in scaling
_CONV_GAIN = np.sqrt(2.0)
# Pooled taps can be far below unit scale; keep eps small next to them
_TAP_EPS = 1e-8


class InvertedResidual(Module):
    """expand pointwise -> depthwise -> linear projection, residual when shapes allow"""

    def __init__(self, in_ch: int, out_ch: int, stride: int, expand_ratio: int,
                 kernel: int, activation: ActivationKind, rng: np.random.Generator,
                 dtype=np.float64):
        super().__init__()
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.stride = stride
        self.kernel = kernel
        self.activation = activation
        self.hidden = in_ch * expand_ratio
        self.has_expand = expand_ratio != 1
        self.use_residual = stride == 1 and in_ch == out_ch

        if self.has_expand:
            self.expand_weight = self.add_parameter(
                "expand.weight", fan_in_normal(rng, (self.hidden, in_ch), in_ch, _CONV_GAIN, dtype))
            self.expand_bias = self.add_parameter("expand.bias", np.zeros(self.hidden, dtype=dtype))
        self.depthwise_weight = self.add_parameter(
            "depthwise.weight",
            fan_in_normal(rng, (self.hidden, 1, kernel, kernel), kernel * kernel, _CONV_GAIN, dtype))
        self.depthwise_bias = self.add_parameter("depthwise.bias", np.zeros(self.hidden, dtype=dtype))
        self.project_weight = self.add_parameter(
            "project.weight", fan_in_normal(rng, (out_ch, self.hidden), self.hidden, 1.0, dtype))
        self.project_bias = self.add_parameter("project.bias", np.zeros(out_ch, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        h = x
        if self.has_expand:
            h = activate(pointwise_conv2d(h, self.expand_weight, self.expand_bias), self.activation)
        h = activate(
            depthwise_conv2d(h, self.depthwise_weight, self.depthwise_bias,
                             stride=self.stride, padding=self.kernel // 2),
            self.activation,
        )
        out = pointwise_conv2d(h, self.project_weight, self.project_bias)
        return add(out, x) if self.use_residual else out

    def output_size(self, size: int) -> int:
        return conv_output_size(size, self.kernel, self.stride, self.kernel // 2)

    def layer_costs(self, name: str, size: int) -> List[LayerCost]:
        out_size = self.output_size(size)
        layers = []
        if self.has_expand:
            layers.append(LayerCost(f"{name}.expand", "pointwise", size, self.in_ch, self.hidden, 1))
        layers.append(LayerCost(f"{name}.separable", "separable", out_size, self.hidden,
                                self.out_ch, self.kernel, self.stride))
        return layers


class ImageEncoder(Module):
    """Multiscale depthwise-separable encoder: [B, 3, S, S] -> [B, d_v]"""

    def __init__(self, cfg: ImageEncoderConfig, rng: np.random.Generator, dtype=np.float64):
        super().__init__()
        self.cfg = cfg
        act = cfg.block_activation
        k = cfg.kernel_size

        self.stem_weight = self.add_parameter(
            "stem.weight",
            fan_in_normal(rng, (cfg.stem_channels, 3, 3, 3), 27, _CONV_GAIN, dtype))
        self.stem_bias = self.add_parameter("stem.bias", np.zeros(cfg.stem_channels, dtype=dtype))

        self.stages: List[List[InvertedResidual]] = []
        in_ch = cfg.stem_channels
        stage_plan = [(0, cfg.stem_channels, 1)] + [
            (i + 1, ch, cfg.blocks_per_stage) for i, ch in enumerate(cfg.stage_channels)
        ]
        for index, out_ch, depth in stage_plan:
            blocks = []
            for b in range(depth):
                block = InvertedResidual(in_ch, out_ch, 2 if b == 0 else 1, cfg.expand_ratio,
                                         k, act, rng, dtype)
                self.add_module(f"stage{index}.block{b}", block)
                blocks.append(block)
                in_ch = out_ch
            self.stages.append(blocks)

        self.taps = []
        for i, ch in enumerate(cfg.stage_channels):
            weight = self.add_parameter(
                f"tap{i + 1}.weight", fan_in_normal(rng, (cfg.embed_dim, ch), ch, 1.0, dtype))
            bias = self.add_parameter(f"tap{i + 1}.bias", np.zeros(cfg.embed_dim, dtype=dtype))
            self.taps.append((weight, bias))

        self.projection = self.add_module(
            "projection", Linear(3 * cfg.embed_dim, cfg.embed_dim, rng, dtype=dtype))
        self.norm = self.add_module("norm", LayerNorm(cfg.embed_dim, dtype=dtype))

    def _check_input(self, images: Tensor) -> None:
        s = self.cfg.input_size
        if images.ndim != 4 or images.shape[1:] != (3, s, s):
            raise DimensionError(f"image batch must be [B, 3, {s}, {s}], got {images.shape}")

    def feature_taps(self, images: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        """f1, f2, f3 at cumulative strides 8, 16, 32"""
        self._check_input(images)
        h = activate(conv2d(images, self.stem_weight, self.stem_bias, stride=2, padding=1),
                     self.cfg.block_activation)
        taps = []
        for index, blocks in enumerate(self.stages):
            for block in blocks:
                h = block(h)
            if index > 0:
                taps.append(h)
        return tuple(taps)

    def pooled_taps(self, images: Tensor) -> List[Tensor]:
        """p1, p2, p3, each [B, d_v] with zero mean and unit variance per row"""
        ones = Tensor(np.ones(self.cfg.embed_dim, dtype=images.dtype))
        zeros = Tensor(np.zeros(self.cfg.embed_dim, dtype=images.dtype))
        return [
            layer_norm(global_avg_pool(pointwise_conv2d(f, weight, bias)), ones, zeros,
                       _TAP_EPS)
            for f, (weight, bias) in zip(self.feature_taps(images), self.taps)
        ]

    def project(self, images: Tensor) -> Tensor:
        """Pre-LayerNorm projection z = W_v concat(p1, p2, p3) + b_v"""
        return self.projection(concat(self.pooled_taps(images), axis=-1))

    def __call__(self, images: Tensor) -> Tensor:
        return self.norm(self.project(images))

    def encode_image(self, img: Tensor) -> Tensor:
        """Single image [3, S, S] -> v [d_v]"""
        s = self.cfg.input_size
        if img.shape != (3, s, s):
            raise DimensionError(f"image must be [3, {s}, {s}], got {img.shape}")
        return reshape(self(reshape(img, (1, 3, s, s))), (self.cfg.embed_dim,))

    def layer_costs(self) -> List[LayerCost]:
        """Every convolution layer with the map size it runs at"""
        cfg = self.cfg
        size = conv_output_size(cfg.input_size, 3, 2, 1)
        layers = [LayerCost("stem", "standard", size, 3, cfg.stem_channels, 3, 2)]
        for index, blocks in enumerate(self.stages):
            for b, block in enumerate(blocks):
                layers.extend(block.layer_costs(f"stage{index}.block{b}", size))
                size = block.output_size(size)
            if index > 0:
                layers.append(LayerCost(f"tap{index}", "pointwise", size,
                                        cfg.stage_channels[index - 1], cfg.embed_dim, 1))
        return layers

    def total_macs(self) -> int:
        return sum(layer.macs for layer in self.layer_costs())


def encode_image(img: Tensor, encoder: ImageEncoder) -> Tensor:
    return encoder.encode_image(img)


def build_image_encoder(cfg: ImageEncoderConfig, seed: int = 0,
                        dtype=np.float64, rng: Optional[np.random.Generator] = None) -> ImageEncoder:
    encoder = ImageEncoder(cfg, rng if rng is not None else np.random.default_rng(seed), dtype)
    logger.debug("Image encoder: %d parameters, %d MACs per image",
                 encoder.num_parameters(), encoder.total_macs())
    return encoder
