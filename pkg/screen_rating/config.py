"""
Validated configuration records and the two named presets.

``desk``  - 64 px images, 128-wide embeddings; small enough to overfit the
            synthetic corpus on a laptop CPU.
``paper`` - 224 px images, 512-wide fusion and head, lr 5e-5, gradient clip
            1.0, 20 epochs.
"""

from typing import Literal, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .activations import ActivationKind
from .errors import ConfigurationError


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ImageEncoderConfig(_Config):
    input_size: int = 224
    stem_channels: int = 16
    stage_channels: Tuple[int, int, int] = (24, 48, 96)
    embed_dim: int = 512
    expand_ratio: int = 4
    kernel_size: int = 3
    blocks_per_stage: int = 1
    block_activation: ActivationKind = ActivationKind.HSWISH

    @field_validator("block_activation", mode="before")
    @classmethod
    def _parse_activation(cls, value):
        return ActivationKind.parse(value)

    @field_validator("input_size")
    @classmethod
    def _input_size(cls, value: int) -> int:
        if value <= 0 or value % 32:
            raise ValueError(f"input_size must be a positive multiple of 32, got {value}")
        return value

    @field_validator("stem_channels", "embed_dim", "expand_ratio", "blocks_per_stage")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("stage_channels")
    @classmethod
    def _stages(cls, value):
        if any(c <= 0 for c in value):
            raise ValueError(f"stage channels must be positive, got {value}")
        return value

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value <= 0 or value % 2 == 0:
            raise ValueError(f"kernel_size must be a positive odd integer, got {value}")
        return value


class TextEncoderConfig(_Config):
    vocab_size: int = 8192
    width: int = 256
    layers: int = 2
    heads: int = 4
    max_length: int = 64
    output_dim: int = 512
    ff_multiplier: int = 4

    @field_validator("vocab_size", "width", "layers", "heads", "max_length",
                     "output_dim", "ff_multiplier")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @model_validator(mode="after")
    def _heads_divide_width(self):
        if self.width % self.heads:
            raise ValueError(f"width {self.width} is not divisible by heads {self.heads}")
        return self


class FusionConfig(_Config):
    embed_dim: int = 512
    hidden_dim: int = 512
    activation: ActivationKind = ActivationKind.SWISH
    dropout: float = 0.1

    @field_validator("activation", mode="before")
    @classmethod
    def _parse_activation(cls, value):
        return ActivationKind.parse(value)

    @field_validator("embed_dim", "hidden_dim")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("dropout")
    @classmethod
    def _rate(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {value}")
        return value


class DistillWeights(_Config):
    alpha_mlm: float = 2.0
    alpha_ce: float = 5.0
    alpha_cos: float = 1.0
    temperature: float = 2.0

    @field_validator("alpha_mlm", "alpha_ce", "alpha_cos")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("loss weights must be non-negative")
        return value

    @field_validator("temperature")
    @classmethod
    def _temperature(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("temperature must be positive")
        return value


class ModelConfig(_Config):
    image: ImageEncoderConfig = ImageEncoderConfig()
    text: TextEncoderConfig = TextEncoderConfig()
    fusion: FusionConfig = FusionConfig()
    learning_rate: float = 5e-5
    epochs: int = 20
    batch_size: int = 16
    grad_clip: float = 1.0
    seed: int = 0
    loss: Literal["mse", "mae"] = "mse"
    target_scale: Literal["raw", "minmax"] = "raw"
    text_encoder: Literal["transformer", "simple-recurrent"] = "transformer"
    image_init: Literal["random"] = "random"
    text_init: Literal["random"] = "random"
    precision: Literal["float64", "float32"] = "float64"
    workers: int = 1

    @field_validator("learning_rate")
    @classmethod
    def _lr(cls, value: float) -> float:
        # lr = 0 is a legal frozen run
        if value < 0:
            raise ValueError("learning_rate must be non-negative")
        return value

    @field_validator("grad_clip")
    @classmethod
    def _clip(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("grad_clip must be positive")
        return value

    @field_validator("epochs", "batch_size", "workers")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @model_validator(mode="after")
    def _widths_agree(self):
        widths = {self.image.embed_dim, self.text.output_dim, self.fusion.embed_dim}
        if len(widths) != 1:
            raise ValueError(
                "image embed_dim, text output_dim and fusion embed_dim must be equal, got "
                f"{self.image.embed_dim}, {self.text.output_dim}, {self.fusion.embed_dim}"
            )
        return self


def desk_preset() -> ModelConfig:
    return ModelConfig(
        image=ImageEncoderConfig(input_size=64, stem_channels=16, stage_channels=(16, 32, 64),
                                 embed_dim=128, expand_ratio=2),
        text=TextEncoderConfig(width=64, layers=2, heads=4, max_length=32, output_dim=128),
        fusion=FusionConfig(embed_dim=128, hidden_dim=128),
        learning_rate=1e-3,
        epochs=200,
        batch_size=8,
        grad_clip=1.0,
    )


def paper_preset() -> ModelConfig:
    return ModelConfig(
        image=ImageEncoderConfig(input_size=224, embed_dim=512),
        text=TextEncoderConfig(width=256, layers=2, heads=4, max_length=64, output_dim=512),
        fusion=FusionConfig(embed_dim=512, hidden_dim=512),
        learning_rate=5e-5,
        epochs=20,
        batch_size=16,
        grad_clip=1.0,
    )


PRESETS = {
    "desk": desk_preset,
    "paper": paper_preset,
}


def get_preset(name: str) -> ModelConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(
            f"Unknown preset '{name}'. Expected one of: {', '.join(sorted(PRESETS))}"
        ) from None


def with_overrides(cfg: ModelConfig, **overrides) -> ModelConfig:
    """
    Apply flat overrides; ``dropout`` and ``activation`` land in the fusion
    block. ``None`` values are ignored so CLI flags can pass straight through.
    """
    fusion_updates = {}
    top_updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("dropout", "activation"):
            fusion_updates[key] = value
        else:
            top_updates[key] = value
    data = cfg.model_dump()
    data.update(top_updates)
    data["fusion"].update(fusion_updates)
    return ModelConfig.model_validate(data)
