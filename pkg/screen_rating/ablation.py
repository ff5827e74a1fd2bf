"""
Ablation Harness
================
Each ``AblationSpec`` is one variant of the base configuration. A suite is
validated as a whole before any variant trains; every variant then trains
under the same seed and data and is scored on the test split (falling back
to validation, then training, when a split is too small).

Suites
------
activations  Swish, Mish, GoLU, GELU after fusion
components   the ten-row component study; encoders that cannot be built
             here are emitted as ``unsupported`` rows
dropout      head dropout 0.1 .. 0.5
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict

from .activations import ActivationKind
from .config import ModelConfig, with_overrides
from .errors import ConfigurationError
from .history_logger import HistoryLogger
from .manifest import Manifest
from .metrics import METRIC_COLUMNS, MetricsReport, UNDEFINED, format_report_table
from .trainer import evaluate_checkpoint, train

logger = logging.getLogger(__name__)

SUPPORTED_IMAGE_ENCODERS = ("separable",)
UNSUPPORTED_IMAGE_ENCODERS = ("resnet50", "efficientnet-b3", "densenet121", "convnext-tiny",
                              "inception-v3")
SUPPORTED_TEXT_ENCODERS = ("transformer", "simple-recurrent")
UNSUPPORTED_TEXT_ENCODERS = ("dbn",)
SUPPORTED_INIT = ("random",)

ROW_COLUMNS = ("variant",) + METRIC_COLUMNS + ("n", "split", "status", "note")


class AblationSpec(BaseModel):
    """One named variant; ``None`` keeps the base configuration's value"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    activation: Optional[str] = None
    dropout: Optional[float] = None
    image_encoder: str = "separable"
    text_encoder: Optional[str] = None
    image_init: str = "random"
    text_init: str = "random"

    @property
    def supported(self) -> bool:
        return (self.image_encoder not in UNSUPPORTED_IMAGE_ENCODERS
                and self.text_encoder not in UNSUPPORTED_TEXT_ENCODERS)

    def check(self) -> None:
        """Raise ConfigurationError for any axis value the harness does not know"""
        if self.activation is not None:
            ActivationKind.parse(self.activation)
        if self.dropout is not None and not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"{self.name}: dropout {self.dropout} outside [0, 1)")
        known_image = SUPPORTED_IMAGE_ENCODERS + UNSUPPORTED_IMAGE_ENCODERS
        if self.image_encoder not in known_image:
            raise ConfigurationError(
                f"{self.name}: unknown image encoder '{self.image_encoder}'")
        known_text = SUPPORTED_TEXT_ENCODERS + UNSUPPORTED_TEXT_ENCODERS
        if self.text_encoder is not None and self.text_encoder not in known_text:
            raise ConfigurationError(f"{self.name}: unknown text encoder '{self.text_encoder}'")
        for axis, value in (("image_init", self.image_init), ("text_init", self.text_init)):
            if value not in SUPPORTED_INIT:
                raise ConfigurationError(f"{self.name}: unknown {axis} '{value}'")

    def apply(self, base: ModelConfig) -> ModelConfig:
        return with_overrides(base, activation=self.activation, dropout=self.dropout,
                              text_encoder=self.text_encoder, image_init=self.image_init,
                              text_init=self.text_init)


def activation_suite() -> List[AblationSpec]:
    return [AblationSpec(name=kind.value, activation=kind.value)
            for kind in (ActivationKind.SWISH, ActivationKind.MISH,
                         ActivationKind.GOLU, ActivationKind.GELU)]


def component_suite() -> List[AblationSpec]:
    return [
        AblationSpec(name="Without image pretrained", image_init="random"),
        AblationSpec(name="Without text pretrained", text_init="random"),
        AblationSpec(name="No activation function after fusion", activation="Identity"),
        AblationSpec(name="ResNet50 image encoder", image_encoder="resnet50"),
        AblationSpec(name="EfficientNet-B3 image encoder", image_encoder="efficientnet-b3"),
        AblationSpec(name="DenseNet121 image encoder", image_encoder="densenet121"),
        AblationSpec(name="ConvNeXt-Tiny image encoder", image_encoder="convnext-tiny"),
        AblationSpec(name="Inception-v3 image encoder", image_encoder="inception-v3"),
        AblationSpec(name="Recurrent text encoder", text_encoder="simple-recurrent"),
        AblationSpec(name="DBN text encoder", text_encoder="dbn"),
    ]


def dropout_suite() -> List[AblationSpec]:
    return [AblationSpec(name=f"dropout {p:.1f}", dropout=p) for p in (0.1, 0.2, 0.3, 0.4, 0.5)]


SUITES = {
    "activations": activation_suite,
    "components": component_suite,
    "dropout": dropout_suite,
}


def get_suite(name: str) -> List[AblationSpec]:
    try:
        return SUITES[name]()
    except KeyError:
        raise ConfigurationError(
            f"Unknown suite '{name}'. Expected one of: {', '.join(sorted(SUITES))}") from None


@dataclass
class AblationRow:
    spec: AblationSpec
    status: str                         # "ok" or "unsupported"
    report: Optional[MetricsReport] = None
    split: str = ""
    note: str = ""
    history: List[Dict] = field(default_factory=list)

    def as_row(self, digits: Optional[int] = None) -> Dict:
        if self.report is not None:
            metrics = self.report.to_dict(digits)
        else:
            metrics = {name: UNDEFINED for name in METRIC_COLUMNS}
            metrics["n"] = 0
        row = {"variant": self.spec.name}
        row.update({name: metrics[name] for name in METRIC_COLUMNS})
        row.update({"n": metrics["n"], "split": self.split, "status": self.status,
                    "note": self.note})
        return row


@dataclass
class AblationTable:
    rows: List[AblationRow]

    def as_rows(self, digits: Optional[int] = None) -> List[Dict]:
        return [row.as_row(digits) for row in self.rows]

    def render(self) -> str:
        scored = [(r.spec.name, r.report) for r in self.rows if r.report is not None]
        lines = [format_report_table(scored)] if scored else []
        for r in self.rows:
            if r.status != "ok":
                lines.append(f"{r.spec.name:<36} {r.status}: {r.note}")
        return "\n".join(lines)


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "variant"


def validate_suite(suite: Sequence[AblationSpec]) -> None:
    names = [spec.name for spec in suite]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigurationError(f"duplicate variant names: {', '.join(duplicates)}")
    for spec in suite:
        spec.check()


def run_ablation(suite: Sequence[AblationSpec], manifest: Manifest, base: ModelConfig,
                 out_dir: Optional[Union[str, Path]] = None, clamp: bool = False,
                 timestamps: bool = True) -> AblationTable:
    """Train and score every supported variant; unsupported ones become explicit rows"""
    validate_suite(suite)
    configs = {spec.name: spec.apply(base) for spec in suite if spec.supported}

    rows = []
    for spec in suite:
        if not spec.supported:
            axis = spec.image_encoder if spec.image_encoder in UNSUPPORTED_IMAGE_ENCODERS \
                else spec.text_encoder
            logger.info("Variant '%s' is unsupported (%s)", spec.name, axis)
            rows.append(AblationRow(spec, "unsupported",
                                    note=f"{axis} encoder is not implemented"))
            continue

        logger.info("Training variant '%s'", spec.name)
        history_logger = None
        if out_dir is not None:
            history_logger = HistoryLogger(Path(out_dir) / slug(spec.name),
                                           timestamps=timestamps, json_mirror=False,
                                           overwrite=True)
        result = train(manifest, configs[spec.name], history_logger)
        split, report = evaluate_checkpoint(result.checkpoint, manifest, clamp=clamp)
        rows.append(AblationRow(spec, "ok", report, split,
                                note=",".join(result.flags),
                                history=result.history_rows()))
    return AblationTable(rows)
