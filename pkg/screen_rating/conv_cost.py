"""
Convolution Cost Calculator
===========================
Multiply-accumulate (MAC) counts for standard and depthwise separable
convolutions, and the reduction ratio between them.

    standard   = D_K * D_K * M * N * D_F * D_F
    depthwise  = D_K * D_K * M * D_F * D_F
    pointwise  = M * N * D_F * D_F
    separable  = depthwise + pointwise
    ratio      = separable / standard = 1/N + 1/D_K^2

D_F is the (square) feature map size the kernel is evaluated on, M the input
channels, N the output channels and D_K the (square) kernel size.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence

from .errors import ConfigurationError


@dataclass(frozen=True)
class ConvShape:
    """Input parameters for a convolution cost calculation"""
    D_F: int  # spatial size of the square feature map
    M: int    # input channels
    N: int    # output channels
    D_K: int  # square kernel size

    def __post_init__(self):
        for name in ("D_F", "M", "N", "D_K"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if self.D_K > self.D_F:
            raise ConfigurationError(f"kernel D_K={self.D_K} exceeds feature map D_F={self.D_F}")


def conv_macs(kind: str, feature: int, in_ch: int, out_ch: int, kernel: int) -> int:
    """
    Closed-form MACs per sample for one layer. ``feature`` is the output
    map size; strided and padded layers evaluate the kernel once per output
    position, so the same formulas hold for them.
    """
    area = feature * feature
    if kind == "standard":
        return kernel * kernel * in_ch * out_ch * area
    if kind == "depthwise":
        return kernel * kernel * in_ch * area
    if kind == "pointwise":
        return in_ch * out_ch * area
    if kind == "separable":
        return kernel * kernel * in_ch * area + in_ch * out_ch * area
    raise ConfigurationError(f"Unknown convolution kind '{kind}'")


def standard_conv_cost(s: ConvShape) -> int:
    return conv_macs("standard", s.D_F, s.M, s.N, s.D_K)


def separable_conv_cost(s: ConvShape) -> int:
    return conv_macs("separable", s.D_F, s.M, s.N, s.D_K)


def cost_reduction_ratio(s: ConvShape) -> float:
    return separable_conv_cost(s) / standard_conv_cost(s)


def closed_form_ratio(s: ConvShape) -> float:
    return float(Fraction(1, s.N) + Fraction(1, s.D_K * s.D_K))


@dataclass(frozen=True)
class LayerCost:
    """One convolution layer of an encoder, as laid out for cost accounting"""
    name: str
    kind: str      # standard | separable | pointwise
    feature: int   # output map size
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1

    @property
    def macs(self) -> int:
        return conv_macs(self.kind, self.feature, self.in_ch, self.out_ch, self.kernel)

    @property
    def standard_macs(self) -> int:
        return conv_macs("standard", self.feature, self.in_ch, self.out_ch, self.kernel)

    @property
    def separable_macs(self) -> int:
        return conv_macs("separable", self.feature, self.in_ch, self.out_ch, self.kernel)


@dataclass
class ConvCostResult:
    """Result of a cost calculation"""
    layer: str
    standard_macs: int
    separable_macs: int
    ratio: float
    closed_form_ratio: float
    notes: List[str] = field(default_factory=list)

    def as_row(self) -> Dict:
        return {
            "layer": self.layer,
            "standard_macs": self.standard_macs,
            "separable_macs": self.separable_macs,
            "ratio": round(self.ratio, 6),
            "closed_form_ratio": round(self.closed_form_ratio, 6),
        }


class ConvCostCalculator:
    """
    Builds cost tables for single shapes and for whole encoders
    """

    COLUMNS = ("layer", "standard_macs", "separable_macs", "ratio", "closed_form_ratio")

    def calculate(self, shape: ConvShape, layer: str = "conv") -> ConvCostResult:
        standard = standard_conv_cost(shape)
        separable = separable_conv_cost(shape)
        notes = [
            f"Depthwise: {conv_macs('depthwise', shape.D_F, shape.M, shape.N, shape.D_K)} MACs",
            f"Pointwise: {conv_macs('pointwise', shape.D_F, shape.M, shape.N, shape.D_K)} MACs",
            f"Shape: D_F={shape.D_F}, M={shape.M}, N={shape.N}, D_K={shape.D_K}",
        ]
        return ConvCostResult(
            layer=layer,
            standard_macs=standard,
            separable_macs=separable,
            ratio=separable / standard,
            closed_form_ratio=closed_form_ratio(shape),
            notes=notes,
        )

    def calculate_layers(self, layers: Sequence[LayerCost]) -> List[ConvCostResult]:
        """Rows for an encoder's layer list; ratios use the unvalidated closed form"""
        rows = []
        for layer in layers:
            standard = layer.standard_macs
            separable = layer.separable_macs
            rows.append(ConvCostResult(
                layer=f"{layer.name} ({layer.kind})",
                standard_macs=standard,
                separable_macs=separable,
                ratio=separable / standard,
                closed_form_ratio=1.0 / layer.out_ch + 1.0 / (layer.kernel * layer.kernel),
            ))
        return rows

    def calculate_from_args(self, args: Dict) -> Dict:
        """
        Calculate from raw CLI values (dk, m, n, df).
        Returns a JSON-serializable dict.
        """
        try:
            shape = ConvShape(
                D_F=int(args["df"]),
                M=int(args["m"]),
                N=int(args["n"]),
                D_K=int(args["dk"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            return {"success": False, "error": str(e)}

        result = self.calculate(shape)
        return {
            "success": True,
            "input": {"D_F": shape.D_F, "M": shape.M, "N": shape.N, "D_K": shape.D_K},
            "results": result.as_row(),
            "notes": result.notes,
        }


def format_table(rows: Sequence[ConvCostResult]) -> str:
    """Plain-text table with the calculator's column order"""
    header = ["layer", "standard MACs", "separable MACs", "ratio", "closed-form ratio"]
    body = [
        [r.layer, str(r.standard_macs), str(r.separable_macs),
         f"{r.ratio:.6f}", f"{r.closed_form_ratio:.6f}"]
        for r in rows
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in body)
    return "\n".join(lines)
