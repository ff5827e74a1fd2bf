"""
Regression Metrics
==================
    MAE       = (1/n) sum |y - y_hat|
    MSE       = (1/n) sum (y - y_hat)^2
    RMSE      = sqrt(MSE)
    Pearson r = sum (y - y_bar)(y_hat - yh_bar) / sqrt(sum (y - y_bar)^2 sum (y_hat - yh_bar)^2)
    R^2       = 1 - SS_res / SS_tot,  SS_tot = sum (y - y_bar)^2

R^2 and Pearson r are reported as ``None`` (serialized "undefined") when
their denominators vanish, never as NaN.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError

UNDEFINED = "undefined"

# Above this many samples sums are computed with math.fsum
COMPENSATED_THRESHOLD = 10_000

# Column order used by every metrics table
METRIC_COLUMNS = ("mae", "mse", "rmse", "r2", "pearson_r")


@dataclass
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    r2: Optional[float]
    pearson_r: Optional[float]
    n: int
    clamped: bool = False

    @property
    def degenerate(self) -> bool:
        return self.r2 is None or self.pearson_r is None

    def to_dict(self, digits: Optional[int] = None) -> Dict[str, Union[float, int, str, bool]]:
        def fmt(value):
            if value is None:
                return UNDEFINED
            return round(value, digits) if digits is not None else value

        row = {name: fmt(getattr(self, name)) for name in METRIC_COLUMNS}
        row["n"] = self.n
        row["clamped"] = self.clamped
        return row

    @classmethod
    def from_dict(cls, row: Dict) -> "MetricsReport":
        def parse(value):
            if value is None or value == UNDEFINED or value == "":
                return None
            return float(value)

        return cls(mae=float(row["mae"]), mse=float(row["mse"]), rmse=float(row["rmse"]),
                   r2=parse(row["r2"]), pearson_r=parse(row["pearson_r"]), n=int(row["n"]),
                   clamped=str(row.get("clamped", False)).lower() == "true")


def _total(values: np.ndarray) -> float:
    if values.size > COMPENSATED_THRESHOLD:
        return math.fsum(values.tolist())
    return float(np.sum(values))


def evaluate(y: Sequence[float], y_hat: Sequence[float],
             clamp: Optional[Tuple[float, float]] = None) -> MetricsReport:
    """
    Five-metric report for targets ``y`` and predictions ``y_hat``.

    ``clamp`` = (low, high) clips predictions before scoring and marks the
    report as clamped.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise ContractError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    n = y.size
    if n < 2:
        raise ContractError(f"evaluate needs at least 2 samples, got {n}")
    if clamp is not None:
        y_hat = np.clip(y_hat, clamp[0], clamp[1])

    residual = y - y_hat
    mae = _total(np.abs(residual)) / n
    mse = _total(residual * residual) / n
    rmse = math.sqrt(mse)

    y_c = y - _total(y) / n
    p_c = y_hat - _total(y_hat) / n
    ss_tot = _total(y_c * y_c)
    ss_pred = _total(p_c * p_c)

    r2 = None if ss_tot == 0.0 else 1.0 - _total(residual * residual) / ss_tot
    pearson = None
    if ss_tot > 0.0 and ss_pred > 0.0:
        pearson = _total(y_c * p_c) / math.sqrt(ss_tot * ss_pred)
        pearson = min(1.0, max(-1.0, pearson))

    return MetricsReport(mae, mse, rmse, r2, pearson, n, clamp is not None)


def format_report_table(rows: Sequence[Tuple[str, MetricsReport]], digits: int = 4) -> str:
    """Plain-text table: name, MAE, MSE, RMSE, R2, Pearson-r"""
    header = f"{'Variant':<36} {'MAE':>8} {'MSE':>8} {'RMSE':>8} {'R2':>9} {'Pearson-r':>10}"
    lines = [header, "-" * len(header)]

    def cell(value, width):
        text = UNDEFINED if value is None else f"{value:.{digits}f}"
        return f"{text:>{width}}"

    for name, report in rows:
        lines.append(f"{name:<36} {cell(report.mae, 8)} {cell(report.mse, 8)} "
                     f"{cell(report.rmse, 8)} {cell(report.r2, 9)} {cell(report.pearson_r, 10)}")
    return "\n".join(lines)
