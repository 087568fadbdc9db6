"""
準確度與財務指標
================

RMSE、MAE、WMAPE（以實際需求加權）以及依低估/高估成本計算的財務損失與提升。
"""

from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import DataValidationError, ShapeMismatchError


@dataclass(frozen=True)
class Metrics:
    """wmape 在實際需求總和為 0 時為 None"""

    rmse: float
    mae: float
    wmape: float | None
    n_obs: int

    def as_dict(self) -> dict[str, float | int | None]:
        return asdict(self)


def _pair(actuals: np.ndarray, forecasts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actuals, dtype=np.float64).ravel()
    y_hat = np.asarray(forecasts, dtype=np.float64).ravel()
    if y.shape != y_hat.shape:
        raise ShapeMismatchError("actuals vs forecasts", y.shape, y_hat.shape)
    if y.size == 0:
        raise DataValidationError("metrics need at least one observation")
    return y, y_hat


def compute_metrics(actuals: np.ndarray, forecasts: np.ndarray) -> Metrics:
    """
    計算合併觀測上的 RMSE、MAE、WMAPE

    wmape = Σ|y−ŷ| / Σy
    """
    y, y_hat = _pair(actuals, forecasts)
    error = y - y_hat
    absolute = np.abs(error)
    total = float(y.sum())
    return Metrics(
        rmse=float(np.sqrt(np.mean(error**2))),
        mae=float(absolute.mean()),
        wmape=float(absolute.sum() / total) if total != 0 else None,
        n_obs=int(y.size),
    )


def financial_loss(
    actuals: np.ndarray,
    forecasts: np.ndarray,
    cost_under: float,
    cost_over: float,
) -> float:
    """Σ cost_under·max(0, y−ŷ) + cost_over·max(0, ŷ−y)"""
    if cost_under <= 0 or cost_over <= 0:
        raise DataValidationError(
            f"costs must be positive, got under={cost_under}, over={cost_over}"
        )
    y, y_hat = _pair(actuals, forecasts)
    under = np.maximum(0.0, y - y_hat)
    over = np.maximum(0.0, y_hat - y)
    return float(cost_under * under.sum() + cost_over * over.sum())


def uplift(baseline_loss: float, candidate_loss: float) -> float | None:
    """相對基線的百分比改善；基線損失為 0 時為 None"""
    if baseline_loss == 0:
        return None
    return 100.0 * (baseline_loss - candidate_loss) / baseline_loss


def percent_change(baseline: float, candidate: float) -> float | None:
    """100·(candidate − baseline)/baseline；基線為 0 時為 None"""
    if baseline == 0:
        return None
    return 100.0 * (candidate - baseline) / baseline
