"""
Student-t 似然
==============

位置-尺度 Student-t 分佈的參數容器、負對數似然（含非對稱加權）與取樣。
參數以需求單位表示；ν > 2 保證方差 s²·ν/(ν−2) 有限。
"""

from dataclasses import dataclass

import numpy as np
import torch
from scipy import stats

from ..exceptions import DataValidationError


MIN_DOF = 2.0


@dataclass(frozen=True, eq=False)
class TStudentParams:
    """逐步分佈參數 (μ, s, ν)，三者形狀相同"""

    loc: torch.Tensor
    scale: torch.Tensor
    dof: torch.Tensor

    def __post_init__(self) -> None:
        for name in ("loc", "scale", "dof"):
            value = getattr(self, name)
            if not isinstance(value, torch.Tensor):
                object.__setattr__(
                    self, name, torch.as_tensor(value, dtype=torch.float64)
                )
        if not (self.loc.shape == self.scale.shape == self.dof.shape):
            raise DataValidationError(
                f"parameter shapes differ: loc {tuple(self.loc.shape)}, "
                f"scale {tuple(self.scale.shape)}, dof {tuple(self.dof.shape)}"
            )
        with torch.no_grad():
            if not bool(torch.all(self.scale > 0)):
                raise DataValidationError("Student-t scale must be > 0")
            if not bool(torch.all(self.dof > MIN_DOF)):
                raise DataValidationError("Student-t degrees of freedom must be > 2")

    @property
    def variance(self) -> torch.Tensor:
        return self.scale**2 * self.dof / (self.dof - 2.0)

    def distribution(self) -> torch.distributions.StudentT:
        return torch.distributions.StudentT(self.dof, self.loc, self.scale)

    def detach_numpy(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            self.loc.detach().cpu().numpy().astype(np.float64),
            self.scale.detach().cpu().numpy().astype(np.float64),
            self.dof.detach().cpu().numpy().astype(np.float64),
        )


def t_nll(params: TStudentParams, y: torch.Tensor | float) -> torch.Tensor:
    """
    逐元素負對數似然 −log f(y; ν, μ, s)

    平均由呼叫端決定（訓練器對步驟與文章取平均）。
    """
    y = torch.as_tensor(y, dtype=params.loc.dtype, device=params.loc.device)
    return -params.distribution().log_prob(y)


def asymmetric_t_nll(
    params: TStudentParams,
    y: torch.Tensor | float,
    w_under: float = 1.0,
    w_over: float = 1.0,
) -> torch.Tensor:
    """
    依殘差符號加權的負對數似然

    y > μ（低估）乘 w_under，y < μ（高估）乘 w_over，y = μ 權重為 1。
    """
    if w_under <= 0 or w_over <= 0:
        raise DataValidationError(
            f"asymmetric weights must be positive, got {w_under}, {w_over}"
        )
    y = torch.as_tensor(y, dtype=params.loc.dtype, device=params.loc.device)
    nll = t_nll(params, y)
    if w_under == 1.0 and w_over == 1.0:
        return nll
    ones = torch.ones_like(nll)
    weight = torch.where(
        y > params.loc,
        ones * w_under,
        torch.where(y < params.loc, ones * w_over, ones),
    )
    return weight * nll


def sample_student_t(
    loc: np.ndarray | float,
    scale: np.ndarray | float,
    dof: np.ndarray | float,
    uniforms: np.ndarray,
    clamp_min: float | None = 0.0,
) -> np.ndarray:
    """
    以反 CDF 將均勻亂數轉為 Student-t 抽樣

    Args:
        uniforms: (0, 1) 內的均勻亂數，形狀可廣播到參數
        clamp_min: 抽樣下界（需求非負）；None 表示不截斷
    """
    u = np.clip(np.asarray(uniforms, dtype=np.float64), 1e-12, 1.0 - 1e-12)
    draws = stats.t.ppf(u, df=dof, loc=loc, scale=scale)
    if clamp_min is not None:
        draws = np.maximum(draws, clamp_min)
    return draws
