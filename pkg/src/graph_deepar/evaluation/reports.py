"""
評估報表
========

- group_report: 整體與分組（冷啟動、有連邊、銷量前 n）指標，合併 (文章, 週) 觀測
- compare_models: 多模型並排、逐 (分組, 指標) 的最佳標記與相對基線百分比
- runtime_report: 訓練/推論分鐘數與總時間百分比差異
- write_report / read_report: `dataset,group,model,rmse,mae,wmape,n_obs`
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..data.panel import PanelDataset, flag_cold_starts
from ..debug import eval_debug_log as debug_log
from ..exceptions import ArtifactError, ConfigurationError, DataValidationError
from ..graph.similarity import SimilarityGraph
from ..utils.artifact_store import check_hash
from .metrics import compute_metrics, financial_loss, percent_change, uplift


REPORT_COLUMNS = ["dataset", "group", "model", "rmse", "mae", "wmape", "n_obs"]
METRIC_NAMES = ("rmse", "mae", "wmape")
GROUP_ALL = "all"
GROUP_COLD = "cold_start"
GROUP_CONNECTED = "connected"


def top_group_name(top_n: int) -> str:
    return f"top_{top_n}"


@dataclass(frozen=True)
class MetricsRow:
    group: str
    model: str
    rmse: float
    mae: float
    wmape: float | None
    n_obs: int


@dataclass(frozen=True)
class GroupSummary:
    """分組描述統計；需要圖的欄位在沒有圖時為 None"""

    n_articles: int
    cold_start_share: float
    cold_start_demand_std: float | None
    cold_start_mean_neighbors: float | None
    carry_over_mean_neighbors: float | None


@dataclass
class MetricsReport:
    dataset: str
    rows: list[MetricsRow]
    groups: dict[str, list[str]] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    financial_loss: dict[str, float] = field(default_factory=dict)
    uplift: dict[str, float | None] = field(default_factory=dict)
    summary: GroupSummary | None = None
    config_hash: str | None = None

    @property
    def models(self) -> list[str]:
        return list(dict.fromkeys(r.model for r in self.rows))

    @property
    def group_names(self) -> list[str]:
        return list(dict.fromkeys(r.group for r in self.rows))

    def row(self, group: str, model: str) -> MetricsRow | None:
        for r in self.rows:
            if r.group == group and r.model == model:
                return r
        return None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "dataset": self.dataset,
                    "group": r.group,
                    "model": r.model,
                    "rmse": r.rmse,
                    "mae": r.mae,
                    "wmape": r.wmape,
                    "n_obs": r.n_obs,
                }
                for r in self.rows
            ],
            columns=REPORT_COLUMNS,
        )


def actuals_frame(data: PanelDataset) -> pd.DataFrame:
    """切分擁有的週中已觀測的需求：article_id, week, actual"""
    weeks = np.arange(data.span_start, data.n_weeks)
    mask = data.availability_mask[:, weeks]
    rows, cols = np.nonzero(mask)
    return pd.DataFrame(
        {
            "article_id": np.asarray(data.article_ids)[rows],
            "week": [str(data.week_label(int(weeks[c]))) for c in cols],
            "actual": data.demand[rows, weeks[cols]],
        }
    )


def _pairs(
    actuals: pd.DataFrame, forecast: pd.DataFrame, point_column: str
) -> pd.DataFrame:
    if point_column not in forecast.columns:
        raise DataValidationError(
            f"forecast table has no column {point_column!r}: {list(forecast.columns)}"
        )
    right = forecast[["article_id", "week", point_column]].copy()
    right["article_id"] = right["article_id"].astype(str)
    right["week"] = right["week"].astype(str)
    right = right.rename(columns={point_column: "forecast"})
    if right.duplicated(["article_id", "week"]).any():
        raise DataValidationError("forecast table repeats (article_id, week) pairs")
    return actuals.merge(right, on=["article_id", "week"], how="inner")


def _unscored_articles(
    actuals: pd.DataFrame, pairs: pd.DataFrame, members: Sequence[str]
) -> int:
    """members 中至少有一個已觀測測試週沒有預測的文章數"""
    expected = actuals[actuals["article_id"].isin(members)].groupby("article_id").size()
    scored = pairs.groupby("article_id").size().reindex(expected.index, fill_value=0)
    return int((expected > scored).sum())


def _groups(
    data: PanelDataset,
    graph: SimilarityGraph | None,
    top_n: int,
    min_history: int,
    notes: list[str],
) -> tuple[dict[str, list[str]], np.ndarray]:
    ids = np.asarray(data.article_ids)
    cold = flag_cold_starts(data, data.span_start + 1, min_history)
    groups: dict[str, list[str]] = {
        GROUP_ALL: ids.tolist(),
        GROUP_COLD: ids[cold].tolist(),
    }

    if graph is None:
        notes.append("connected group omitted: no graph supplied")
    elif graph.n_nodes != data.n_articles or (
        graph.article_ids is not None and graph.article_ids != data.article_ids
    ):
        notes.append("connected group omitted: graph articles differ from the panel")
    else:
        groups[GROUP_CONNECTED] = ids[graph.degree >= 1].tolist()

    owned = slice(data.span_start, data.n_weeks)
    totals = np.where(
        data.availability_mask[:, owned], data.demand[:, owned], 0.0
    ).sum(axis=1)
    order = np.lexsort((ids, -totals))
    groups[top_group_name(top_n)] = ids[order[:top_n]].tolist()

    for name, members in groups.items():
        if not members:
            notes.append(f"group {name} is empty")
    return groups, cold


def _summary(
    data: PanelDataset, graph: SimilarityGraph | None, cold: np.ndarray
) -> GroupSummary:
    owned = slice(data.span_start, data.n_weeks)
    cold_values = data.demand[:, owned][cold][data.availability_mask[:, owned][cold]]
    cold_neighbors = carry_neighbors = None
    if graph is not None and graph.n_nodes == data.n_articles:
        degree = graph.degree.astype(np.float64)
        if cold.any():
            cold_neighbors = float(degree[cold].mean())
        if (~cold).any():
            carry_neighbors = float(degree[~cold].mean())
    return GroupSummary(
        n_articles=data.n_articles,
        cold_start_share=float(cold.mean()) if cold.size else 0.0,
        cold_start_demand_std=float(cold_values.std()) if cold_values.size else None,
        cold_start_mean_neighbors=cold_neighbors,
        carry_over_mean_neighbors=carry_neighbors,
    )


def group_report(
    data: PanelDataset,
    graph: SimilarityGraph | None,
    forecasts: Mapping[str, pd.DataFrame],
    top_n: int = 100,
    point_column: str = "mean",
    min_history: int = 5,
    costs: tuple[float, float] | None = None,
    baseline: str | None = None,
    config_hash: str | None = None,
) -> MetricsReport:
    """
    分組指標報表

    Args:
        data: 測試切分（指標只計其擁有的週）
        graph: 相似度圖；None 時省略 connected 分組並記錄說明
        forecasts: 模型名稱 → 預測表（article_id, week, point_column）
        top_n: 依測試期實際總需求排序的前 n 篇文章，同值按 article_id
        costs: (cost_under, cost_over)；提供時計算財務損失與相對 baseline 的提升
        baseline: 提升計算的基線模型；預設為第一個模型
    """
    if not forecasts:
        raise ConfigurationError("group_report needs at least one model forecast")
    if top_n < 1:
        raise ConfigurationError(f"top_n must be ≥ 1, got {top_n}")

    notes: list[str] = []
    groups, cold = _groups(data, graph, top_n, min_history, notes)
    actuals = actuals_frame(data)
    rows: list[MetricsRow] = []
    losses: dict[str, float] = {}

    for model, forecast in forecasts.items():
        pairs = _pairs(actuals, forecast, point_column)
        missing = len(actuals) - len(pairs)
        if missing:
            notes.append(f"{model}: {missing} observed test cells have no forecast")
            unscored = _unscored_articles(actuals, pairs, groups[GROUP_COLD])
            if unscored:
                notes.append(
                    f"{model}: {unscored} cold-start articles lack a full context "
                    "window at some origins; those weeks are not scored"
                )
        for name, members in groups.items():
            subset = pairs[pairs["article_id"].isin(members)]
            if subset.empty:
                continue
            metrics = compute_metrics(subset["actual"], subset["forecast"])
            rows.append(
                MetricsRow(
                    group=name,
                    model=model,
                    rmse=metrics.rmse,
                    mae=metrics.mae,
                    wmape=metrics.wmape,
                    n_obs=metrics.n_obs,
                )
            )
        if costs is not None and not pairs.empty:
            losses[model] = financial_loss(
                pairs["actual"], pairs["forecast"], costs[0], costs[1]
            )

    uplifts: dict[str, float | None] = {}
    if losses:
        base = baseline or next(iter(forecasts))
        if base not in losses:
            raise ConfigurationError(f"baseline model {base!r} has no forecasts")
        uplifts = {
            model: uplift(losses[base], loss)
            for model, loss in losses.items()
            if model != base
        }

    report = MetricsReport(
        dataset=data.name,
        rows=rows,
        groups=groups,
        notes=notes,
        financial_loss=losses,
        uplift=uplifts,
        summary=_summary(data, graph, cold),
        config_hash=config_hash,
    )
    debug_log(
        f"分組報表: {len(forecasts)} 個模型, 分組 {list(groups)}, {len(rows)} 行"
    )
    return report


@dataclass(frozen=True)
class ComparisonRow:
    group: str
    metric: str
    model: str
    value: float | None
    delta_pct: float | None
    best: bool


@dataclass
class ComparisonTable:
    baseline: str
    rows: list[ComparisonRow]
    notes: list[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(r) for r in self.rows],
            columns=["group", "metric", "model", "value", "delta_pct", "best"],
        )

    def delta(self, group: str, metric: str, model: str) -> float | None:
        for r in self.rows:
            if (r.group, r.metric, r.model) == (group, metric, model):
                return r.delta_pct
        raise KeyError((group, metric, model))

    def render(self) -> str:
        """人類可讀表格；最佳值以 * 標記（越低越好）"""
        models = list(dict.fromkeys(r.model for r in self.rows))
        header = f"{'group':<14}{'metric':<8}" + "".join(f"{m:>22}" for m in models)
        lines = [header, "-" * len(header)]
        keys = list(dict.fromkeys((r.group, r.metric) for r in self.rows))
        for group, metric in keys:
            cells = []
            for m in models:
                row = next(
                    r for r in self.rows if (r.group, r.metric, r.model) == (group, metric, m)
                )
                if row.value is None:
                    text = "-"
                else:
                    text = f"{row.value:.4f}"
                    if row.delta_pct is not None and m != self.baseline:
                        text += f" ({row.delta_pct:+.2f}%)"
                    if row.best:
                        text = "*" + text
                cells.append(f"{text:>22}")
            lines.append(f"{group:<14}{metric:<8}" + "".join(cells))
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def compare_models(
    reports: Sequence[MetricsReport] | Mapping[str, MetricsReport],
    baseline: str | None = None,
    force: bool = False,
) -> ComparisonTable:
    """
    並排比較多個模型

    Args:
        reports: 各模型的報表（一份報表可含多個模型）
        baseline: 百分比差異的基線模型；預設為第一個模型
        force: 允許 config 雜湊不同的報表混合比較

    Raises:
        ConfigurationError: 模型之間沒有共同分組
        SchemaMismatchError: config 雜湊不一致且未指定 force
    """
    report_list = list(reports.values()) if isinstance(reports, Mapping) else list(reports)
    if not report_list:
        raise ConfigurationError("compare_models needs at least one report")

    if not force:
        hashes = [r.config_hash for r in report_list if r.config_hash]
        for other in hashes[1:]:
            check_hash("config", hashes[0], other)

    values: dict[tuple[str, str], MetricsRow] = {}
    model_groups: dict[str, list[str]] = {}
    for report in report_list:
        for row in report.rows:
            values[(row.group, row.model)] = row
            model_groups.setdefault(row.model, [])
            if row.group not in model_groups[row.model]:
                model_groups[row.model].append(row.group)

    models = list(model_groups)
    base = baseline or models[0]
    if base not in model_groups:
        raise ConfigurationError(f"baseline model {base!r} not found in reports")

    shared = [
        g for g in model_groups[base] if all(g in model_groups[m] for m in models)
    ]
    if not shared:
        raise ConfigurationError(f"reports share no groups: {model_groups}")
    notes = []
    all_groups = set().union(*map(set, model_groups.values()))
    if len(all_groups) > len(shared):
        notes.append(f"groups not shared by every model skipped: {sorted(all_groups - set(shared))}")

    rows: list[ComparisonRow] = []
    for group in shared:
        for metric in METRIC_NAMES:
            metric_values = {m: getattr(values[(group, m)], metric) for m in models}
            present = [v for v in metric_values.values() if v is not None]
            best_value = min(present) if present else None
            base_value = metric_values[base]
            for m in models:
                value = metric_values[m]
                delta = None
                if value is not None and base_value is not None:
                    delta = percent_change(base_value, value)
                rows.append(
                    ComparisonRow(
                        group=group,
                        metric=metric,
                        model=m,
                        value=value,
                        delta_pct=delta,
                        best=value is not None and value == best_value,
                    )
                )
    return ComparisonTable(baseline=base, rows=rows, notes=notes)


@dataclass(frozen=True)
class RuntimeRow:
    model: str
    train_minutes: float
    inference_minutes: float
    total_minutes: float
    total_difference_pct: float | None


def runtime_report(
    timings: Mapping[str, Mapping[str, float]], baseline: str | None = None
) -> list[RuntimeRow]:
    """
    運行時間表

    Args:
        timings: 模型 → {train_minutes, inference_minutes}
        baseline: 總時間差異的基線；預設為第一個模型
    """
    if not timings:
        raise ConfigurationError("runtime_report needs at least one model")
    base = baseline or next(iter(timings))
    if base not in timings:
        raise ConfigurationError(f"baseline model {base!r} has no timings")

    def total(entry: Mapping[str, float]) -> float:
        train_m, infer_m = float(entry["train_minutes"]), float(entry["inference_minutes"])
        if train_m < 0 or infer_m < 0:
            raise DataValidationError(f"timings must be non-negative, got {dict(entry)}")
        return train_m + infer_m

    base_total = total(timings[base])
    rows = []
    for model, entry in timings.items():
        model_total = total(entry)
        rows.append(
            RuntimeRow(
                model=model,
                train_minutes=float(entry["train_minutes"]),
                inference_minutes=float(entry["inference_minutes"]),
                total_minutes=model_total,
                total_difference_pct=percent_change(base_total, model_total),
            )
        )
    return rows


def render_runtime(rows: list[RuntimeRow]) -> str:
    lines = [f"{'model':<16}{'train':>10}{'inference':>12}{'total':>10}{'diff':>10}"]
    for r in rows:
        diff = "-" if r.total_difference_pct is None else f"{r.total_difference_pct:+.2f}%"
        lines.append(
            f"{r.model:<16}{r.train_minutes:>10.2f}{r.inference_minutes:>12.2f}"
            f"{r.total_minutes:>10.2f}{diff:>10}"
        )
    return "\n".join(lines)


def write_report(report: MetricsReport, path: Path | str) -> None:
    report.to_frame().to_csv(path, index=False, float_format="%.10g")


def read_report(path: Path | str, config_hash: str | None = None) -> MetricsReport:
    """讀取 write_report 的輸出"""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"report not found: {path}", file_path=str(path))
    frame = pd.read_csv(path, dtype={"group": str, "model": str, "dataset": str})
    if list(frame.columns) != REPORT_COLUMNS:
        raise ArtifactError(
            f"report header must be {','.join(REPORT_COLUMNS)}, got {list(frame.columns)}"
        )
    rows = [
        MetricsRow(
            group=r.group,
            model=r.model,
            rmse=float(r.rmse),
            mae=float(r.mae),
            wmape=None if pd.isna(r.wmape) else float(r.wmape),
            n_obs=int(r.n_obs),
        )
        for r in frame.itertuples(index=False)
    ]
    dataset = str(frame["dataset"].iloc[0]) if len(frame) else ""
    return MetricsReport(dataset=dataset, rows=rows, config_hash=config_hash)


def render_report(report: MetricsReport) -> str:
    """人類可讀的報表表格"""
    header = f"{'group':<14}{'model':<16}{'rmse':>12}{'mae':>12}{'wmape':>10}{'n_obs':>8}"
    lines = [f"dataset: {report.dataset}", header, "-" * len(header)]
    for r in report.rows:
        wmape = "-" if r.wmape is None else f"{r.wmape:.4f}"
        lines.append(
            f"{r.group:<14}{r.model:<16}{r.rmse:>12.4f}{r.mae:>12.4f}{wmape:>10}{r.n_obs:>8}"
        )
    for model, loss in report.financial_loss.items():
        lines.append(f"financial loss {model}: {loss:.2f}")
    for model, value in report.uplift.items():
        lines.append(
            f"uplift {model}: {'-' if value is None else f'{value:.2f}%'}"
        )
    if report.summary is not None:
        s = report.summary
        lines.append(
            f"cold starts: {s.cold_start_share:.1%} of {s.n_articles} articles"
        )
    lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines)
