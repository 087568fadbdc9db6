"""
評估模組
========

準確度/財務指標、分組報表、模型比較與運行時間表。
"""

from .metrics import Metrics, compute_metrics, financial_loss, percent_change, uplift
from .reports import (
    GROUP_ALL,
    GROUP_COLD,
    GROUP_CONNECTED,
    REPORT_COLUMNS,
    ComparisonRow,
    ComparisonTable,
    GroupSummary,
    MetricsReport,
    MetricsRow,
    RuntimeRow,
    actuals_frame,
    compare_models,
    group_report,
    read_report,
    render_report,
    render_runtime,
    runtime_report,
    top_group_name,
    write_report,
)


__all__ = [
    "GROUP_ALL",
    "GROUP_COLD",
    "GROUP_CONNECTED",
    "REPORT_COLUMNS",
    "ComparisonRow",
    "ComparisonTable",
    "GroupSummary",
    "Metrics",
    "MetricsReport",
    "MetricsRow",
    "RuntimeRow",
    "actuals_frame",
    "compare_models",
    "compute_metrics",
    "financial_loss",
    "group_report",
    "percent_change",
    "read_report",
    "render_report",
    "render_runtime",
    "runtime_report",
    "top_group_name",
    "uplift",
    "write_report",
]
