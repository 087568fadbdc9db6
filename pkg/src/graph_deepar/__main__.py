#!/usr/bin/env python3
"""
graph-deepar - 主程式入口
=========================

此檔案允許套件透過 `python -m graph_deepar` 或 `graph-deepar` 執行。

使用方法:
  graph-deepar synth-data --out-dir runs/demo          # 生成合成面板與 config.yaml
  graph-deepar build-graph --config runs/demo/config.yaml
  graph-deepar train --config runs/demo/config.yaml                    # DeepAR 基線
  graph-deepar train --config runs/demo/config.yaml --graph runs/demo/graph.csv
  graph-deepar evaluate --config runs/demo/config.yaml \\
      --model deepar=runs/demo/deepar.pt --model graphdeepar=runs/demo/graphdeepar.pt \\
      --graph runs/demo/graph.csv
  graph-deepar compare runs/a/metrics.csv runs/b/metrics.csv
  graph-deepar version

退出碼: 0 成功、1 失敗、2 用法錯誤、3 產物雜湊不一致。
錯誤以單行 `error type=... code=... id=... message="..."` 寫到 stderr。
"""

import argparse
import json
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import torch
import yaml
from sklearn.decomposition import PCA

from . import __author__, __version__
from .config import RunConfig, load_config
from .data.panel import PanelDataset, load_panel, split_time
from .data.synthetic import write_synthetic_panel
from .data.windows import make_windows, rolling_origins
from .debug import cli_debug_log as debug_log
from .evaluation.reports import (
    compare_models,
    group_report,
    read_report,
    render_report,
    render_runtime,
    runtime_report,
    write_report,
)
from .exceptions import ConfigurationError, DataValidationError, GraphDeepARError
from .graph.similarity import SimilarityGraph, graph_from_features, load_graph, save_graph
from .graph.stats import graph_stats
from .models.forecaster import (
    ForecastPaths,
    forecast_frame,
    keep_latest_origin,
    point_forecast,
    sample_forecast,
    sample_frame,
)
from .training.trainer import Checkpoint, train, write_history
from .utils.artifact_store import ArtifactStore, check_hash, meta_path_for, read_meta
from .utils.error_handler import ErrorHandler
from .utils.runtime_monitor import RuntimeMonitor, read_runtime, write_runtime


RUNTIME_FILE = "runtime.json"


def build_parser() -> argparse.ArgumentParser:
    """建立命令列解析器"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML 配置文件（預設讀取 GRAPH_DEEPAR_CONFIG）")
    common.add_argument("--seed", type=int, help="覆蓋配置中的 seed")
    common.add_argument("--out-dir", help="覆蓋配置中的輸出目錄")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="覆蓋單一配置鍵，可重複",
    )
    common.add_argument(
        "--force", action="store_true", help="允許混用 config 雜湊不同的產物"
    )

    parser = argparse.ArgumentParser(
        prog="graph-deepar",
        description="graph-deepar - 以文章相似度圖增強的機率需求預測",
    )
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    subparsers.add_parser("synth-data", parents=[common], help="生成合成面板數據")
    subparsers.add_parser("build-graph", parents=[common], help="建立餘弦相似度圖")

    train_parser = subparsers.add_parser("train", parents=[common], help="訓練模型")
    train_parser.add_argument("--graph", help="圖文件；省略時訓練 DeepAR 基線")
    train_parser.add_argument("--name", help="模型名稱（預設 deepar / graphdeepar）")

    forecast_parser = subparsers.add_parser(
        "forecast", parents=[common], help="從預測起點輸出分位數預測"
    )
    forecast_parser.add_argument("--model", required=True, help="[名稱=]檢查點路徑")
    forecast_parser.add_argument("--graph", help="圖文件（圖模式模型必需）")
    forecast_parser.add_argument(
        "--origin", type=int, help="最後觀測週（1 起算）；預設為可預測的最後一週"
    )

    evaluate_parser = subparsers.add_parser(
        "evaluate", parents=[common], help="在測試切分上滾動評估"
    )
    evaluate_parser.add_argument(
        "--model", action="append", required=True, help="[名稱=]檢查點路徑，可重複"
    )
    evaluate_parser.add_argument("--graph", help="圖文件（圖模式模型與 connected 分組）")

    compare_parser = subparsers.add_parser(
        "compare", parents=[common], help="並排比較指標報表"
    )
    compare_parser.add_argument("reports", nargs="+", help="metrics.csv 路徑")
    compare_parser.add_argument("--baseline", help="基線模型名稱")
    compare_parser.add_argument("--runtime", help="runtime.json，附加運行時間表")

    export_parser = subparsers.add_parser(
        "export-embeddings", parents=[common], help="導出節點嵌入"
    )
    export_parser.add_argument("--model", required=True, help="[名稱=]檢查點路徑")
    export_parser.add_argument("--graph", required=True, help="圖文件")
    export_parser.add_argument("--week", type=int, help="錨點週（1 起算）；預設最後一週")
    export_parser.add_argument(
        "--projection", action="store_true", help="同時輸出 2 維 PCA 投影"
    )

    subparsers.add_parser("version", help="顯示版本資訊")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """主程式入口點"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    if args.command == "version":
        show_version()
        return 0

    handler = COMMANDS[args.command]
    try:
        config = _config_from_args(args)
        handler(args, config)
    except Exception as e:
        response = ErrorHandler.create_error_response(
            e, context={"operation": f"命令 {args.command}"}
        )
        error_id = response["error_id"]
        print(ErrorHandler.format_machine_error(e, error_id), file=sys.stderr)
        debug_log(response["message"])
        for solution in response.get("solutions", []):
            debug_log(f"建議: {solution}")
        if not isinstance(e, GraphDeepARError | ValueError | OSError):
            debug_log(f"未預期的錯誤 [錯誤ID: {error_id}]: {e!r}")
        return response["exit_code"]
    return 0


def show_version() -> None:
    """顯示版本資訊"""
    print(f"graph-deepar v{__version__}")
    print(f"作者: {__author__}")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        return load_config(
            args.config, args.overrides, seed=args.seed, out_dir=args.out_dir
        )
    return RunConfig.from_env(args.overrides, seed=args.seed, out_dir=args.out_dir)


def _parse_model_spec(text: str) -> tuple[str, Path]:
    """`名稱=路徑` 或 `路徑`（名稱取檔名主幹）"""
    if "=" in text:
        name, path = text.split("=", 1)
        if not name:
            raise ConfigurationError(f"empty model name in {text!r}")
        return name, Path(path)
    return Path(text).stem, Path(text)


def _load_panel(config: RunConfig) -> PanelDataset:
    d = config.data
    if not d.demand_file or not d.static_file:
        raise ConfigurationError("data.demand_file and data.static_file must be set")
    return load_panel(
        d.demand_file,
        d.static_file,
        config.feature_schema(),
        min_demand_std=d.min_demand_std,
        future_steps=d.future_steps,
        name=d.name,
    )


def _artifact_config_hash(path: Path) -> str | None:
    if not meta_path_for(path).exists():
        return None
    return read_meta(path).get("config_hash")


def _load_graph_artifact(
    path: str, data: PanelDataset, config: RunConfig, force: bool
) -> SimilarityGraph:
    graph = load_graph(path)
    check_hash("feature schema", data.schema_hash, graph.schema_hash)
    if not force:
        check_hash("config", config.config_hash(), _artifact_config_hash(Path(path)))
    if graph.article_ids is not None and graph.article_ids != data.article_ids:
        raise DataValidationError("graph articles differ from the loaded panel")
    return graph


def _load_checkpoint(
    path: Path, data: PanelDataset, config: RunConfig, force: bool
) -> Checkpoint:
    checkpoint = Checkpoint.load(path)
    check_hash("feature schema", data.schema_hash, checkpoint.schema_hash)
    if not force:
        check_hash("config", config.config_hash(), checkpoint.config_hash)
    return checkpoint


def _sample_paths(
    checkpoint: Checkpoint,
    data: PanelDataset,
    anchors: Sequence[int],
    config: RunConfig,
    graph: SimilarityGraph | None,
    name: str,
) -> ForecastPaths:
    model = checkpoint.build_model()
    decoder = model.decoder_config
    extra = checkpoint.node_lag_depth - 1 if checkpoint.graph_mode else 0
    windows = make_windows(
        data,
        decoder.context_length,
        decoder.horizon,
        anchors=anchors,
        require_horizon=False,
        extra_history=extra,
    )
    if len(windows) == 0:
        raise DataValidationError(f"no forecast origins with full context for {name}")
    if checkpoint.graph_mode and graph is None:
        raise ConfigurationError(f"model {name} was trained with a graph; pass --graph")
    return sample_forecast(
        model,
        data,
        windows,
        config.forecast.n_samples,
        config.seed,
        graph if checkpoint.graph_mode else None,
    )


def _forecast_table(
    data: PanelDataset, paths: ForecastPaths, config: RunConfig
) -> pd.DataFrame:
    frame = forecast_frame(data, paths, config.forecast.quantiles)
    if config.forecast.point == "median":
        frame["median"] = point_forecast(paths.paths, "median").reshape(-1)
    return frame


def _write_frame(
    store: ArtifactStore, name: str, frame: pd.DataFrame, kind: str, **kwargs: Any
) -> Path:
    return store.write(
        name,
        lambda p: frame.to_csv(p, index=False, float_format="%.10g"),
        kind=kind,
        **kwargs,
    )


def cmd_synth_data(args: argparse.Namespace, config: RunConfig) -> None:
    """生成合成面板、集群標籤與可直接使用的 config.yaml"""
    spec = config.synthetic_spec()
    out_dir = Path(config.out_dir)
    paths = write_synthetic_panel(spec, out_dir / "data")

    document = config.model_dump()
    document["data"].update(
        demand_file=str(paths["demand"].resolve()),
        static_file=str(paths["static"].resolve()),
        schema_file=str(paths["schema"].resolve()),
    )
    if document["data"]["name"] == "panel":
        document["data"]["name"] = "synthetic"
    document["out_dir"] = str(out_dir)
    store = ArtifactStore(out_dir, RunConfig.model_validate(document).config_hash())
    config_path = store.write_text(
        "config.yaml", yaml.safe_dump(document, sort_keys=False), kind="config"
    )
    for key, path in paths.items():
        print(f"{key}: {path}")
    print(f"config: {config_path}")


def cmd_build_graph(args: argparse.Namespace, config: RunConfig) -> None:
    """從靜態特徵建圖並輸出邊文件與統計"""
    data = _load_panel(config)
    g = config.graph
    graph = graph_from_features(
        data.static_features,
        threshold=g.threshold,
        chunk_size=g.chunk_size,
        max_workers=g.max_workers,
        article_ids=data.article_ids,
        schema_hash=data.schema_hash,
    )
    stats = graph_stats(graph)
    store = ArtifactStore(config.out_dir, config.config_hash())
    save_graph(graph, store)
    store.write_text(
        "graph_stats.json",
        json.dumps(stats.as_dict(), indent=2, sort_keys=True),
        kind="graph_stats",
        schema_hash=graph.schema_hash,
    )
    print(stats.render())


def cmd_train(args: argparse.Namespace, config: RunConfig) -> None:
    """訓練 DeepAR（無 --graph）或 GraphDeepAR，輸出檢查點與歷史"""
    data = _load_panel(config)
    train_data, val_data, _ = split_time(data, config.split_spec())
    graph = _load_graph_artifact(args.graph, data, config, args.force) if args.graph else None
    graph_mode = graph is not None
    name = args.name or ("graphdeepar" if graph_mode else "deepar")
    config_hash = config.config_hash()

    with RuntimeMonitor("train") as monitor:
        result = train(
            train_data,
            val_data,
            config.decoder_config(),
            config.train_config(graph_mode),
            graph=graph,
            encoder_config=config.encoder_config() if graph_mode else None,
            config_hash=config_hash,
            run_config=config.model_dump(),
        )

    store = ArtifactStore(config.out_dir, config_hash)
    checkpoint = result.checkpoint
    extra = {"model": name, "graph_mode": graph_mode, "best_epoch": checkpoint.best_epoch}
    store.write(
        f"{name}.pt",
        checkpoint.save,
        kind="checkpoint",
        schema_hash=checkpoint.schema_hash,
        extra=extra,
    )
    store.write(
        f"{name}_history.csv",
        lambda p: write_history(result.history, p),
        kind="history",
        extra=extra,
    )
    if monitor.snapshot is not None:
        write_runtime(store.path(RUNTIME_FILE), name, [monitor.snapshot])

    inventory = checkpoint.parameter_inventory()
    encoder_params = sum(
        int(np.prod(shape)) for key, shape in inventory.items() if key.startswith("encoder.")
    )
    print(
        f"model={name} best_epoch={checkpoint.best_epoch} epochs={len(result.history)} "
        f"train_windows={result.n_train_windows} val_windows={result.n_val_windows} "
        f"encoder_parameters={encoder_params} "
        f"leakage_violations={len(result.audit.violations)}"
    )


def cmd_forecast(args: argparse.Namespace, config: RunConfig) -> None:
    """從單一預測起點輸出 `article_id,week,q…,mean`"""
    data = _load_panel(config)
    name, path = _parse_model_spec(args.model)
    checkpoint = _load_checkpoint(path, data, config, args.force)
    graph = _load_graph_artifact(args.graph, data, config, args.force) if args.graph else None

    horizon = int(checkpoint.decoder_config["horizon"])
    last_anchor = min(data.n_weeks - 1, data.n_weeks - 1 + data.future_steps - horizon)
    anchor = last_anchor if args.origin is None else args.origin - 1
    if not 0 <= anchor <= last_anchor:
        raise ConfigurationError(
            f"origin week {anchor + 1} outside [1, {last_anchor + 1}] for horizon {horizon}"
        )

    with RuntimeMonitor("inference") as monitor:
        paths = _sample_paths(checkpoint, data, [anchor], config, graph, name)
    store = ArtifactStore(config.out_dir, config.config_hash())
    extra = {"model": name, "origin_week": anchor + 1}
    _write_frame(
        store,
        f"{name}_forecast.csv",
        _forecast_table(data, paths, config),
        kind="forecast",
        schema_hash=data.schema_hash,
        extra=extra,
    )
    if config.forecast.export_samples:
        _write_frame(
            store, f"{name}_samples.csv", sample_frame(data, paths), kind="samples", extra=extra
        )
    if monitor.snapshot is not None:
        write_runtime(store.path(RUNTIME_FILE), name, [monitor.snapshot])
    print(f"model={name} origin_week={anchor + 1} windows={len(paths.anchors)}")


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> None:
    """
    在測試切分上以步長 K 的滾動起點評估各模型

    測試週數不是 K 的倍數時追加最後一個起點；重疊週只計最晚起點的預測。
    """
    data = _load_panel(config)
    _, _, test = split_time(data, config.split_spec())
    graph = _load_graph_artifact(args.graph, data, config, args.force) if args.graph else None
    store = ArtifactStore(config.out_dir, config.config_hash())

    forecasts: dict[str, pd.DataFrame] = {}
    for spec in args.model:
        name, path = _parse_model_spec(spec)
        if name in forecasts:
            raise ConfigurationError(f"model name {name!r} given twice")
        checkpoint = _load_checkpoint(path, data, config, args.force)
        horizon = int(checkpoint.decoder_config["horizon"])
        origins = rolling_origins(test.span_start, test.n_weeks, horizon)
        with RuntimeMonitor("inference") as monitor:
            paths = _sample_paths(checkpoint, test, origins, config, graph, name)
        frame = keep_latest_origin(_forecast_table(test, paths, config))
        forecasts[name] = frame
        _write_frame(
            store,
            f"{name}_test_forecast.csv",
            frame,
            kind="forecast",
            schema_hash=data.schema_hash,
            extra={"model": name},
        )
        if monitor.snapshot is not None:
            write_runtime(store.path(RUNTIME_FILE), name, [monitor.snapshot])
        debug_log(f"{name}: {len(origins)} 個起點, {len(frame)} 行預測")

    report = group_report(
        test,
        graph,
        forecasts,
        top_n=config.evaluation.top_n,
        point_column=config.forecast.point,
        min_history=config.evaluation.min_history,
        costs=config.costs(),
        baseline=config.evaluation.baseline,
        config_hash=config.config_hash(),
    )
    store.write(
        "metrics.csv",
        lambda p: write_report(report, p),
        kind="metrics",
        schema_hash=data.schema_hash,
        extra={"models": report.models},
    )
    summary = {
        "groups": {name: len(members) for name, members in report.groups.items()},
        "notes": report.notes,
        "financial_loss": report.financial_loss,
        "uplift": report.uplift,
        "group_summary": vars(report.summary) if report.summary else None,
    }
    store.write_text(
        "metrics_summary.json",
        json.dumps(summary, indent=2, sort_keys=True),
        kind="metrics_summary",
    )
    print(render_report(report))


def cmd_compare(args: argparse.Namespace, config: RunConfig) -> None:
    """並排比較 metrics.csv；config 雜湊不同時拒絕（除非 --force）"""
    reports = [
        read_report(path, config_hash=_artifact_config_hash(Path(path)))
        for path in args.reports
    ]
    baseline = args.baseline or config.evaluation.baseline
    table = compare_models(reports, baseline=baseline, force=args.force)
    store = ArtifactStore(config.out_dir, reports[0].config_hash or config.config_hash())
    _write_frame(store, "comparison.csv", table.to_frame(), kind="comparison")
    print(table.render())

    if args.runtime:
        timings = {
            model: entry
            for model, entry in read_runtime(Path(args.runtime)).items()
            if "train_minutes" in entry and "inference_minutes" in entry
        }
        if timings:
            base = table.baseline if table.baseline in timings else None
            print()
            print(render_runtime(runtime_report(timings, base)))


def cmd_export_embeddings(args: argparse.Namespace, config: RunConfig) -> None:
    """
    導出錨點週的節點嵌入（上下文最後一步），可選 2 維 PCA 投影

    輸出 `article_id,week,dim_0..dim_{D-1}`，每篇文章一行，week 為錨點週標籤。
    """
    data = _load_panel(config)
    name, path = _parse_model_spec(args.model)
    checkpoint = _load_checkpoint(path, data, config, args.force)
    if not checkpoint.graph_mode:
        raise ConfigurationError(f"model {name} has no graph encoder")
    graph = _load_graph_artifact(args.graph, data, config, args.force).without_sampling()
    anchor = (args.week or data.n_weeks) - 1

    model = checkpoint.build_model()
    with torch.no_grad():
        embeddings = model.node_embeddings(data, graph, anchor)[:, -1, :]
    values = embeddings.detach().cpu().numpy().astype(np.float64)

    frame = pd.DataFrame(values, columns=[f"dim_{k}" for k in range(values.shape[1])])
    frame.insert(0, "week", data.week_label(anchor))
    frame.insert(0, "article_id", data.article_ids)
    store = ArtifactStore(config.out_dir, config.config_hash())
    extra = {"model": name, "week": anchor + 1}
    _write_frame(store, f"{name}_embeddings.csv", frame, kind="embeddings", extra=extra)

    if args.projection:
        if values.shape[0] < 2:
            raise DataValidationError("projection needs at least two articles")
        n_components = min(2, values.shape[0], values.shape[1])
        coords = PCA(n_components=n_components, random_state=config.seed).fit_transform(values)
        if n_components < 2:
            coords = np.column_stack([coords, np.zeros(len(coords))])
        projection = pd.DataFrame(
            {"article_id": data.article_ids, "x": coords[:, 0], "y": coords[:, 1]}
        )
        _write_frame(
            store, f"{name}_projection.csv", projection, kind="projection", extra=extra
        )
    print(f"model={name} week={anchor + 1} articles={values.shape[0]} dim={values.shape[1]}")


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], None]] = {
    "synth-data": cmd_synth_data,
    "build-graph": cmd_build_graph,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "export-embeddings": cmd_export_embeddings,
}


if __name__ == "__main__":
    sys.exit(main())
