"""
訓練器
======

端到端訓練 (Graph)DeepAR：

- 每個 epoch 以新 seed 重新採樣鄰域（圖模式）並重新洗牌批次
- 最小化 (非對稱) Student-t 負對數似然的平均值，全域梯度範數裁剪
- 以驗證集預測步驟的平均 NLL 做早停，返回最佳 epoch 的檢查點
- num_workers=0 為單線程確定模式，相同 seed 的兩次訓練結果相同
"""

import copy
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import torch

from ..data.panel import PanelDataset
from ..data.windows import WindowSet, make_windows
from ..debug import train_debug_log as debug_log
from ..debug import warn_data_quality
from ..exceptions import (
    ArtifactError,
    ConfigurationError,
    DataValidationError,
    TrainingDivergenceError,
)
from ..graph.node_features import DemandAccessAudit, window_node_features
from ..graph.sampling import epoch_seed, sample_neighborhood
from ..graph.similarity import SimilarityGraph
from ..models.decoder import DecoderConfig, DecoderInputs, build_decoder_inputs
from ..models.encoder import EncoderConfig, MessageIndex
from ..models.forecaster import GraphDeepAR
from ..models.likelihood import asymmetric_t_nll, t_nll
from ..utils.artifact_store import check_hash
from ..utils.error_handler import ErrorHandler, ErrorType
from .batching import (
    BatchProducer,
    WindowBatch,
    anchor_batches,
    random_batches,
    synchronized_batches,
)
from .optimizers import build_optimizer


BATCH_MODES = ("random", "synchronized")
DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class GraphOptions:
    threshold: float = 0.95
    max_neighbors: int = 10
    node_lag_depth: int = 1

    def __post_init__(self) -> None:
        if self.max_neighbors < 0:
            raise ConfigurationError(f"max_neighbors must be ≥ 0, got {self.max_neighbors}")
        if self.node_lag_depth < 1:
            raise ConfigurationError(
                f"node_lag_depth must be ≥ 1, got {self.node_lag_depth}"
            )


@dataclass
class TrainConfig:
    """訓練配置；batch_mode 未指定時圖模式為 synchronized，否則 random"""

    max_epochs: int = 50
    early_stopping_patience: int = 5
    learning_rate: float = 5e-3
    batch_size: int = 32
    batch_mode: str | None = None
    optimizer: str = "adam"
    optimizer_settings: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    graph: GraphOptions | None = None
    grad_clip: float | None = 10.0
    w_under: float = 1.0
    w_over: float = 1.0
    num_workers: int = 0
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.batch_mode is None:
            self.batch_mode = "synchronized" if self.graph is not None else "random"
        if self.batch_mode not in BATCH_MODES:
            raise ConfigurationError(f"unknown batch_mode {self.batch_mode!r}")
        if self.graph is not None and self.batch_mode != "synchronized":
            raise ConfigurationError("graph training requires synchronized batching")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be ≥ 1, got {self.max_epochs}")
        if not 1 <= self.early_stopping_patience <= self.max_epochs:
            raise ConfigurationError(
                f"patience must lie in [1, max_epochs], got {self.early_stopping_patience}"
            )
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be ≥ 1, got {self.batch_size}")
        if self.w_under <= 0 or self.w_over <= 0:
            raise ConfigurationError("asymmetric loss weights must be positive")
        if self.dtype not in DTYPES:
            raise ConfigurationError(f"dtype must be one of {sorted(DTYPES)}")

    @property
    def torch_dtype(self) -> torch.dtype:
        return DTYPES[self.dtype]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TrainConfig":
        graph = raw.get("graph")
        return cls(**{**raw, "graph": GraphOptions(**graph) if graph else None})


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float | None


@dataclass
class Checkpoint:
    """最佳 epoch 的模型參數與可重建模型所需的全部設定"""

    model_state: dict[str, torch.Tensor]
    decoder_config: dict[str, Any]
    encoder_config: dict[str, Any] | None
    static_dim: int
    dynamic_dim: int
    node_lag_depth: int
    train_config: dict[str, Any]
    schema_hash: str | None
    config_hash: str | None = None
    run_config: dict[str, Any] | None = None
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def graph_mode(self) -> bool:
        return self.encoder_config is not None

    def build_model(self) -> GraphDeepAR:
        model = GraphDeepAR(
            DecoderConfig.from_dict(self.decoder_config),
            static_dim=self.static_dim,
            dynamic_dim=self.dynamic_dim,
            encoder_config=EncoderConfig.from_dict(self.encoder_config)
            if self.encoder_config
            else None,
            node_lag_depth=self.node_lag_depth,
        )
        dtype = DTYPES[self.train_config.get("dtype", "float32")]
        model = model.to(dtype)
        model.load_state_dict(self.model_state)
        model.eval()
        return model

    def parameter_inventory(self) -> dict[str, tuple[int, ...]]:
        return {name: tuple(t.shape) for name, t in self.model_state.items()}

    def to_payload(self) -> dict[str, Any]:
        return {
            "format": "graph-deepar-checkpoint/1",
            "model_state": self.model_state,
            "decoder_config": self.decoder_config,
            "encoder_config": self.encoder_config,
            "static_dim": self.static_dim,
            "dynamic_dim": self.dynamic_dim,
            "node_lag_depth": self.node_lag_depth,
            "train_config": self.train_config,
            "schema_hash": self.schema_hash,
            "config_hash": self.config_hash,
            "run_config": self.run_config,
            "history": [asdict(r) for r in self.history],
            "best_epoch": self.best_epoch,
        }

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        torch.save(self.to_payload(), path)
        return path

    @classmethod
    def load(cls, path: Path | str) -> "Checkpoint":
        path = Path(path)
        if not path.exists():
            raise ArtifactError(f"checkpoint not found: {path}", file_path=str(path))
        try:
            payload = torch.load(path, map_location="cpu", weights_only=True)
        except Exception as e:
            error_id = ErrorHandler.log_error_with_context(
                e,
                context={"operation": "讀取檢查點", "file_path": str(path)},
                error_type=ErrorType.FILE_IO,
            )
            debug_log(f"讀取檢查點失敗 [錯誤ID: {error_id}]: {e}")
            raise ArtifactError(f"unreadable checkpoint {path}: {e}") from e
        if payload.get("format") != "graph-deepar-checkpoint/1":
            raise ArtifactError(f"{path} is not a graph-deepar checkpoint")
        payload.pop("format")
        payload["history"] = [EpochRecord(**r) for r in payload["history"]]
        return cls(**payload)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    model: GraphDeepAR
    audit: DemandAccessAudit
    n_train_windows: int
    n_val_windows: int

    @property
    def history(self) -> list[EpochRecord]:
        return self.checkpoint.history


@dataclass(frozen=True, eq=False)
class AssembledBatch:
    inputs: DecoderInputs
    article_index: np.ndarray
    anchor: int | None
    node_values: torch.Tensor | None


class BatchAssembler:
    """把 WindowBatch 轉為張量；圖模式同時組裝錨點的全圖節點特徵"""

    def __init__(
        self,
        data: PanelDataset,
        windows: WindowSet,
        decoder_config: DecoderConfig,
        dtype: torch.dtype,
        graph: SimilarityGraph | None = None,
        node_lag_depth: int = 1,
        audit: DemandAccessAudit | None = None,
    ):
        self.data = data
        self.windows = windows
        self.decoder_config = decoder_config
        self.dtype = dtype
        self.graph = graph
        self.node_lag_depth = node_lag_depth
        self.audit = audit

    def __call__(self, batch: WindowBatch) -> AssembledBatch:
        articles = self.windows.article_index[batch.positions]
        anchors = self.windows.anchor[batch.positions]
        inputs = build_decoder_inputs(
            self.data, articles, anchors, self.decoder_config, dtype=self.dtype
        )
        if self.graph is None:
            return AssembledBatch(inputs, articles, None, None)

        anchor = int(anchors[0])
        if np.any(anchors != anchor):
            raise DataValidationError(f"batch {batch.batch_id} mixes anchor weeks")
        features = window_node_features(
            self.graph,
            self.data,
            anchor,
            self.decoder_config.context_length,
            self.node_lag_depth,
            audit=self.audit,
        )
        node_values = torch.as_tensor(features.values, dtype=self.dtype)
        return AssembledBatch(inputs, articles, anchor, node_values)


def _embeddings(
    model: GraphDeepAR, batch: AssembledBatch, index: MessageIndex | None
) -> torch.Tensor | None:
    if batch.node_values is None or model.encoder is None or index is None:
        return None
    all_nodes = model.encoder(batch.node_values, index)
    return all_nodes[torch.as_tensor(batch.article_index)]


def evaluate_loss(
    model: GraphDeepAR,
    data: PanelDataset,
    windows: WindowSet,
    graph: SimilarityGraph | None = None,
    batch_size: int = 256,
    horizon_only: bool = True,
    audit: DemandAccessAudit | None = None,
) -> float:
    """
    教師強制下的平均 t-NLL

    horizon_only=True 時只計預測步驟（驗證損失），否則計全部步驟。
    """
    if len(windows) == 0:
        return float("nan")
    config = model.decoder_config
    index = None
    lag_depth = model.node_lag_depth
    if model.graph_mode:
        if graph is None:
            raise ConfigurationError("graph-mode model needs a graph for evaluation")
        graph = graph.without_sampling()
        index = MessageIndex.from_graph(graph, dtype=model.dtype)
    assemble = BatchAssembler(
        data,
        windows,
        config,
        model.dtype,
        graph if model.graph_mode else None,
        lag_depth,
        audit,
    )
    first = config.context_length - 1 if horizon_only else 0

    total, count = 0.0, 0
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for batch in anchor_batches(windows, batch_size):
                assembled = assemble(batch)
                params = model(assembled.inputs, _embeddings(model, assembled, index))
                nll = t_nll(params, assembled.inputs.targets)[:, first:]
                total += float(nll.sum())
                count += int(nll.numel())
    finally:
        model.train(was_training)
    return total / max(count, 1)


def history_frame(history: list[EpochRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [asdict(r) for r in history], columns=["epoch", "train_loss", "val_loss"]
    )


def write_history(history: list[EpochRecord], path: Path | str) -> None:
    """導出 `epoch,train_loss,val_loss`"""
    history_frame(history).to_csv(path, index=False, float_format="%.10g")


def _check_inputs(
    train_data: PanelDataset,
    val_data: PanelDataset | None,
    graph: SimilarityGraph | None,
    train_config: TrainConfig,
) -> None:
    if train_config.graph is not None and graph is None:
        raise ConfigurationError("graph options are set but no graph was supplied")
    if train_config.graph is None and graph is not None:
        raise ConfigurationError("a graph was supplied without graph options")
    if val_data is not None:
        check_hash("feature schema", train_data.schema_hash, val_data.schema_hash)
        if val_data.article_ids != train_data.article_ids:
            raise DataValidationError("train and validation splits differ in articles")
    if graph is not None:
        check_hash("feature schema", train_data.schema_hash, graph.schema_hash)
        if graph.n_nodes != train_data.n_articles:
            raise DataValidationError(
                f"graph has {graph.n_nodes} nodes, panel has {train_data.n_articles} articles"
            )
        if graph.article_ids is not None and graph.article_ids != train_data.article_ids:
            raise DataValidationError("graph article order differs from the panel")


@contextmanager
def torch_threads(n_threads: int | None) -> Iterator[None]:
    """在區塊內固定 torch 線程數，結束後恢復原值；None 時不變"""
    if n_threads is None:
        yield
        return
    previous = torch.get_num_threads()
    torch.set_num_threads(n_threads)
    try:
        yield
    finally:
        torch.set_num_threads(previous)


def train(
    train_data: PanelDataset,
    val_data: PanelDataset | None,
    decoder_config: DecoderConfig,
    train_config: TrainConfig,
    graph: SimilarityGraph | None = None,
    encoder_config: EncoderConfig | None = None,
    audit: DemandAccessAudit | None = None,
    config_hash: str | None = None,
    run_config: dict[str, Any] | None = None,
) -> TrainResult:
    """
    訓練 (Graph)DeepAR

    Args:
        train_data / val_data: split_time 的訓練與驗證切分
        decoder_config: 解碼器配置（含 P、K）
        train_config: 訓練配置；train_config.graph 決定是否為圖模式
        graph: 儲存的相似度圖（圖模式必需）
        encoder_config: 編碼器配置；圖模式下預設 [16, 8]
        audit: 需求讀取審計；None 時內部建立

    Returns:
        TrainResult: 最佳驗證損失的檢查點與模型
    """
    _check_inputs(train_data, val_data, graph, train_config)
    threads = 1 if train_config.num_workers == 0 else None
    with torch_threads(threads):
        return _fit(
            train_data,
            val_data,
            decoder_config,
            train_config,
            graph,
            encoder_config,
            audit if audit is not None else DemandAccessAudit(),
            config_hash,
            run_config,
        )


def _fit(
    train_data: PanelDataset,
    val_data: PanelDataset | None,
    decoder_config: DecoderConfig,
    train_config: TrainConfig,
    graph: SimilarityGraph | None,
    encoder_config: EncoderConfig | None,
    audit: DemandAccessAudit,
    config_hash: str | None,
    run_config: dict[str, Any] | None,
) -> TrainResult:
    seed = train_config.seed
    dtype = train_config.torch_dtype
    torch.manual_seed(seed)

    options = train_config.graph
    lag_depth = options.node_lag_depth if options else 1
    if options is not None and encoder_config is None:
        encoder_config = EncoderConfig(input_dim=lag_depth + 1)

    model = GraphDeepAR(
        decoder_config,
        static_dim=train_data.n_static,
        dynamic_dim=train_data.n_dynamic,
        encoder_config=encoder_config if options else None,
        node_lag_depth=lag_depth,
    ).to(dtype)
    optimizer = build_optimizer(
        train_config.optimizer,
        model.parameters(),
        train_config.learning_rate,
        train_config.optimizer_settings,
    )

    P, K = decoder_config.context_length, decoder_config.horizon
    extra = lag_depth - 1 if options else 0
    train_windows = make_windows(train_data, P, K, extra_history=extra)
    if len(train_windows) == 0:
        raise DataValidationError(
            f"no training windows for P={P}, K={K}; the training span is too short"
        )
    val_windows = (
        make_windows(val_data, P, K, extra_history=extra) if val_data is not None else None
    )
    has_val = val_windows is not None and len(val_windows) > 0
    if not has_val:
        warn_data_quality(
            "no validation windows; early stopping monitors the training loss", "TRAIN"
        )

    assemble = BatchAssembler(
        train_data, train_windows, decoder_config, dtype, graph, lag_depth, audit
    )
    debug_log(
        f"開始訓練: {'GraphDeepAR' if options else 'DeepAR'}, "
        f"{len(train_windows)} 個訓練窗口, "
        f"{len(val_windows) if val_windows is not None else 0} 個驗證窗口, "
        f"參數量 {sum(p.numel() for p in model.parameters())}"
    )

    history: list[EpochRecord] = []
    best_state = copy.deepcopy(model.state_dict())
    best_value = float("inf")
    best_epoch = 0
    bad_epochs = 0

    for epoch in range(1, train_config.max_epochs + 1):
        e_seed = epoch_seed(seed, epoch)
        index = None
        if options is not None and graph is not None:
            sampled = sample_neighborhood(graph, options.max_neighbors, e_seed)
            index = MessageIndex.from_graph(sampled, dtype=dtype)
        if train_config.batch_mode == "synchronized":
            batches = synchronized_batches(train_windows, train_config.batch_size, e_seed)
        else:
            batches = random_batches(train_windows, train_config.batch_size, e_seed)

        model.train()
        total, count = 0.0, 0
        for batch, assembled in BatchProducer(batches, assemble, train_config.num_workers):
            params = model(assembled.inputs, _embeddings(model, assembled, index))
            loss = asymmetric_t_nll(
                params,
                assembled.inputs.targets,
                train_config.w_under,
                train_config.w_over,
            ).mean()
            if not bool(torch.isfinite(loss)):
                raise TrainingDivergenceError(batch.batch_id, epoch, float(loss))
            optimizer.zero_grad()
            loss.backward()
            if train_config.grad_clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), train_config.grad_clip)
            optimizer.step()
            total += float(loss.detach()) * len(batch)
            count += len(batch)

        train_loss = total / max(count, 1)
        val_loss = (
            evaluate_loss(model, val_data, val_windows, graph, audit=audit)
            if has_val and val_data is not None and val_windows is not None
            else None
        )
        history.append(EpochRecord(epoch, train_loss, val_loss))
        monitored = val_loss if val_loss is not None else train_loss
        debug_log(
            f"epoch {epoch}: train_loss={train_loss:.6f}, "
            f"val_loss={'-' if val_loss is None else f'{val_loss:.6f}'}"
        )

        if monitored < best_value:
            best_value = monitored
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= train_config.early_stopping_patience:
                debug_log(f"早停於 epoch {epoch}（最佳 epoch {best_epoch}）")
                break

    model.load_state_dict(best_state)
    model.eval()
    if not audit.clean:
        debug_log(f"需求讀取違規: {audit.violations[:5]}")

    checkpoint = Checkpoint(
        model_state=best_state,
        decoder_config=decoder_config.to_dict(),
        encoder_config=encoder_config.to_dict() if options and encoder_config else None,
        static_dim=train_data.n_static,
        dynamic_dim=train_data.n_dynamic,
        node_lag_depth=lag_depth,
        train_config=train_config.to_dict(),
        schema_hash=train_data.schema_hash,
        config_hash=config_hash,
        run_config=run_config,
        history=history,
        best_epoch=best_epoch,
    )
    return TrainResult(
        checkpoint=checkpoint,
        model=model,
        audit=audit,
        n_train_windows=len(train_windows),
        n_val_windows=len(val_windows) if val_windows is not None else 0,
    )
