"""Training loop, tuning/test split, k-fold cross-validation, P/R/F1 reports.

All randomness in a run flows from TrainConfig.seed through three spawned
streams (parameter init, batch order, dropout), so identical configs give
bitwise-identical models and reports. Folds are independent and may train
in parallel; aggregation is ordered by fold index.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .chain import extract_chain, extract_window
from .corpus import DepSentence, EventMention, TemporalStatus, index_sentences
from .errors import CorpusError, TrainingError
from .models import (
    EncodedInput,
    MODEL_TYPES,
    build_model,
    classify,
    model_loss,
    restore_model,
)
from .nncore import (
    EmbeddingTable,
    ParamSet,
    RmsProp,
    load_checkpoint,
    load_embeddings,
    random_embeddings,
    save_checkpoint,
)

__all__ = [
    "REPRESENTATIONS",
    "TrainConfig",
    "Metrics",
    "FoldPlan",
    "TrainedModel",
    "CvResult",
    "split_tuning_test",
    "kfold",
    "encode_input",
    "train",
    "evaluate",
    "cross_validate",
    "format_metrics_table",
    "save_trained",
    "load_trained",
]

REPRESENTATIONS = ("chain", "window", "tree")

CLASS_ORDER = (TemporalStatus.PAST, TemporalStatus.ONGOING, TemporalStatus.FUTURE)


@dataclass(frozen=True)
class TrainConfig:
    model_type: str
    representation: str
    learning_rate: float = 0.001
    epochs: int = 50
    dropout: float = 0.5
    hidden: int = 300
    half_width: int = 7
    batch_size: int = 16
    seed: int = 0
    embeddings: str | None = None  # path; None = seeded random table over corpus vocab
    embedding_dim: int = 300  # used only when embeddings is None
    tree_readout: str = "root"
    finetune_embeddings: bool = False

    def __post_init__(self):
        if self.model_type not in MODEL_TYPES:
            raise ValueError(f"unknown model_type {self.model_type!r}")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        if (self.representation == "tree") != (self.model_type == "treelstm"):
            raise ValueError(
                "representation 'tree' and model_type 'treelstm' require each other; "
                f"got representation={self.representation!r}, model_type={self.model_type!r}"
            )
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.hidden <= 0:
            raise ValueError("hidden must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")
        if self.embedding_dim <= 0:
            raise ValueError("embedding_dim must be positive")
        if self.tree_readout not in ("root", "target"):
            raise ValueError("tree_readout must be 'root' or 'target'")

    def to_dict(self) -> dict:
        return {
            "model_type": self.model_type,
            "representation": self.representation,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "dropout": self.dropout,
            "hidden": self.hidden,
            "half_width": self.half_width,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "embeddings": self.embeddings,
            "embedding_dim": self.embedding_dim,
            "tree_readout": self.tree_readout,
            "finetune_embeddings": self.finetune_embeddings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


class Metrics:
    """Per-class, macro, and micro recall/precision/F1 from a 3x3 confusion.

    Rows index gold classes, columns predicted classes, in PA/OG/FU order.
    Macro averages are unweighted class means with F1 averaged directly;
    micro scores come from pooled counts and all equal accuracy for
    single-label prediction.
    """

    def __init__(self, confusion: np.ndarray):
        confusion = np.asarray(confusion, dtype=np.int64)
        if confusion.shape != (3, 3) or (confusion < 0).any():
            raise ValueError("confusion must be a nonnegative 3x3 matrix")
        self.confusion = confusion
        self.n = int(confusion.sum())
        self.per_class: list[tuple[float, float, float]] = []
        for k in range(3):
            tp = int(confusion[k, k])
            fn = int(confusion[k].sum()) - tp
            fp = int(confusion[:, k].sum()) - tp
            r = tp / (tp + fn) if tp + fn else 0.0
            p = tp / (tp + fp) if tp + fp else 0.0
            f1 = 2 * p * r / (p + r) if p + r else 0.0
            self.per_class.append((r, p, f1))
        rs, ps, f1s = zip(*self.per_class)
        self.macro = (sum(rs) / 3, sum(ps) / 3, sum(f1s) / 3)
        acc = int(np.trace(confusion)) / self.n if self.n else 0.0
        self.micro = (acc, acc, acc)

    @classmethod
    def from_pairs(cls, gold: list[int], pred: list[int]) -> "Metrics":
        if len(gold) != len(pred):
            raise ValueError("gold and pred lengths differ")
        confusion = np.zeros((3, 3), dtype=np.int64)
        for g, p in zip(gold, pred):
            confusion[g, p] += 1
        return cls(confusion)

    @property
    def accuracy(self) -> float:
        return self.micro[0]

    @property
    def micro_f1(self) -> float:
        return self.micro[2]

    @property
    def macro_f1(self) -> float:
        return self.macro[2]

    def cells(self) -> list[str]:
        """Five R/P/F1 cells (PA, OG, FU, Macro, Micro) in the table style:
        recall and precision as whole percents, F1 with one decimal."""
        triples = self.per_class + [self.macro, self.micro]
        return [f"{r * 100:.0f}/{p * 100:.0f}/{f * 100:.1f}" for r, p, f in triples]

    def to_dict(self) -> dict:
        keys = ("recall", "precision", "f1")
        return {
            "n": self.n,
            "confusion": self.confusion.tolist(),
            "per_class": {
                status.code: dict(zip(keys, map(float, triple)))
                for status, triple in zip(CLASS_ORDER, self.per_class)
            },
            "macro": dict(zip(keys, map(float, self.macro))),
            "micro": dict(zip(keys, map(float, self.micro))),
        }


def format_metrics_table(rows: list[tuple[str, Metrics]]) -> str:
    """Plain-text table, one row per labeled Metrics, cells as R/P/F1."""
    header = ["", "PA", "OG", "FU", "Macro", "Micro"]
    body = [[label] + m.cells() for label, m in rows]
    widths = [max(len(r[c]) for r in [header] + body) for c in range(6)]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        total = 0
        for fold in self.folds:
            total += len(fold)
            seen.update(fold)
        if len(seen) != total or seen != set(range(total)):
            raise ValueError("folds must partition 0..n-1")
        sizes = {len(f) for f in self.folds}
        if max(sizes) - min(sizes) > 1:
            raise ValueError("fold sizes must differ by at most 1")

    @property
    def k(self) -> int:
        return len(self.folds)

    def sizes(self) -> list[int]:
        return [len(f) for f in self.folds]

    def train_indices(self, fold: int) -> list[int]:
        out: list[int] = []
        for i, f in enumerate(self.folds):
            if i != fold:
                out.extend(f)
        return sorted(out)


def split_tuning_test(examples, seed: int):
    """Seeded shuffle, then a round(0.2 n) tuning set and the remainder."""
    n = len(examples)
    if n < 5:
        raise CorpusError(f"need at least 5 examples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_tune = round(0.2 * n)
    tuning = [examples[i] for i in perm[:n_tune]]
    test = [examples[i] for i in perm[n_tune:]]
    return tuning, test


def kfold(examples, k: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded shuffle into k near-equal folds; the first n % k folds take the
    extra element."""
    n = len(examples)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise CorpusError(f"need at least k={k} examples, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(tuple(int(x) for x in perm[start : start + size]))
        start += size
    return FoldPlan(tuple(folds))


# ---------------------------------------------------------------------------
# Encoding mentions into model inputs


def encode_input(
    sent: DepSentence,
    mention: EventMention,
    representation: str,
    table: EmbeddingTable,
    half_width: int = 7,
) -> EncodedInput:
    if representation == "chain":
        ids = extract_chain(sent, mention.token_id).member_ids
    elif representation == "window":
        ids = extract_window(sent, mention.token_id, half_width).member_ids
    elif representation == "tree":
        ids = tuple(t.id for t in sent.tokens)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    forms = tuple(sent.token(i).form for i in ids)
    X = table.embed(list(forms))
    rows = table.rows(list(forms))
    if representation != "tree":
        target_pos = ids.index(mention.token_id)
        return EncodedInput(forms=forms, X=X, rows=rows, target_pos=target_pos)
    children: list[list[int]] = [[] for _ in sent.tokens]
    root_pos = -1
    for t in sent.tokens:
        if t.head == 0:
            root_pos = t.id - 1
        else:
            children[t.head - 1].append(t.id - 1)
    return EncodedInput(
        forms=forms,
        X=X,
        rows=rows,
        children=tuple(tuple(c) for c in children),
        root_pos=root_pos,
        target_pos=mention.token_id - 1,
    )


def _encode_corpus(
    corpus: list[DepSentence],
    mentions: list[EventMention],
    config: TrainConfig,
    table: EmbeddingTable,
    require_labels: bool = True,
) -> list[tuple[EncodedInput, int | None]]:
    by_key = index_sentences(corpus)
    out = []
    for m in mentions:
        sent = by_key.get((m.doc_id, m.sent_id))
        if sent is None:
            raise CorpusError(f"mention {m.doc_id}/{m.sent_id} not found in corpus")
        if require_labels and m.label is None:
            raise CorpusError(
                f"mention {m.doc_id}/{m.sent_id} token {m.token_id} has no label"
            )
        inst = encode_input(sent, m, config.representation, table, config.half_width)
        out.append((inst, None if m.label is None else int(m.label)))
    return out


def resolve_embeddings(config: TrainConfig, corpus: list[DepSentence]) -> EmbeddingTable:
    """Load the configured table, or build a seeded random one over the
    corpus vocabulary."""
    if config.embeddings is not None:
        return load_embeddings(Path(config.embeddings).read_text(encoding="utf-8"))
    vocab = sorted({t.form for sent in corpus for t in sent.tokens})
    return random_embeddings(vocab, config.embedding_dim, config.seed)


# ---------------------------------------------------------------------------
# Training and evaluation


@dataclass
class TrainedModel:
    model: object
    table: EmbeddingTable
    config: TrainConfig
    history: list[float] = field(default_factory=list)


def train(
    config: TrainConfig,
    corpus: list[DepSentence],
    mentions: list[EventMention],
    table: EmbeddingTable | None = None,
) -> TrainedModel:
    """RMSProp training over mini-batches; one mean-loss entry per epoch."""
    if not mentions:
        raise CorpusError("no mentions to train on")
    if table is None:
        table = resolve_embeddings(config, corpus)
    data = _encode_corpus(corpus, mentions, config, table)

    init_ss, order_ss, drop_ss = np.random.SeedSequence(config.seed).spawn(3)
    model = build_model(
        config.model_type,
        table.dim,
        config.hidden,
        np.random.default_rng(init_ss),
        tree_readout=config.tree_readout,
    )
    order_rng = np.random.default_rng(order_ss)
    drop_rng = np.random.default_rng(drop_ss)

    opt = RmsProp(model.params, learning_rate=config.learning_rate)
    emb_params = None
    emb_opt = None
    if config.finetune_embeddings:
        emb_params = ParamSet()
        emb_params.add("matrix", table.matrix)
        emb_params.add("unk", table.unk)
        emb_opt = RmsProp(emb_params, learning_rate=config.learning_rate)

    history: list[float] = []
    n = len(data)
    for epoch in range(config.epochs):
        perm = order_rng.permutation(n)
        epoch_loss = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            batch = perm[start : start + config.batch_size]
            for idx in batch:
                inst, gold = data[idx]
                if config.finetune_embeddings:
                    inst = replace(inst, X=table.embed(list(inst.forms)))
                try:
                    loss, _, dX = model_loss(
                        model, inst, gold, mode="train",
                        drop_ratio=config.dropout, drop_rng=drop_rng,
                    )
                except ValueError as e:
                    # non-finite logits surface here before the loss does
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, batch {b}: {e}"
                    ) from e
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch}, batch {b}"
                    )
                epoch_loss += loss
                if emb_params is not None:
                    for t, row in enumerate(inst.rows):
                        if row >= 0:
                            emb_params.grads["matrix"][row] += dX[t]
                        else:
                            emb_params.grads["unk"] += dX[t]
            scale = 1.0 / len(batch)
            model.params.scale_grads(scale)
            opt.step()
            if emb_params is not None:
                emb_params.scale_grads(scale)
                emb_opt.step()
        history.append(epoch_loss / n)
    return TrainedModel(model=model, table=table, config=config, history=history)


def evaluate(
    trained: TrainedModel,
    corpus: list[DepSentence],
    mentions: list[EventMention],
) -> Metrics:
    """Eval-mode predictions scored against gold labels."""
    if not mentions:
        raise CorpusError("no mentions to evaluate on")
    data = _encode_corpus(corpus, mentions, trained.config, trained.table)
    confusion = np.zeros((3, 3), dtype=np.int64)
    for inst, gold in data:
        pred, _ = classify(trained.model, inst)
        confusion[gold, int(pred)] += 1
    return Metrics(confusion)


# ---------------------------------------------------------------------------
# Cross-validation


@dataclass
class CvResult:
    fold_metrics: list[Metrics]
    pooled: Metrics
    fold_sizes: list[int]
    models: list[TrainedModel] | None = None
    fold_test_indices: list[tuple[int, ...]] | None = None

    def report_text(self) -> str:
        rows = [(f"fold {i}", m) for i, m in enumerate(self.fold_metrics)]
        rows.append(("pooled", self.pooled))
        sizes = " ".join(str(s) for s in self.fold_sizes)
        return f"fold sizes: {sizes}\n" + format_metrics_table(rows)

    def report_dict(self) -> dict:
        return {
            "fold_sizes": self.fold_sizes,
            "folds": [m.to_dict() for m in self.fold_metrics],
            "pooled": self.pooled.to_dict(),
        }


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def _run_fold(config, corpus, mentions, plan, fold, table, keep):
    train_mentions = [mentions[i] for i in plan.train_indices(fold)]
    test_mentions = [mentions[i] for i in plan.folds[fold]]
    fold_config = replace(config, seed=_fold_seed(config.seed, fold))
    try:
        trained = train(fold_config, corpus, train_mentions, table=table)
        metrics = evaluate(trained, corpus, test_mentions)
    except (CorpusError, TrainingError) as e:
        raise type(e)(f"fold {fold}: {e}") from e
    return metrics, (trained if keep else None)


def cross_validate(
    config: TrainConfig,
    corpus: list[DepSentence],
    mentions: list[EventMention],
    k: int = 10,
    jobs: int = 1,
    keep_models: bool = False,
) -> CvResult:
    """Train on k-1 folds, evaluate on the held-out fold; pool confusions.

    Results are ordered by fold index regardless of completion order, and each
    fold derives its own seed from (config.seed, fold), so the outcome does
    not depend on jobs.
    """
    plan = kfold(mentions, k, config.seed)
    table = resolve_embeddings(config, corpus)
    args = [(config, corpus, mentions, plan, f, table, keep_models) for f in range(k)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold_star, args))
    else:
        outcomes = [_run_fold(*a) for a in args]
    fold_metrics = [m for m, _ in outcomes]
    pooled = Metrics(sum((m.confusion for m in fold_metrics), np.zeros((3, 3), dtype=np.int64)))
    models = [t for _, t in outcomes] if keep_models else None
    return CvResult(
        fold_metrics=fold_metrics,
        pooled=pooled,
        fold_sizes=plan.sizes(),
        models=models,
        fold_test_indices=list(plan.folds),
    )


def _run_fold_star(a):
    return _run_fold(*a)


# ---------------------------------------------------------------------------
# Checkpoint plumbing


def save_trained(trained: TrainedModel, path: str) -> None:
    save_checkpoint(
        path,
        trained.model.model_type,
        trained.model.params,
        trained.table,
        trained.config.to_dict(),
    )


def load_trained(path: str) -> TrainedModel:
    model_type, params, table, config_dict = load_checkpoint(path)
    config = TrainConfig.from_dict(config_dict)
    model = restore_model(
        model_type, params, table.dim, config.hidden, tree_readout=config.tree_readout
    )
    return TrainedModel(model=model, table=table, config=config, history=[])
