"""Three-branch technique classification ensemble.

Base branch: linear softmax classifier over sequence embeddings, whose
pre-softmax logits are concatenated with fragment features and fed to an
MLP. Override branch: a text-only repetition rule that replaces the base
prediction. Alternative branch: a 13-class linear model (no repetition
class) used to re-label unconfirmed repetition predictions and duplicate
instances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    REPETITION,
    Article,
    TECHNIQUE_INDEX,
    TECHNIQUE_NAMES,
    TechniqueInstance,
)
from .errors import ConfigError, NumericalError
from .features import repetition_stats
from .nnet import Adam, dropout_mask, softmax

logger = logging.getLogger(__name__)

ALT_CLASSES = tuple(name for name in TECHNIQUE_NAMES if name != REPETITION)
ALT_INDEX = {name: i for i, name in enumerate(ALT_CLASSES)}


@dataclass
class TCConfig:
    embed_dim: int
    feature_dim: int = 0
    linear_lr: float = 0.01
    linear_epochs: int = 50
    linear_batch: int = 128
    mlp_hidden: int = 128
    mlp_dropout: float = 0.25
    mlp_lr: float = 0.001
    mlp_epochs: int = 15
    mlp_batch: int = 128
    no_hidden: bool = False
    seed: int = 0


@dataclass
class LinearSoftmax:
    w: np.ndarray
    b: np.ndarray

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w + self.b

    def probs(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.logits(x), axis=-1)


@dataclass
class MLP:
    """Hidden layer + rectifier + dropout + output layer, or a single
    affine map in the no-hidden variant."""

    w1: np.ndarray | None
    b1: np.ndarray | None
    w2: np.ndarray
    b2: np.ndarray
    dropout: float = 0.25

    def probs(self, x: np.ndarray) -> np.ndarray:
        if self.w1 is None:
            return softmax(x @ self.w2 + self.b2, axis=-1)
        hidden = np.maximum(x @ self.w1 + self.b1, 0.0)
        return softmax(hidden @ self.w2 + self.b2, axis=-1)


@dataclass
class TCBaseModel:
    linear: LinearSoftmax
    mlp: MLP
    config: TCConfig

    def predict_probs(self, embeddings: np.ndarray, features: np.ndarray) -> np.ndarray:
        _check_inputs(self.config, embeddings, features)
        logits = self.linear.logits(embeddings)
        return self.mlp.probs(np.concatenate([logits, features], axis=1))


@dataclass
class TCAltModel:
    linear: LinearSoftmax
    config: TCConfig

    def predict_probs(self, embeddings: np.ndarray) -> np.ndarray:
        if embeddings.shape[1] != self.config.embed_dim:
            raise ConfigError(
                f"embedding dim {embeddings.shape[1]} != model dim {self.config.embed_dim}"
            )
        return self.linear.probs(embeddings)


@dataclass
class TCPrediction:
    """Ranked labels (best first) with matching descending probabilities."""

    instance_id: int
    labels: tuple[str, ...]
    probs: tuple[float, ...]
    branch: str = "base"

    @property
    def top(self) -> str:
        return self.labels[0]

    def runner_up(self, exclude: str) -> str:
        for label in self.labels:
            if label != exclude:
                return label
        return self.labels[-1]


def _check_inputs(config: TCConfig, embeddings: np.ndarray, features: np.ndarray) -> None:
    if embeddings.shape[1] != config.embed_dim:
        raise ConfigError(
            f"embedding dim {embeddings.shape[1]} != configured {config.embed_dim}"
        )
    if features.shape[1] != config.feature_dim:
        raise ConfigError(
            f"feature dim {features.shape[1]} != configured {config.feature_dim} "
            "(train/predict feature sets must match)"
        )
    if len(embeddings) != len(features):
        raise ConfigError("embedding and feature row counts differ")


def rep_preprocess(
    instance: TechniqueInstance, article: Article, phase: str
) -> str:
    """Instance text for embedding; repetition candidates are self-appended.

    In the train phase the gold label decides; at inference the text-only
    repeat count does.
    """
    text = article.text[instance.span.begin : instance.span.end]
    if phase == "train":
        duplicate = instance.technique == REPETITION
    elif phase == "infer":
        count, _ = repetition_stats(article, instance.span)
        duplicate = count >= 1
    else:
        raise ValueError(f"phase must be 'train' or 'infer', got {phase!r}")
    return text + " " + text if duplicate else text


def _linear_loss_and_grads(w, b, x, y):
    probs = softmax(x @ w + b, axis=-1)
    n = len(y)
    loss = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
    d_logits = probs
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    return loss, {"w": x.T @ d_logits, "b": d_logits.sum(axis=0)}


def _train_linear(x, y, n_classes, lr, epochs, batch, rng) -> LinearSoftmax:
    n, dim = x.shape
    r = 1.0 / np.sqrt(dim)
    w = rng.uniform(-r, r, size=(dim, n_classes))
    b = np.zeros(n_classes)
    opt = Adam({"w": w, "b": b}, lr=lr)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            loss, grads = _linear_loss_and_grads(w, b, x[idx], y[idx])
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss at linear epoch {epoch + 1}")
            opt.step(grads)
    return LinearSoftmax(w, b)


def _mlp_forward(mlp: MLP, x, drop_mult):
    if mlp.w1 is None:
        logits = x @ mlp.w2 + mlp.b2
        return softmax(logits, axis=-1), None
    pre = x @ mlp.w1 + mlp.b1
    hidden = np.maximum(pre, 0.0) * drop_mult
    logits = hidden @ mlp.w2 + mlp.b2
    return softmax(logits, axis=-1), (pre, hidden)


def _mlp_loss_and_grads(mlp: MLP, x, y, drop_mult):
    probs, cache = _mlp_forward(mlp, x, drop_mult)
    n = len(y)
    loss = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
    d_logits = probs
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    if mlp.w1 is None:
        return loss, {"w2": x.T @ d_logits, "b2": d_logits.sum(axis=0)}
    pre, hidden = cache
    d_hidden = (d_logits @ mlp.w2.T) * drop_mult * (pre > 0.0)
    return loss, {
        "w1": x.T @ d_hidden, "b1": d_hidden.sum(axis=0),
        "w2": hidden.T @ d_logits, "b2": d_logits.sum(axis=0),
    }


def _train_mlp(x, y, n_classes, config: TCConfig, rng) -> MLP:
    n, dim = x.shape
    if config.no_hidden:
        r = 1.0 / np.sqrt(dim)
        mlp = MLP(None, None, rng.uniform(-r, r, (dim, n_classes)), np.zeros(n_classes),
                  dropout=0.0)
        tensors = {"w2": mlp.w2, "b2": mlp.b2}
    else:
        h = config.mlp_hidden
        r1, r2 = 1.0 / np.sqrt(dim), 1.0 / np.sqrt(h)
        mlp = MLP(
            rng.uniform(-r1, r1, (dim, h)), np.zeros(h),
            rng.uniform(-r2, r2, (h, n_classes)), np.zeros(n_classes),
            dropout=config.mlp_dropout,
        )
        tensors = {"w1": mlp.w1, "b1": mlp.b1, "w2": mlp.w2, "b2": mlp.b2}
    opt = Adam(tensors, lr=config.mlp_lr)
    for epoch in range(config.mlp_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.mlp_batch):
            idx = order[start : start + config.mlp_batch]
            if mlp.w1 is None:
                drop = 1.0
            else:
                drop = dropout_mask(rng, (len(idx), config.mlp_hidden), mlp.dropout)
            loss, grads = _mlp_loss_and_grads(mlp, x[idx], y[idx], drop)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss at MLP epoch {epoch + 1}")
            opt.step(grads)
    return mlp


def train_base(embeddings, features, labels, config: TCConfig) -> TCBaseModel:
    """Two-stage base model.

    Stage 1: linear softmax over the sequence embeddings. Stage 2: its
    frozen pre-softmax logits, concatenated with the fragment features,
    train the MLP.
    """
    x = np.asarray(embeddings, dtype=float)
    f = np.asarray(features, dtype=float)
    y = _label_indices(labels, TECHNIQUE_INDEX)
    _check_inputs(config, x, f)
    rng = np.random.default_rng(config.seed)
    linear = _train_linear(
        x, y, len(TECHNIQUE_NAMES), config.linear_lr, config.linear_epochs,
        config.linear_batch, rng,
    )
    stage2 = np.concatenate([linear.logits(x), f], axis=1)
    mlp = _train_mlp(stage2, y, len(TECHNIQUE_NAMES), config, rng)
    return TCBaseModel(linear, mlp, config)


def train_alt(embeddings, labels, config: TCConfig) -> TCAltModel:
    """13-class linear model trained without the repetition instances."""
    x = np.asarray(embeddings, dtype=float)
    names = list(labels)
    keep = [i for i, name in enumerate(names) if name != REPETITION]
    dropped = len(names) - len(keep)
    if dropped:
        logger.info("alternative model: filtered %d repetition instances", dropped)
    if not keep:
        raise ValueError("no non-repetition instances to train on")
    y = _label_indices([names[i] for i in keep], ALT_INDEX)
    rng = np.random.default_rng(config.seed)
    linear = _train_linear(
        x[keep], y, len(ALT_CLASSES), config.linear_lr, config.linear_epochs,
        config.linear_batch, rng,
    )
    return TCAltModel(linear, config)


def _label_indices(labels, index) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, (int, np.integer)):
            out.append(int(lab))
        else:
            out.append(index[lab])
    return np.array(out, dtype=int)


def rank_predictions(probs: np.ndarray, classes, instance_ids, branch: str) -> list[TCPrediction]:
    preds = []
    for row, inst_id in zip(probs, instance_ids):
        order = np.argsort(-row, kind="stable")
        preds.append(
            TCPrediction(
                instance_id=inst_id,
                labels=tuple(classes[i] for i in order),
                probs=tuple(float(row[i]) for i in order),
                branch=branch,
            )
        )
    return preds


def repetition_override(instance: TechniqueInstance, article: Article) -> bool:
    """True iff the normalized span repeats and this is not its first occurrence."""
    count, is_first = repetition_stats(article, instance.span)
    return override_rule(count, is_first)


def override_rule(count: int, is_first: bool) -> bool:
    return count >= 1 and not is_first


def resolve(base_pred: TCPrediction, override: bool, alt_pred: TCPrediction) -> str:
    """Combine the three branches for one instance.

    Override wins outright; an unconfirmed base repetition falls through
    to the alternative model; otherwise the base prediction stands.
    """
    if override:
        return REPETITION
    if base_pred.top == REPETITION:
        return alt_pred.top
    return base_pred.top


def handle_duplicates(
    instances: list[TechniqueInstance],
    resolved_labels: list[str],
    alt_preds: list[TCPrediction],
    base_rankings: list[TCPrediction],
) -> list[str]:
    """Give identical (article, span) instances pairwise-distinct labels.

    Pairs: the duplicate takes the alternative model's top label, or the
    base runner-up when that collides with the first label. Groups of
    three or more walk down the base ranking, skipping labels already
    used in the group.
    """
    final = list(resolved_labels)
    groups: dict[tuple[str, int, int], list[int]] = {}
    for pos, inst in enumerate(instances):
        key = (inst.article_id, inst.span.begin, inst.span.end)
        groups.setdefault(key, []).append(pos)
    for members in groups.values():
        if len(members) < 2:
            continue
        first = members[0]
        used = {final[first]}
        if len(members) == 2:
            second = members[1]
            label = alt_preds[second].top
            if label in used:
                label = base_rankings[second].runner_up(exclude=final[first])
            final[second] = label
            continue
        for pos in members[1:]:
            label = next(
                (lab for lab in base_rankings[pos].labels if lab not in used),
                base_rankings[pos].labels[-1],
            )
            final[pos] = label
            used.add(label)
    return final


def classify(
    instances: list[TechniqueInstance],
    articles: dict[str, Article],
    base_preds: list[TCPrediction],
    alt_preds: list[TCPrediction],
) -> list[str]:
    """Full label post-processing: override, re-label, then duplicates."""
    resolved = []
    for inst, base_pred, alt_pred in zip(instances, base_preds, alt_preds):
        override = repetition_override(inst, articles[inst.article_id])
        resolved.append(resolve(base_pred, override, alt_pred))
    return handle_duplicates(instances, resolved, alt_preds, base_preds)


_MAGIC = "propdet-tc v1"
_CONFIG_FIELDS = (
    "embed_dim", "feature_dim", "linear_lr", "linear_epochs", "linear_batch",
    "mlp_hidden", "mlp_dropout", "mlp_lr", "mlp_epochs", "mlp_batch",
    "no_hidden", "seed",
)


def save_models(path, base: TCBaseModel, alt: TCAltModel,
                extra: dict[str, str] | None = None) -> None:
    from .ckpt import save_tensor_file

    meta = {name: repr(getattr(base.config, name)) for name in _CONFIG_FIELDS}
    for key, value in (extra or {}).items():
        meta[f"x.{key}"] = value
    tensors = {
        "base_lin_w": base.linear.w, "base_lin_b": base.linear.b,
        "mlp_w2": base.mlp.w2, "mlp_b2": base.mlp.b2,
        "alt_w": alt.linear.w, "alt_b": alt.linear.b,
    }
    if base.mlp.w1 is not None:
        tensors["mlp_w1"] = base.mlp.w1
        tensors["mlp_b1"] = base.mlp.b1
    save_tensor_file(path, _MAGIC, meta, tensors)


def load_models(path) -> tuple[TCBaseModel, TCAltModel, dict[str, str]]:
    from .ckpt import load_tensor_file
    from .errors import FormatError

    meta, tensors = load_tensor_file(path, _MAGIC)
    extra = {k[2:]: v for k, v in meta.items() if k.startswith("x.")}
    casts = {"linear_lr": float, "mlp_dropout": float, "mlp_lr": float,
             "no_hidden": lambda v: v == "True"}
    kwargs = {}
    for name in _CONFIG_FIELDS:
        if name not in meta:
            raise FormatError(f"{path}: missing config field {name}")
        kwargs[name] = casts.get(name, int)(meta[name])
    config = TCConfig(**kwargs)
    mlp = MLP(
        tensors.get("mlp_w1"), tensors.get("mlp_b1"),
        tensors["mlp_w2"], tensors["mlp_b2"],
        dropout=config.mlp_dropout,
    )
    base = TCBaseModel(LinearSoftmax(tensors["base_lin_w"], tensors["base_lin_b"]), mlp, config)
    alt = TCAltModel(LinearSoftmax(tensors["alt_w"], tensors["alt_b"]), config)
    return base, alt, extra
