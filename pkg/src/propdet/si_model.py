"""Bidirectional LSTM token classifier for span identification.

Implemented from scratch on numpy with manual backpropagation. Sequences
are right-padded into batches; padded steps hold the previous recurrent
state and are masked out of the loss, so outputs at real positions are
independent of batch composition.

Gate layout in the 4H axis of the weight matrices: input, forget, cell
candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, NumericalError
from .nnet import Adam, dropout_mask, sigmoid, softmax


@dataclass
class SIConfig:
    """Tagger hyperparameters (defaults are the production values)."""

    input_dim: int
    hidden: int = 512
    dropout: float = 0.25
    class_weight_o: float = 1.0
    class_weight_i: float = 6.5
    learning_rate: float = 0.001
    epochs: int = 10
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.class_weight_o <= 0 or self.class_weight_i <= 0:
            raise ValueError("class weights must be positive")
        if self.hidden < 1 or self.input_dim < 1:
            raise ValueError("hidden and input_dim must be >= 1")


@dataclass
class SIParams:
    """Trained tensors for both directions plus the output projection."""

    config: SIConfig
    wx_f: np.ndarray
    wh_f: np.ndarray
    b_f: np.ndarray
    wx_b: np.ndarray
    wh_b: np.ndarray
    b_b: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "wx_f": self.wx_f, "wh_f": self.wh_f, "b_f": self.b_f,
            "wx_b": self.wx_b, "wh_b": self.wh_b, "b_b": self.b_b,
            "w_out": self.w_out, "b_out": self.b_out,
        }


def init_params(config: SIConfig, rng: np.random.Generator) -> SIParams:
    """Uniform(-r, r) with r = 1/sqrt(hidden); forget-gate bias raised by 1."""
    d, h = config.input_dim, config.hidden
    r = 1.0 / np.sqrt(h)
    u = lambda *shape: rng.uniform(-r, r, size=shape)
    b_f = u(4 * h)
    b_f[h : 2 * h] += 1.0
    wx_f, wh_f = u(d, 4 * h), u(h, 4 * h)
    wx_b, wh_b = u(d, 4 * h), u(h, 4 * h)
    b_b = u(4 * h)
    b_b[h : 2 * h] += 1.0
    w_out, b_out = u(2 * h, 2), u(2)
    return SIParams(config, wx_f, wh_f, b_f, wx_b, wh_b, b_b, w_out, b_out)


def _lstm_run(x, mask, wx, wh, b):
    """One direction over a padded batch; padded steps hold the state."""
    batch, steps, _ = x.shape
    h_units = wh.shape[0]
    h = np.zeros((batch, h_units))
    c = np.zeros((batch, h_units))
    outputs = np.zeros((batch, steps, h_units))
    cache = []
    for t in range(steps):
        m = mask[:, t : t + 1]
        z = x[:, t, :] @ wx + h @ wh + b
        gi = sigmoid(z[:, :h_units])
        gf = sigmoid(z[:, h_units : 2 * h_units])
        gg = np.tanh(z[:, 2 * h_units : 3 * h_units])
        go = sigmoid(z[:, 3 * h_units :])
        c_new = gf * c + gi * gg
        tc = np.tanh(c_new)
        h_new = go * tc
        cache.append((x[:, t, :], h, c, gi, gf, gg, go, tc, m))
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        outputs[:, t, :] = h
    return outputs, cache


def _lstm_grads(cache, d_out, wx, wh):
    """Backprop through one direction; returns grads for wx, wh, b."""
    d_wx = np.zeros_like(wx)
    d_wh = np.zeros_like(wh)
    d_b = np.zeros(wx.shape[1])
    h_units = wh.shape[0]
    batch = d_out.shape[0]
    dh_carry = np.zeros((batch, h_units))
    dc_carry = np.zeros((batch, h_units))
    for t in reversed(range(len(cache))):
        x_t, h_prev, c_prev, gi, gf, gg, go, tc, m = cache[t]
        dh_total = d_out[:, t, :] + dh_carry
        dh_new = m * dh_total
        dh_prev = (1.0 - m) * dh_total
        dc_new = m * dc_carry
        dc_prev = (1.0 - m) * dc_carry
        d_go = dh_new * tc
        dc_new = dc_new + dh_new * go * (1.0 - tc * tc)
        d_gf = dc_new * c_prev
        dc_prev = dc_prev + dc_new * gf
        d_gi = dc_new * gg
        d_gg = dc_new * gi
        dz = np.concatenate(
            [
                d_gi * gi * (1.0 - gi),
                d_gf * gf * (1.0 - gf),
                d_gg * (1.0 - gg * gg),
                d_go * go * (1.0 - go),
            ],
            axis=1,
        )
        d_wx += x_t.T @ dz
        d_wh += h_prev.T @ dz
        d_b += dz.sum(axis=0)
        dh_carry = dz @ wh.T + dh_prev
        dc_carry = dc_prev
    return d_wx, d_wh, d_b


def _forward_batch(params: SIParams, x, mask, drop_mult):
    hf, cache_f = _lstm_run(x, mask, params.wx_f, params.wh_f, params.b_f)
    hb_rev, cache_b = _lstm_run(x[:, ::-1, :], mask[:, ::-1], params.wx_b, params.wh_b, params.b_b)
    hb = hb_rev[:, ::-1, :]
    u = np.concatenate([hf, hb], axis=2)
    ud = u * drop_mult
    logits = ud @ params.w_out + params.b_out
    probs = softmax(logits, axis=2)
    return probs, (cache_f, cache_b, ud)


def forward(params: SIParams, vectors, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-token (P(O), P(I)) pairs, shape (n_tokens, 2), for one sequence.

    In train mode the concatenated hidden states pass inverted dropout;
    at inference every unit is kept.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.config.input_dim:
        raise ValueError(
            f"expected shape (*, {params.config.input_dim}), got {x.shape}"
        )
    x = x[None, :, :]
    mask = np.ones((1, x.shape[1]))
    if train_mode and params.config.dropout > 0.0:
        if rng is None:
            rng = np.random.default_rng(params.config.seed)
        drop = dropout_mask(rng, (1, x.shape[1], 2 * params.config.hidden), params.config.dropout)
    else:
        drop = 1.0
    probs, _ = _forward_batch(params, x, mask, drop)
    return probs[0]


def _loss_and_grads(params: SIParams, x, mask, labels, drop_mult):
    cfg = params.config
    probs, (cache_f, cache_b, ud) = _forward_batch(params, x, mask, drop_mult)
    batch, steps, _ = probs.shape
    n_real = mask.sum()
    weights = mask * np.where(labels == 1, cfg.class_weight_i, cfg.class_weight_o)
    rows = np.arange(batch)[:, None]
    cols = np.arange(steps)[None, :]
    p_label = probs[rows, cols, labels]
    loss = -(weights * np.log(np.maximum(p_label, 1e-300))).sum() / n_real

    d_logits = probs.copy()
    d_logits[rows, cols, labels] -= 1.0
    d_logits *= (weights / n_real)[:, :, None]
    two_h = 2 * cfg.hidden
    d_w_out = ud.reshape(-1, two_h).T @ d_logits.reshape(-1, 2)
    d_b_out = d_logits.sum(axis=(0, 1))
    d_u = (d_logits @ params.w_out.T) * drop_mult
    d_hf = d_u[:, :, : cfg.hidden]
    d_hb = d_u[:, :, cfg.hidden :]
    d_wx_f, d_wh_f, d_b_f = _lstm_grads(cache_f, d_hf, params.wx_f, params.wh_f)
    d_wx_b, d_wh_b, d_b_b = _lstm_grads(cache_b, d_hb[:, ::-1, :], params.wx_b, params.wh_b)
    grads = {
        "wx_f": d_wx_f, "wh_f": d_wh_f, "b_f": d_b_f,
        "wx_b": d_wx_b, "wh_b": d_wh_b, "b_b": d_b_b,
        "w_out": d_w_out, "b_out": d_b_out,
    }
    return loss, grads


def _label_ints(labels) -> np.ndarray:
    return np.array([1 if lab in (1, "I") else 0 for lab in labels], dtype=int)


def _pad_batch(seqs, labs, input_dim):
    batch = len(seqs)
    steps = max(len(s) for s in seqs)
    x = np.zeros((batch, steps, input_dim))
    mask = np.zeros((batch, steps))
    y = np.zeros((batch, steps), dtype=int)
    for i, s in enumerate(seqs):
        if s.ndim != 2 or s.shape[1] != input_dim:
            raise ValueError(f"sequence {i}: shape {s.shape}, expected (*, {input_dim})")
        n = len(s)
        x[i, :n] = s
        mask[i, :n] = 1.0
        if labs is not None:
            y[i, :n] = labs[i]
    return x, mask, y


def train(config: SIConfig, dataset) -> SIParams:
    """Train on (vector sequence, I/O label sequence) pairs.

    Class-weighted cross entropy, Adam(0.9, 0.999, 1e-8), shuffled batches
    of config.batch_size; all randomness (init, shuffling, dropout) comes
    from config.seed, so identical calls return identical parameters.
    """
    if not dataset:
        raise ValueError("empty training set")
    seqs = [np.asarray(x, dtype=float) for x, _ in dataset]
    labs = [_label_ints(y) for _, y in dataset]
    for i, (s, y) in enumerate(zip(seqs, labs)):
        if len(s) != len(y):
            raise ValueError(f"sequence {i}: {len(s)} vectors vs {len(y)} labels")
    rng = np.random.default_rng(config.seed)
    params = init_params(config, rng)
    opt = Adam(params.tensors(), lr=config.learning_rate)
    n = len(seqs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x, mask, y = _pad_batch([seqs[i] for i in idx], [labs[i] for i in idx], config.input_dim)
            drop = dropout_mask(
                rng, (len(idx), x.shape[1], 2 * config.hidden), config.dropout
            )
            loss, grads = _loss_and_grads(params, x, mask, y, drop)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // config.batch_size + 1}"
                )
            opt.step(grads)
    return params


def predict(params: SIParams, sequences, batch_size: int | None = None) -> list[list[str]]:
    """Argmax I/O labels per sequence; an exact 0.5 tie goes to I."""
    bs = batch_size or params.config.batch_size
    out: list[list[str]] = []
    seqs = [np.asarray(s, dtype=float) for s in sequences]
    for start in range(0, len(seqs), bs):
        chunk = seqs[start : start + bs]
        x, mask, _ = _pad_batch(chunk, None, params.config.input_dim)
        probs, _ = _forward_batch(params, x, mask, 1.0)
        for i, seq in enumerate(chunk):
            p_i = probs[i, : len(seq), 1]
            out.append(["I" if p >= 0.5 else "O" for p in p_i])
    return out


_CONFIG_FIELDS = (
    "input_dim", "hidden", "dropout", "class_weight_o", "class_weight_i",
    "learning_rate", "epochs", "batch_size", "seed",
)
_MAGIC = "propdet-si v1"


def save_checkpoint(path, params: SIParams, extra: dict[str, str] | None = None) -> None:
    """Write a flat text checkpoint: header, config, metadata, named tensors."""
    from .ckpt import save_tensor_file

    cfg = params.config
    meta = {name: repr(getattr(cfg, name)) for name in _CONFIG_FIELDS}
    for key, value in (extra or {}).items():
        meta[f"x.{key}"] = value
    save_tensor_file(path, _MAGIC, meta, params.tensors())


def load_checkpoint(path) -> tuple[SIParams, dict[str, str]]:
    from .ckpt import load_tensor_file

    meta, tensors = load_tensor_file(path, _MAGIC)
    extra = {k[2:]: v for k, v in meta.items() if k.startswith("x.")}
    casts = {"dropout": float, "class_weight_o": float, "class_weight_i": float,
             "learning_rate": float}
    kwargs = {}
    for name in _CONFIG_FIELDS:
        if name not in meta:
            raise FormatError(f"{path}: missing config field {name}")
        kwargs[name] = casts.get(name, int)(meta[name])
    config = SIConfig(**kwargs)
    try:
        params = SIParams(config, **tensors)
    except TypeError:
        raise FormatError(f"{path}: missing tensors") from None
    return params, extra
