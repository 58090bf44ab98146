"""Self-supervised pre-training: personalization and link losses, Adam loop."""

from __future__ import annotations

import logging
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .csgphormer import (
    EmbeddingPair,
    ModelParams,
    NumericError,
    dumps,
    forward_sequences,
    init_params,
    leaves,
    loads,
    node_tokens,
)
from .graph_core import Graph

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 4000
    learning_rate: float = 1e-3
    alpha: float = 0.1
    margin: float = 0.5
    dropout: float = 0.1
    k_max: int = 5
    seed: int = 0
    patience: int = 10
    min_delta: float = 1e-4
    d_m: int = 64
    n_heads: int = 8
    n_layers: int = 1
    triplet_convention: str = "negated"
    attn_scale: str = "head"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.learning_rate <= 0 or self.batch_size <= 0:
            raise ValueError("learning rate and batch size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.triplet_convention not in ("negated", "standard"):
            raise ValueError("triplet_convention must be 'negated' or 'standard'")


@dataclass(frozen=True)
class LossBreakdown:
    l_p: float
    l_k: float
    total: float
    batch_size: int


@dataclass
class TrainLog:
    rows: list = field(default_factory=list)  # (epoch, l_p, l_k, total, seconds)
    stopped_early: bool = False

    def to_csv(self) -> str:
        lines = ["epoch,l_p,l_k,total,seconds"]
        lines += [f"{e},{float(lp)!r},{float(lk)!r},{float(t)!r},{s:.6f}" for e, lp, lk, t, s in self.rows]
        return "\n".join(lines) + "\n"

    def totals(self) -> list[float]:
        return [r[3] for r in self.rows]


# losses on autodiff tensors; z_* are (B, d_m)

def personalization_term(z_node, z_com, margin: float, convention: str = "negated"):
    """Sum over ordered pairs (v, u) in the batch, not yet normalized.

    ``negated`` is -relu(sig(pos) - sig(neg) + margin), which rewards a wide
    gap; ``standard`` is the usual triplet hinge relu(neg - pos + margin).
    """
    pos = ad.sigmoid((z_node * z_com).sum(axis=1)).reshape(-1, 1)
    neg = ad.sigmoid(z_node @ z_com.transpose(1, 0))
    if convention == "negated":
        return -ad.relu(pos - neg + margin).sum()
    return ad.relu(neg - pos + margin).sum()


def link_term(z_node, adj_block: np.ndarray):
    """Sum over ordered pairs of (1 - 2 A(u, v)) z_u . z_v."""
    gram = z_node @ z_node.transpose(1, 0)
    return (gram * (1.0 - 2.0 * adj_block)).sum()


def _stack(pairs, attr):
    return ad.Tensor(np.stack([getattr(p, attr) for p in pairs]))


def personalization_loss(pairs: list[EmbeddingPair], margin: float = 0.5, convention: str = "negated") -> float:
    if not pairs:
        raise ValueError("empty batch")
    b = len(pairs)
    return float(personalization_term(_stack(pairs, "z_node"), _stack(pairs, "z_com"), margin, convention).data) / b**2


def link_loss(pairs: list[EmbeddingPair], batch, g: Graph) -> float:
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0:
        raise ValueError("empty batch")
    a = batch_adjacency(g, batch)
    return float(link_term(_stack(pairs, "z_node"), a).data) / batch.size**2


def batch_adjacency(g: Graph, batch: np.ndarray) -> np.ndarray:
    return g.adjacency()[batch][:, batch].toarray()


def loss_and_grad(
    params: ModelParams,
    g: Graph,
    x: np.ndarray,
    batch,
    cfg: TrainConfig,
    seqs=None,
    rng=None,
    frozen=(),
    with_grad: bool = True,
):
    """Batch loss ``(L_p + alpha L_k)`` over ordered pairs divided by ``|V_b|^2``
    and its gradient w.r.t. every trainable tensor.

    ``seqs`` optionally supplies precomputed hop-token sequences indexed by
    node id. ``rng`` enables dropout. Tensors named in ``frozen`` get an
    exactly-zero gradient.
    """
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0:
        raise ValueError("empty batch")
    if batch.min() < 0 or batch.max() >= g.n:
        raise IndexError("batch node out of bounds")
    if seqs is None:
        batch_seqs = [node_tokens(g, x, int(v), cfg.k_max) for v in batch]
    else:
        batch_seqs = [seqs[int(v)] for v in batch]
    w = leaves(params, requires_grad=with_grad)
    for name in frozen:
        w[name].requires_grad = False
    dropout = cfg.dropout if rng is not None else 0.0
    z_node, z_com = forward_sequences(params, w, batch_seqs, dropout=dropout, rng=rng)
    b2 = float(batch.size) ** 2
    lp = personalization_term(z_node, z_com, cfg.margin, cfg.triplet_convention) * (1.0 / b2)
    lk = link_term(z_node, batch_adjacency(g, batch)) * (1.0 / b2)
    total = lp + lk * cfg.alpha
    if not np.isfinite(total.data):
        raise NumericError("non-finite loss")
    breakdown = LossBreakdown(float(lp.data), float(lk.data), float(total.data), int(batch.size))
    if not with_grad:
        return breakdown, None
    total.backward()
    grads = {}
    for name in params.trainable():
        gr = w[name].grad
        grads[name] = np.zeros_like(params.tensors[name]) if gr is None else gr
        if not np.all(np.isfinite(grads[name])):
            raise NumericError(f"non-finite gradient for {name}")
    return breakdown, grads


class Adam:
    def __init__(self, params: ModelParams, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(params.tensors[k]) for k in params.trainable()}
        self.v = {k: np.zeros_like(params.tensors[k]) for k in params.trainable()}

    def step(self, params: ModelParams, grads: dict):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, gr in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * gr
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * gr * gr
            params.tensors[k] = params.tensors[k] - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)

    def dumps(self) -> bytes:
        head = struct.pack("<4sQ4d", b"ADAM", self.t, self.lr, self.beta1, self.beta2, self.eps)
        body = b"".join(
            np.ascontiguousarray(self.m[k], "<f8").tobytes() + np.ascontiguousarray(self.v[k], "<f8").tobytes()
            for k in self.m
        )
        return head + body

    @classmethod
    def loads(cls, buf: bytes, params: ModelParams) -> "Adam":
        magic, t, lr, b1, b2, eps = struct.unpack_from("<4sQ4d", buf, 0)
        if magic != b"ADAM":
            raise ValueError("bad optimizer blob")
        opt = cls(params, lr, b1, b2, eps)
        opt.t = t
        off = struct.calcsize("<4sQ4d")
        for k in opt.m:
            size = params.tensors[k].size
            shape = params.tensors[k].shape
            opt.m[k] = np.frombuffer(buf, "<f8", size, off).reshape(shape).copy()
            off += 8 * size
            opt.v[k] = np.frombuffer(buf, "<f8", size, off).reshape(shape).copy()
            off += 8 * size
        return opt


def save_checkpoint(path, params: ModelParams, opt: Adam):
    with open(path, "wb") as fh:
        fh.write(dumps(params))
        fh.write(opt.dumps())


def load_checkpoint(path) -> tuple[ModelParams, Adam]:
    with open(path, "rb") as fh:
        buf = fh.read()
    params, used = loads(buf)
    return params, Adam.loads(buf[used:], params)


def make_batches(n: int, batch_size: int, rng) -> list[np.ndarray]:
    """Shuffle ``range(n)`` and cut it into consecutive batches."""
    perm = rng.permutation(n)
    return [np.sort(perm[i : i + batch_size]) for i in range(0, n, batch_size)]


def pretrain(g: Graph, x: np.ndarray, cfg: TrainConfig, params: ModelParams | None = None):
    """Run the pre-training loop. Returns ``(params, TrainLog)``.

    Augmented subgraphs and their hop tokens are sampled once up front.
    Training stops after ``cfg.epochs`` epochs or when the epoch total loss
    has not improved by ``cfg.min_delta`` for ``cfg.patience`` epochs.
    """
    x = np.asarray(x, dtype=np.float64)
    if params is None:
        params = init_params(
            x.shape[1], d_m=cfg.d_m, n_heads=cfg.n_heads, n_layers=cfg.n_layers,
            k_max=cfg.k_max, seed=cfg.seed, attn_scale=cfg.attn_scale,
        )
    history = TrainLog()
    if cfg.epochs <= 0:
        return params, history
    rng = np.random.default_rng(cfg.seed)
    batches = make_batches(g.n, min(cfg.batch_size, g.n), rng)
    seqs = [node_tokens(g, x, v, cfg.k_max) for v in range(g.n)]
    opt = Adam(params, lr=cfg.learning_rate)
    best, stale = np.inf, 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        sums = np.zeros(3)
        for bi, batch in enumerate(batches):
            try:
                loss, grads = loss_and_grad(params, g, x, batch, cfg, seqs=seqs, rng=rng)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, batch {bi}: {exc}") from exc
            opt.step(params, grads)
            sums += (loss.l_p, loss.l_k, loss.total)
        lp, lk, total = sums / len(batches)
        history.rows.append((epoch, float(lp), float(lk), float(total), time.perf_counter() - t0))
        log.debug("epoch %d l_p=%.6f l_k=%.6f total=%.6f", epoch, lp, lk, total)
        if total < best - cfg.min_delta:
            best, stale = total, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                history.stopped_early = True
                break
    return params, history
