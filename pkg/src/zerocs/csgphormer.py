"""Hop-token transformer encoder (node- and community-level embeddings).

Each node is described by its sequence of hop tokens ``[x_v, (ÂX)_v, ...,
(Â^K X)_v]`` computed inside its augmented subgraph. The sequence is
projected, passed through ``L`` pre-norm transformer layers, and read out
into a node embedding (position 0) and a community embedding (an attention
weighted sum of positions 1..K).
"""

from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .graph_core import Graph, induced_subgraph, propagate
from .sampler import sample_augmented

MAGIC = b"CSGP"
FORMAT_VERSION = 1


class NumericError(FloatingPointError):
    """A forward or backward pass produced a non-finite value."""


@dataclass(frozen=True)
class HopTokenSequence:
    center: int
    tokens: np.ndarray

    @property
    def k(self) -> int:
        return self.tokens.shape[0] - 1


@dataclass(frozen=True)
class EmbeddingPair:
    z_node: np.ndarray
    z_com: np.ndarray


@dataclass
class ModelParams:
    """All encoder weights plus the fixed positional table.

    ``attn_scale`` picks the softmax temperature: ``"head"`` divides scores
    by sqrt(d_head), ``"model"`` by sqrt(d_m).
    """

    d: int
    d_m: int
    d_ff: int
    n_layers: int
    n_heads: int
    k_max: int
    tensors: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)
    attn_scale: str = "head"

    @property
    def d_head(self) -> int:
        return self.d_m // self.n_heads

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.d, self.d_m, self.d_ff, self.n_layers, self.n_heads, self.k_max,
            OrderedDict((k, v.copy()) for k, v in self.tensors.items()), self.attn_scale,
        )

    def trainable(self) -> list[str]:
        return [k for k in self.tensors if k != "pos_enc"]

    def validate(self):
        if self.d_m % self.n_heads:
            raise ValueError(f"d_m={self.d_m} not divisible by n_heads={self.n_heads}")
        for name, shape in tensor_shapes(self).items():
            arr = self.tensors.get(name)
            if arr is None or arr.shape != shape:
                raise ValueError(f"tensor {name}: expected shape {shape}, got {None if arr is None else arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"tensor {name} has non-finite entries")


def tensor_shapes(p: ModelParams) -> "OrderedDict[str, tuple]":
    """Canonical tensor order and shapes; also the on-disk order."""
    shapes = OrderedDict()
    shapes["proj"] = (p.d, p.d_m)
    for l in range(p.n_layers):
        pre = f"layers.{l}."
        shapes[pre + "wq"] = (p.n_heads, p.d_m, p.d_head)
        shapes[pre + "wk"] = (p.n_heads, p.d_m, p.d_head)
        shapes[pre + "wv"] = (p.n_heads, p.d_m, p.d_head)
        shapes[pre + "wo"] = (p.n_heads * p.d_head, p.d_m)
        shapes[pre + "ln1_g"] = (p.d_m,)
        shapes[pre + "ln1_b"] = (p.d_m,)
        shapes[pre + "ln2_g"] = (p.d_m,)
        shapes[pre + "ln2_b"] = (p.d_m,)
        shapes[pre + "w1"] = (p.d_m, p.d_ff)
        shapes[pre + "b1"] = (p.d_ff,)
        shapes[pre + "w2"] = (p.d_ff, p.d_m)
        shapes[pre + "b2"] = (p.d_m,)
    shapes["readout"] = (2 * p.d_m, 1)
    shapes["pos_enc"] = (p.k_max + 1, p.d_m)
    return shapes


def sinusoidal_table(n_pos: int, d_m: int) -> np.ndarray:
    pos = np.arange(n_pos, dtype=np.float64)[:, None]
    i = np.arange(d_m)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d_m)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def init_params(
    d: int,
    d_m: int = 64,
    n_heads: int = 8,
    n_layers: int = 1,
    k_max: int = 5,
    d_ff: int | None = None,
    seed: int = 0,
    attn_scale: str = "head",
) -> ModelParams:
    """Glorot-uniform weights, unit/zero layer norms, zero biases."""
    p = ModelParams(d, d_m, d_ff or 2 * d_m, n_layers, n_heads, k_max, attn_scale=attn_scale)
    if d_m % n_heads:
        raise ValueError(f"d_m={d_m} not divisible by n_heads={n_heads}")
    rng = np.random.default_rng(seed)
    for name, shape in tensor_shapes(p).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "pos_enc":
            arr = sinusoidal_table(k_max + 1, d_m)
        elif leaf.endswith("_g"):
            arr = np.ones(shape)
        elif leaf.endswith("_b") or leaf in ("b1", "b2"):
            arr = np.zeros(shape)
        else:
            fan_in, fan_out = shape[-2], shape[-1]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            arr = rng.uniform(-limit, limit, size=shape)
        p.tensors[name] = arr
    return p


def build_tokens(g_local: Graph, x_local: np.ndarray, center: int, k: int) -> HopTokenSequence:
    if k < 1:
        raise ValueError("k must be >= 1")
    hops = propagate(g_local, x_local, k)
    return HopTokenSequence(center=int(center), tokens=np.stack([h[center] for h in hops]))


def node_tokens(g: Graph, x: np.ndarray, center: int, k_max: int) -> HopTokenSequence:
    """Sample the augmented subgraph of ``center`` and build its hop tokens there."""
    aug = sample_augmented(g, center, k_max)
    sub, mapping = induced_subgraph(g, aug.nodes)
    seq = build_tokens(sub, x[aug.nodes], mapping[int(center)], aug.k_star)
    return HopTokenSequence(center=int(center), tokens=seq.tokens)


def _check(t: ad.Tensor, where: str):
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values in {where}")


def _dropout(h: ad.Tensor, rate: float, rng) -> ad.Tensor:
    if rate <= 0 or rng is None:
        return h
    keep = rng.random(h.shape) >= rate
    return h * (keep / (1.0 - rate))


def forward_group(
    params: ModelParams,
    w: dict,
    tokens: np.ndarray,
    dropout: float = 0.0,
    rng=None,
    pos_enc: np.ndarray | None = None,
):
    """Encode ``B`` sequences of equal length ``K + 1``.

    ``w`` maps tensor names to autodiff leaves. Returns ``(z_node, z_com,
    alpha)`` with ``z_*`` of shape (B, d_m) and ``alpha`` (B, K).
    """
    b, t, d = tokens.shape
    if d != params.d:
        raise ValueError(f"token width {d} does not match projection input {params.d}")
    if t < 2:
        raise ValueError("need at least one neighborhood token")
    h_heads, dh = params.n_heads, params.d_head
    scale = 1.0 / np.sqrt(dh if params.attn_scale == "head" else params.d_m)
    pe = (w["pos_enc"].data if pos_enc is None else pos_enc)[:t]

    h = ad.Tensor(tokens) @ w["proj"]
    h = _dropout(h, dropout, rng)
    for l in range(params.n_layers):
        pre = f"layers.{l}."
        h = h + pe
        x = ad.layer_norm(h, w[pre + "ln1_g"], w[pre + "ln1_b"])
        x4 = x.reshape(b, 1, t, params.d_m)
        q = x4 @ w[pre + "wq"]
        k = x4 @ w[pre + "wk"]
        v = x4 @ w[pre + "wv"]
        att = ad.softmax((q @ k.transpose(0, 1, 3, 2)) * scale, axis=-1)
        heads = (att @ v).transpose(0, 2, 1, 3).reshape(b, t, h_heads * dh)
        h = heads @ w[pre + "wo"] + h
        x = ad.layer_norm(h, w[pre + "ln2_g"], w[pre + "ln2_b"])
        f = ad.gelu(x @ w[pre + "w1"] + w[pre + "b1"])
        f = _dropout(f, dropout, rng)
        h = f @ w[pre + "w2"] + w[pre + "b2"] + h
        _check(h, f"transformer layer {l}")

    z_node = h[:, 0, :]
    hood = h[:, 1:, :]
    wa = w["readout"]
    d_m = params.d_m
    # (h0 || hk) . Wa split into its two halves
    logits = (z_node @ wa[:d_m]).reshape(b, 1) + (hood @ wa[d_m:]).reshape(b, t - 1)
    alpha = ad.softmax(logits, axis=-1)
    z_com = (alpha.reshape(b, t - 1, 1) * hood).sum(axis=1)
    _check(z_com, "readout")
    return z_node, z_com, alpha.data


def leaves(params: ModelParams, requires_grad: bool = False) -> dict:
    return {
        k: ad.Tensor(v, requires_grad=requires_grad and k != "pos_enc")
        for k, v in params.tensors.items()
    }


def forward_sequences(params: ModelParams, w: dict, seqs, dropout: float = 0.0, rng=None):
    """Encode sequences of mixed length; outputs follow the input order."""
    lengths = np.array([s.tokens.shape[0] for s in seqs])
    parts_node, parts_com, order = [], [], []
    for t in np.unique(lengths):
        idx = np.flatnonzero(lengths == t)
        tokens = np.stack([seqs[i].tokens for i in idx])
        zn, zc, _ = forward_group(params, w, tokens, dropout=dropout, rng=rng)
        parts_node.append(zn)
        parts_com.append(zc)
        order.append(idx)
    order = np.concatenate(order)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    z_node = ad.concat(parts_node, axis=0)[inv]
    z_com = ad.concat(parts_com, axis=0)[inv]
    return z_node, z_com


def encode(params: ModelParams, seq: HopTokenSequence, pos_enc: np.ndarray | None = None) -> EmbeddingPair:
    """Inference-mode encoding of one hop-token sequence."""
    zn, zc, _ = forward_group(params, leaves(params), seq.tokens[None], pos_enc=pos_enc)
    return EmbeddingPair(zn.data[0].copy(), zc.data[0].copy())


def readout_weights(params: ModelParams, seq: HopTokenSequence) -> np.ndarray:
    _, _, alpha = forward_group(params, leaves(params), seq.tokens[None])
    return alpha[0]


def encode_batch(params: ModelParams, g: Graph, x: np.ndarray, centers, k_max: int | None = None) -> list[EmbeddingPair]:
    k_max = params.k_max if k_max is None else k_max
    seqs = [node_tokens(g, x, int(c), k_max) for c in centers]
    if not seqs:
        return []
    zn, zc = forward_sequences(params, leaves(params), seqs)
    return [EmbeddingPair(zn.data[i].copy(), zc.data[i].copy()) for i in range(len(seqs))]


def embed_all(params: ModelParams, g: Graph, x: np.ndarray, k_max: int | None = None):
    """(z_node, z_com) matrices of shape (n, d_m) for every node."""
    pairs = encode_batch(params, g, x, range(g.n), k_max)
    return np.stack([p.z_node for p in pairs]), np.stack([p.z_com for p in pairs])


# persistence

_HEADER = struct.Struct("<4sI6I")


def dumps(params: ModelParams) -> bytes:
    params.validate()
    head = _HEADER.pack(
        MAGIC, FORMAT_VERSION, params.d, params.d_m, params.d_ff,
        params.n_layers, params.n_heads, params.k_max,
    )
    body = b"".join(
        np.ascontiguousarray(params.tensors[name], dtype="<f8").tobytes()
        for name in tensor_shapes(params)
    )
    return head + body


def loads(buf: bytes, attn_scale: str = "head") -> tuple[ModelParams, int]:
    """Parse a model blob; returns the params and the number of bytes consumed."""
    if len(buf) < _HEADER.size:
        raise ValueError("truncated model header")
    magic, version, d, d_m, d_ff, n_layers, n_heads, k_max = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    p = ModelParams(d, d_m, d_ff, n_layers, n_heads, k_max, attn_scale=attn_scale)
    off = _HEADER.size
    for name, shape in tensor_shapes(p).items():
        count = int(np.prod(shape))
        end = off + 8 * count
        if end > len(buf):
            raise ValueError(f"truncated model body at tensor {name}")
        p.tensors[name] = np.frombuffer(buf, dtype="<f8", count=count, offset=off).astype(np.float64).reshape(shape)
        off = end
    return p, off


def save_model(params: ModelParams, path):
    with open(path, "wb") as fh:
        fh.write(dumps(params))


def load_model(path, attn_scale: str = "head") -> ModelParams:
    with open(path, "rb") as fh:
        buf = fh.read()
    p, used = loads(buf, attn_scale)
    if used != len(buf):
        raise ValueError(f"{len(buf) - used} trailing bytes after model body")
    return p
