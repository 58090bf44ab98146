"""File formats, query generation and the end-to-end pretrain/search pipeline."""

from __future__ import annotations

import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .csgphormer import embed_all, load_model, save_model
from .datasets import identity_features
from .graph_core import Graph, GraphFormatError, as_nodeset, load_features, load_graph
from .identify import EsgConfig, global_search, local_search, oracle_search
from .metrics import evaluate
from .scoring import compute_scores
from .training import TrainConfig, pretrain

log = logging.getLogger(__name__)

SETTINGS = ("inductive", "transductive", "hybrid")
THREADS_ENV = "ZEROCS_THREADS"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class QuerySpec:
    queries: list = field(default_factory=list)
    source_communities: list | None = None
    setting: str = "transductive"

    def to_text(self) -> str:
        lines = []
        for i, q in enumerate(self.queries):
            line = ",".join(map(str, q))
            if self.source_communities is not None:
                line += f" | {self.source_communities[i]}"
            lines.append(line)
        return "\n".join(lines) + ("\n" if lines else "")


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text()
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def load_communities(source) -> list[np.ndarray]:
    """One community per line, space-separated node ids. Communities may overlap."""
    out = []
    for lineno, line in enumerate(io.StringIO(_read_text(source)), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            ids = [int(t) for t in s.split()]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: malformed node id in {s!r}") from None
        if min(ids) < 0:
            raise GraphFormatError(f"line {lineno}: negative node id")
        out.append(as_nodeset(ids))
    return out


def parse_query(text: str) -> np.ndarray:
    try:
        return as_nodeset(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise GraphFormatError(f"malformed query {text!r}") from None


def load_queries(source) -> QuerySpec:
    """Lines of comma-separated query ids, optionally ``| source_index``."""
    queries, sources = [], []
    for line in io.StringIO(_read_text(source)):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        head, _, tail = s.partition("|")
        queries.append(parse_query(head))
        sources.append(int(tail) if tail.strip() else None)
    has_src = bool(sources) and all(x is not None for x in sources)
    return QuerySpec(queries, sources if has_src else None)


def _draw(rng, communities, pool, count):
    queries, sources = [], []
    for _ in range(count):
        ci = int(pool[rng.integers(len(pool))])
        comm = communities[ci]
        size = int(rng.integers(1, min(3, comm.size) + 1))
        queries.append(np.sort(rng.choice(comm, size=size, replace=False)))
        sources.append(ci)
    return queries, sources


def generate_queries(communities, setting: str = "transductive", counts=None, seed: int = 0):
    """Train/val/test query sets of 1-3 nodes drawn from ground-truth communities.

    ``inductive`` splits the communities about 1:1 and draws test queries
    from the held-out half only; ``hybrid`` uses the same split for
    train/val but draws test queries from all communities.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}")
    counts = {"train": 150, "val": 100, "test": 100, **(counts or {})}
    communities = [np.asarray(c) for c in communities]
    if not communities or any(c.size == 0 for c in communities):
        raise ValueError("need at least one nonempty community")
    rng = np.random.default_rng(seed)
    everything = np.arange(len(communities))
    if setting == "transductive":
        train_pool = test_pool = everything
    else:
        if len(communities) < 2:
            raise ValueError(f"{setting} setting needs at least 2 communities")
        perm = rng.permutation(len(communities))
        half = (len(communities) + 1) // 2
        train_pool = np.sort(perm[:half])
        test_pool = np.sort(perm[half:]) if setting == "inductive" else everything
    out = []
    for split, pool in (("train", train_pool), ("val", train_pool), ("test", test_pool)):
        q, src = _draw(rng, communities, pool, counts[split])
        out.append(QuerySpec(q, src, setting))
    return tuple(out)


def write_embeddings_csv(path, z_node: np.ndarray, z_com: np.ndarray):
    with open(path, "w") as fh:
        for v in range(z_node.shape[0]):
            vals = ",".join(repr(float(a)) for a in np.concatenate([z_node[v], z_com[v]]))
            fh.write(f"{v},{vals}\n")


def read_embeddings_csv(path) -> tuple[np.ndarray, np.ndarray]:
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    order = np.argsort(arr[:, 0], kind="stable")
    arr = arr[order]
    width = arr.shape[1] - 1
    if width % 2:
        raise GraphFormatError("embedding CSV must hold equal-width z_node and z_com blocks")
    return arr[:, 1 : 1 + width // 2].copy(), arr[:, 1 + width // 2 :].copy()


def load_embeddings(path) -> tuple[np.ndarray, np.ndarray]:
    """Read embeddings, preferring the ``.npz`` binary cache next to a CSV."""
    path = Path(path)
    cache = path.with_suffix(".npz")
    if path.suffix == ".npz" or (cache.exists() and cache.stat().st_mtime >= path.stat().st_mtime):
        with np.load(cache if path.suffix != ".npz" else path) as data:
            return data["z_node"], data["z_com"]
    return read_embeddings_csv(path)


def save_embeddings(path, z_node, z_com):
    path = Path(path)
    write_embeddings_csv(path, z_node, z_com)
    np.savez(path.with_suffix(".npz"), z_node=z_node, z_com=z_com)


def write_scores_csv(path, scores: np.ndarray):
    with open(path, "w") as fh:
        fh.write("node_id,score\n")
        for v, s in enumerate(scores):
            fh.write(f"{v},{float(s)!r}\n")


def read_scores_csv(path) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = np.zeros(int(arr[:, 0].max()) + 1)
    out[arr[:, 0].astype(int)] = arr[:, 1]
    return out


def read_community_lines(path) -> list[tuple[np.ndarray, np.ndarray]]:
    """(query, members) pairs from community output lines."""
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 5:
            raise GraphFormatError(f"malformed community line {line!r}")
        out.append((parse_query(parts[0]), parse_query(parts[4])))
    return out


def best_truth(query: np.ndarray, communities) -> int:
    """Index of the ground-truth community holding the most query nodes."""
    hits = [np.isin(query, c).sum() for c in communities]
    return int(np.argmax(hits))


def search(method: str, scores, g: Graph, query, esg_cfg: EsgConfig):
    if method == "local":
        return local_search(scores, g, query, esg_cfg)
    if method == "global":
        return global_search(scores, g, query, esg_cfg)
    if method == "oracle":
        return oracle_search(scores, g, query, esg_cfg.tau)
    raise ValueError(f"unknown search method {method!r}")


@dataclass
class RunConfig:
    graph: str
    out_dir: str
    features: str | None = None
    communities: str | None = None
    queries: str | None = None
    query: str | None = None
    model: str | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    esg: EsgConfig = field(default_factory=EsgConfig)
    similarity: str = "cosine"
    method: str = "global"
    setting: str = "transductive"
    n_test: int = 100
    seed: int = 0
    resume: bool = False

    def check_paths(self):
        for name in ("graph", "features", "communities", "queries"):
            p = getattr(self, name)
            if p is not None and not Path(p).exists():
                raise FileNotFoundError(f"{name} file not found: {p}")


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(name, exc) from exc

        return inner

    return wrap


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_pipeline(cfg: RunConfig) -> dict:
    """Pretrain, persist, embed, then score and search every test query.

    Writes ``model.csgp``, ``train_log.csv``, ``embeddings.csv`` (+ ``.npz``),
    ``communities.txt`` and, when ground truth is available, ``report.csv``
    into ``cfg.out_dir``. With ``resume`` an existing model and embedding
    cache are reused instead of recomputed.
    """
    cfg.check_paths()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model_path = Path(cfg.model) if cfg.model else out / "model.csgp"
    emb_path = out / "embeddings.csv"
    result = {"trained": False}

    @_stage("load")
    def load():
        g = load_graph(cfg.graph)
        x = load_features(cfg.features, g.n) if cfg.features else identity_features(g.n)
        comms = load_communities(cfg.communities) if cfg.communities else None
        return g, x, comms

    g, x, comms = load()

    @_stage("queries")
    def queries():
        if cfg.query:
            return QuerySpec([parse_query(cfg.query)], None)
        if cfg.queries:
            return load_queries(cfg.queries)
        if comms is None:
            raise ValueError("no queries: pass a query, a query file or ground-truth communities")
        return generate_queries(comms, cfg.setting, {"train": 0, "val": 0, "test": cfg.n_test}, cfg.seed)[2]

    spec = queries()
    for q in spec.queries:
        as_nodeset(q, g.n)

    @_stage("pretrain")
    def train():
        if cfg.resume and model_path.exists():
            log.info("reusing model %s", model_path)
            return load_model(model_path, cfg.train.attn_scale)
        params, history = pretrain(g, x, cfg.train)
        save_model(params, model_path)
        (out / "train_log.csv").write_text(history.to_csv())
        result["trained"] = True
        result["train_log"] = history
        return params

    params = train()

    @_stage("embed")
    def embed():
        cache = emb_path.with_suffix(".npz")
        if cfg.resume and cache.exists() and not result["trained"]:
            return load_embeddings(cache)
        zn, zc = embed_all(params, g, x, cfg.train.k_max)
        save_embeddings(emb_path, zn, zc)
        return zn, zc

    z_node, _ = embed()

    @_stage("search")
    def run_search():
        def one(q):
            s = compute_scores(z_node, q, cfg.similarity)
            return search(cfg.method, s, g, q, cfg.esg)

        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            found = list(pool.map(one, spec.queries))
        (out / "communities.txt").write_text("".join(c.format_line() + "\n" for c in found))
        return found

    found = run_search()
    result["communities"] = found

    if comms:
        @_stage("eval")
        def run_eval():
            truths = []
            for i, q in enumerate(spec.queries):
                src = spec.source_communities[i] if spec.source_communities else best_truth(q, comms)
                truths.append(comms[src])
            report = evaluate([c.nodes for c in found], truths, g.n)
            (out / "report.csv").write_text(report.to_csv())
            return report

        result["report"] = run_eval()
    return result
