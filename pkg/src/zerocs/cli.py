"""Command-line entry point.

Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric error. Any flag can also
come from a ``key=value`` file given with ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .csgphormer import NumericError, embed_all, load_model, save_model
from .datasets import identity_features
from .graph_core import load_features, load_graph
from .identify import EsgConfig
from .metrics import evaluate
from .pipeline import (
    RunConfig,
    StageError,
    best_truth,
    generate_queries,
    load_communities,
    load_embeddings,
    parse_query,
    read_community_lines,
    read_scores_csv,
    run_pipeline,
    save_embeddings,
    search,
    write_scores_csv,
)
from .sampler import sample_augmented
from .scoring import compute_scores
from .training import TrainConfig, pretrain

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _add_train(p):
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=4000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--heads", type=int, default=8)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--triplet", choices=("negated", "standard"), default="negated")
    p.add_argument("--attn-scale", choices=("head", "model"), default="head")


def _add_search(p, tau=0.5):
    p.add_argument("--tau", type=float, default=tau)
    p.add_argument("--max-size", type=int, default=None)


def _train_cfg(a) -> TrainConfig:
    return TrainConfig(
        epochs=a.epochs, batch_size=a.batch_size, learning_rate=a.lr, alpha=a.alpha,
        margin=a.margin, dropout=a.dropout, k_max=a.k_max, seed=a.seed, patience=a.patience,
        d_m=a.d_model, n_heads=a.heads, n_layers=a.layers, triplet_convention=a.triplet,
        attn_scale=a.attn_scale,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zerocs", description="Label-free community search.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value file supplying defaults for any flag")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = cmd("pretrain", "pre-train the encoder and save it")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--log", help="training log CSV path")
    _add_train(p)

    p = cmd("embed", "embed every node with a saved model")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="embeddings CSV path")
    p.add_argument("--k-max", type=int, default=None)

    p = cmd("score", "community scores for a query")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--similarity", choices=("cosine", "l1", "l2"), default="cosine")
    p.add_argument("--out", help="scores CSV path (stdout if omitted)")

    for name, tau, help in (("search", 0.5, "heuristic community search"), ("oracle", 1.0, "exhaustive search (<= 20 nodes)")):
        p = cmd(name, help)
        p.add_argument("--graph", required=True)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scores")
        src.add_argument("--embeddings")
        p.add_argument("--query", required=True)
        p.add_argument("--similarity", choices=("cosine", "l1", "l2"), default="cosine")
        if name == "search":
            p.add_argument("--method", choices=("local", "global"), default="global")
        _add_search(p, tau)

    p = cmd("eval", "score community lines against ground truth")
    p.add_argument("--graph", required=True)
    p.add_argument("--pred", required=True, help="community lines file")
    p.add_argument("--truth", required=True, help="ground-truth communities file")
    p.add_argument("--out", help="report CSV path (stdout if omitted)")

    p = cmd("gen-queries", "generate train/val/test query files")
    p.add_argument("--communities", required=True)
    p.add_argument("--setting", choices=("inductive", "transductive", "hybrid"), default="transductive")
    p.add_argument("--train", type=int, default=150)
    p.add_argument("--val", type=int, default=100)
    p.add_argument("--test", type=int, default=100)
    p.add_argument("--out-dir", required=True)

    p = cmd("run", "full pipeline: pretrain, embed, search, evaluate")
    p.add_argument("--graph", required=True)
    p.add_argument("--features")
    p.add_argument("--communities")
    p.add_argument("--queries")
    p.add_argument("--query")
    p.add_argument("--model")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--similarity", choices=("cosine", "l1", "l2"), default="cosine")
    p.add_argument("--method", choices=("local", "global"), default="global")
    p.add_argument("--setting", choices=("inductive", "transductive", "hybrid"), default="transductive")
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--resume", action="store_true")
    _add_train(p)
    _add_search(p)

    p = cmd("sample", "show the augmented subgraph chosen for a node")
    p.add_argument("--graph", required=True)
    p.add_argument("--center", type=int, required=True)
    p.add_argument("--k-max", type=int, default=5)
    return parser


def _config_args(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Splice ``--config`` file entries in front of the explicit flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    sub_name = next((a for a in argv if not a.startswith("-")), None)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices.get(sub_name)
    if sub is None:
        return argv
    flags = {s: a for a in sub._actions for s in a.option_strings}
    extra = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        key, eq, value = s.partition("=")
        if not eq:
            raise SystemExit(f"zerocs: {path}:{lineno}: expected key=value")
        flag = "--" + key.strip().replace("_", "-")
        action = flags.get(flag)
        if action is None:
            raise SystemExit(f"zerocs: {path}:{lineno}: unknown option {key.strip()!r}")
        value = value.strip()
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                extra.append(flag)
        else:
            extra += [flag, value]
    pos = argv.index(sub_name) + 1
    return argv[:pos] + extra + argv[pos:]


def _features(a, n):
    return load_features(a.features, n) if getattr(a, "features", None) else identity_features(n)


def _scores_for(a, n):
    query = parse_query(a.query)
    if a.scores:
        scores = read_scores_csv(a.scores)
    else:
        z_node, _ = load_embeddings(a.embeddings)
        scores = compute_scores(z_node, query, a.similarity).scores
    if scores.size != n:
        raise ValueError(f"{scores.size} scores for a graph with {n} nodes")
    return scores, query


def _run(a) -> int:
    if a.command == "pretrain":
        g = load_graph(a.graph)
        params, history = pretrain(g, _features(a, g.n), _train_cfg(a))
        save_model(params, a.model)
        if a.log:
            Path(a.log).write_text(history.to_csv())
        if history.rows:
            print(f"epochs={len(history.rows)} final_total={history.rows[-1][3]:.6f}")
    elif a.command == "embed":
        g = load_graph(a.graph)
        params = load_model(a.model)
        zn, zc = embed_all(params, g, _features(a, g.n), a.k_max)
        save_embeddings(a.out, zn, zc)
    elif a.command == "score":
        z_node, _ = load_embeddings(a.embeddings)
        s = compute_scores(z_node, parse_query(a.query), a.similarity)
        if a.out:
            write_scores_csv(a.out, s.scores)
        else:
            print("node_id,score")
            for v, x in enumerate(s.scores):
                print(f"{v},{float(x)!r}")
    elif a.command in ("search", "oracle"):
        g = load_graph(a.graph)
        scores, query = _scores_for(a, g.n)
        method = a.method if a.command == "search" else "oracle"
        print(search(method, scores, g, query, EsgConfig(a.tau, a.max_size)).format_line())
    elif a.command == "eval":
        g = load_graph(a.graph)
        comms = load_communities(a.truth)
        pairs = read_community_lines(a.pred)
        report = evaluate([m for _, m in pairs], [comms[best_truth(q, comms)] for q, _ in pairs], g.n)
        if a.out:
            Path(a.out).write_text(report.to_csv())
        else:
            sys.stdout.write(report.to_csv())
    elif a.command == "gen-queries":
        comms = load_communities(a.communities)
        out = Path(a.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        counts = {"train": a.train, "val": a.val, "test": a.test}
        for name, spec in zip(("train", "val", "test"), generate_queries(comms, a.setting, counts, a.seed)):
            (out / f"{name}_queries.txt").write_text(spec.to_text())
    elif a.command == "run":
        cfg = RunConfig(
            graph=a.graph, out_dir=a.out_dir, features=a.features, communities=a.communities,
            queries=a.queries, query=a.query, model=a.model, train=_train_cfg(a),
            esg=EsgConfig(a.tau, a.max_size), similarity=a.similarity, method=a.method,
            setting=a.setting, n_test=a.n_test, seed=a.seed, resume=a.resume,
        )
        result = run_pipeline(cfg)
        for c in result["communities"]:
            print(c.format_line())
        if "report" in result:
            m = result["report"].means
            print(f"mean f1={m['f1']:.4f} nmi={m['nmi']:.4f} jac={m['jac']:.4f}")
    elif a.command == "sample":
        g = load_graph(a.graph)
        aug = sample_augmented(g, a.center, a.k_max)
        print(f"center={aug.center} k_star={aug.k_star} conductance={aug.conductance:.6f} size={aug.nodes.size}")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_config_args(parser, argv))
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_USAGE
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return _run(args)
    except StageError as exc:
        print(f"zerocs: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, (NumericError, FloatingPointError)) else EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"zerocs: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, IndexError) as exc:
        print(f"zerocs: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
