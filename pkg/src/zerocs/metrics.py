"""F1, NMI and Jaccard between a predicted and a ground-truth community."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _ids(nodes) -> set:
    return {int(u) for u in nodes}


def f1(pred, truth) -> float:
    pred, truth = _ids(pred), _ids(truth)
    if not truth:
        raise ValueError("ground-truth community is empty")
    hit = len(pred & truth)
    if not pred or hit == 0:
        return 0.0
    p = hit / len(pred)
    r = hit / len(truth)
    return 2 * p * r / (p + r)


def jaccard(pred, truth) -> float:
    pred, truth = _ids(pred), _ids(truth)
    union = pred | truth
    if not union:
        return 1.0
    return len(pred & truth) / len(union)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth, n: int) -> float:
    """NMI of the membership splits {pred, V - pred} and {truth, V - truth}.

    Mutual information over the 2x2 contingency table, normalized by the
    geometric mean of the two entropies (natural log). A split with zero
    entropy gives 0.
    """
    pred, truth = _ids(pred), _ids(truth)
    members = pred | truth
    if members and (min(members) < 0 or max(members) >= n):
        raise ValueError(f"node ids must lie in [0, {n})")
    a = len(pred & truth)
    b = len(pred - truth)
    c = len(truth - pred)
    d = n - a - b - c
    table = np.array([[a, b], [c, d]], dtype=np.float64)
    rows, cols = table.sum(axis=1), table.sum(axis=0)
    h_pred, h_truth = _entropy(rows, n), _entropy(cols, n)
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    mi = 0.0
    for i in range(2):
        for j in range(2):
            if table[i, j] > 0:
                mi += table[i, j] / n * np.log(table[i, j] * n / (rows[i] * cols[j]))
    return float(min(1.0, max(0.0, mi / np.sqrt(h_pred * h_truth))))


@dataclass
class EvalReport:
    per_query: list = field(default_factory=list)  # dicts with f1, nmi, jac

    @property
    def count(self) -> int:
        return len(self.per_query)

    def mean(self, key: str) -> float:
        return float(np.mean([r[key] for r in self.per_query])) if self.per_query else 0.0

    @property
    def means(self) -> dict:
        return {k: self.mean(k) for k in ("f1", "nmi", "jac")}

    def to_csv(self) -> str:
        lines = ["query,f1,nmi,jac"]
        for i, r in enumerate(self.per_query):
            lines.append(f"{i},{r['f1']!r},{r['nmi']!r},{r['jac']!r}")
        m = self.means
        lines.append(f"mean,{m['f1']!r},{m['nmi']!r},{m['jac']!r}")
        return "\n".join(lines) + "\n"


def evaluate(preds, truths, n: int) -> EvalReport:
    if len(preds) != len(truths):
        raise ValueError(f"{len(preds)} predictions for {len(truths)} ground truths")
    report = EvalReport()
    for p, t in zip(preds, truths):
        report.per_query.append({"f1": f1(p, t), "nmi": nmi(p, t, n), "jac": jaccard(p, t)})
    return report
