import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zerocs.csgphormer import EmbeddingPair
from zerocs.scoring import compute_scores

TABLE = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0], [-1.0, 0.5], [0.0, 0.0]])

# keep clear of subnormals, where multiplying by c is itself lossy
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False).filter(lambda v: v == 0 or abs(v) > 1e-100)
tables = arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(1, 4)), elements=finite)


def test_self_similarity():
    assert compute_scores(TABLE, [2]).scores[2] == pytest.approx(1.0)


def test_orthogonal():
    assert compute_scores(TABLE, [0]).scores[1] == 0.0


def test_zero_vector_contributes_nothing():
    s = compute_scores(TABLE, [4, 0]).scores
    assert s[4] == 0.0 and s[0] == pytest.approx(0.5)


def test_hand_table_all_similarities():
    q = [1, 3]
    for sim in ("cosine", "l1", "l2"):
        got = compute_scores(TABLE, q, sim).scores
        for v in range(5):
            vals = []
            for u in q:
                a, b = TABLE[v], TABLE[u]
                if sim == "cosine":
                    na, nb = np.sqrt(a @ a), np.sqrt(b @ b)
                    vals.append(0.0 if na == 0 or nb == 0 else (a @ b) / (na * nb))
                elif sim == "l1":
                    vals.append(1 / (1 + abs(a[0] - b[0]) + abs(a[1] - b[1])))
                else:
                    vals.append(1 / (1 + np.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)))
            assert got[v] == pytest.approx(sum(vals) / 2, abs=1e-12)


def test_accepts_embedding_pairs():
    pairs = [EmbeddingPair(r, -r) for r in TABLE]
    np.testing.assert_array_equal(compute_scores(pairs, [1]).scores, compute_scores(TABLE, [1]).scores)


def test_errors():
    with pytest.raises(ValueError):
        compute_scores(TABLE, [])
    with pytest.raises(IndexError):
        compute_scores(TABLE, [7])
    with pytest.raises(ValueError):
        compute_scores(TABLE, [0], "dot")


@settings(max_examples=50, deadline=None)
@given(tables, st.floats(0.01, 100), st.data())
def test_score_properties(z, c, data):
    n = z.shape[0]
    u = data.draw(st.integers(0, n - 1))
    v = data.draw(st.integers(0, n - 1))
    cos = compute_scores(z, [u]).scores
    assert np.all(cos >= -1 - 1e-12) and np.all(cos <= 1 + 1e-12)
    np.testing.assert_allclose(compute_scores(z * c, [u]).scores, cos, atol=1e-12)
    assert cos[v] == pytest.approx(compute_scores(z, [v]).scores[u], abs=1e-12)
    for sim in ("l1", "l2"):
        s = compute_scores(z, [u], sim).scores
        assert np.all(s > 0) and np.all(s <= 1)
    if u != v:
        for sim in ("cosine", "l1", "l2"):
            both = compute_scores(z, [u, v], sim).scores
            avg = (compute_scores(z, [u], sim).scores + compute_scores(z, [v], sim).scores) / 2
            np.testing.assert_allclose(both, avg, atol=1e-12)
