import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn import metrics as skm

from dhstream.evaluation import (aggregate, ars, contingency, nmi, report, reports_csv, silhouette,
                                 top_words, topic_coherence_cv, v_and_h, word_frequency_features)

from oracles import (ars_by_pairs, entropy_by_counts, mutual_info_by_counts,
                     silhouette_by_definition)

# (truth, predicted, ars, nmi, v, h) evaluated by hand
HAND = [
    ([0, 0, 1, 1], [0, 1, 0, 1], -0.5, 0.0, 0.0, 0.0),
    ([0, 0, 1, 1], [0, 0, 1, 2], 4 / 7, 0.8, 0.8, 1.0),
    ([0, 0, 1, 1], [5, 5, 3, 3], 1.0, 1.0, 1.0, 1.0),
    ([0, 0, 0, 0], [0, 0, 0, 0], 1.0, 1.0, 1.0, 1.0),
    ([0, 0, 1], [0, 0, 0], 0.0, 0.0, 0.0, 0.0),
]


def oracle_scores(t, p):
    ht, hp = entropy_by_counts(t), entropy_by_counts(p)
    mi = mutual_info_by_counts(t, p)
    h = 1.0 if ht == 0 else mi / ht
    c = 1.0 if hp == 0 else mi / hp
    v = 0.0 if h + c == 0 else 2 * h * c / (h + c)
    if ht == 0 and hp == 0:
        n = 1.0
    elif ht == 0 or hp == 0:
        n = 0.0
    else:
        n = mi / ((ht + hp) / 2)
    return ars_by_pairs(t, p), n, v, h


def random_tables(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, 40))
        t = rng.integers(0, int(rng.integers(1, 6)), n).tolist()
        p = rng.integers(0, int(rng.integers(1, 7)), n).tolist()
        yield t, p


@pytest.mark.parametrize("t, p, a, n, v, h", HAND)
def test_hand_tables(t, p, a, n, v, h):
    assert ars(t, p) == pytest.approx(a, abs=1e-12)
    assert nmi(t, p) == pytest.approx(n, abs=1e-12)
    got_v, got_h = v_and_h(t, p)
    assert got_v == pytest.approx(v, abs=1e-12)
    assert got_h == pytest.approx(h, abs=1e-12)


def test_against_enumeration_oracle():
    for t, p in random_tables(25, 0):
        a, n, v, h = oracle_scores(t, p)
        assert ars(t, p) == pytest.approx(a, abs=1e-12)
        assert nmi(t, p) == pytest.approx(n, abs=1e-12)
        assert v_and_h(t, p) == pytest.approx((v, h), abs=1e-12)


def test_against_sklearn():
    for t, p in random_tables(100, 1):
        if len(set(t)) > 1 and len(set(p)) > 1:
            assert nmi(t, p) == pytest.approx(skm.normalized_mutual_info_score(t, p), abs=1e-10)
        assert ars(t, p) == pytest.approx(skm.adjusted_rand_score(t, p), abs=1e-10)
        assert v_and_h(t, p)[0] == pytest.approx(skm.v_measure_score(t, p), abs=1e-10)
        assert v_and_h(t, p)[1] == pytest.approx(skm.homogeneity_score(t, p), abs=1e-10)


def test_label_permutation_invariance(rng):
    t, p = next(random_tables(1, 5))
    t, p = np.array(t), np.array(p)
    base = (ars(t, p), nmi(t, p), *v_and_h(t, p))
    for _ in range(100):
        perm_t = rng.permutation(10)
        perm_p = rng.permutation(10)
        got = (ars(perm_t[t], perm_p[p]), nmi(perm_t[t], perm_p[p]), *v_and_h(perm_t[t], perm_p[p]))
        assert got == pytest.approx(base, abs=1e-12)


def test_random_labels_have_near_zero_ars(rng):
    vals = [ars(rng.integers(0, 4, 200), rng.integers(0, 4, 200)) for _ in range(200)]
    assert abs(np.mean(vals)) < 0.01


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=2, max_size=30), st.data())
def test_score_ranges(t, data):
    p = data.draw(st.lists(st.integers(0, 4), min_size=len(t), max_size=len(t)))
    assert -1.0 <= ars(t, p) <= 1.0 + 1e-12
    assert 0.0 <= nmi(t, p) <= 1.0 + 1e-12
    v, h = v_and_h(t, p)
    assert 0.0 <= v <= 1.0 + 1e-12 and 0.0 <= h <= 1.0 + 1e-12
    assert ars(t, t) == pytest.approx(1.0)


def test_length_mismatch():
    with pytest.raises(ValueError):
        ars([0, 1], [0, 1, 1])
    assert contingency([0, 0, 1], [1, 1, 1]).tolist() == [[2], [1]]


# -- silhouette ---------------------------------------------------------------

def test_silhouette_four_points():
    # per point: 19/21, 17/19, 17/19, 19/21
    x = np.array([[0.0], [0.1], [1.0], [1.1]])
    got = silhouette(x, [0, 0, 1, 1])
    assert got == pytest.approx(359 / 399, abs=1e-10)
    assert got == pytest.approx(silhouette_by_definition(x, [0, 0, 1, 1]), abs=1e-12)


def test_silhouette_extremes():
    x = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    assert silhouette(x, [0, 0, 1, 1]) == 1.0
    same = np.ones((4, 3))
    assert silhouette(same, [0, 0, 1, 1]) == 0.0
    with pytest.raises(ValueError):
        silhouette(x, [0, 0, 0, 0])


def test_silhouette_matches_sklearn(rng):
    for distance in ("euclidean", "cosine"):
        x = rng.random((30, 6))
        labels = rng.integers(0, 3, 30)
        labels[:3] = [0, 1, 2]
        # sklearn expands squared norms, which costs it a few digits
        assert silhouette(x, labels, distance) == pytest.approx(
            skm.silhouette_score(x, labels, metric=distance), abs=1e-8)
    x = rng.random((20, 4))
    labels = np.repeat([0, 1, 2, 3], 5)
    assert silhouette(x, labels) == pytest.approx(silhouette_by_definition(x, labels), abs=1e-12)


def test_silhouette_singletons_score_zero():
    x = np.array([[0.0], [0.1], [5.0]])
    assert silhouette(x, [0, 0, 1]) == pytest.approx(silhouette_by_definition(x, [0, 0, 1]), abs=1e-12)


# -- coherence ----------------------------------------------------------------

def cv_by_definition(topics, docs, window, eps=1e-12):
    wins = []
    for d in docs:
        if len(d) <= window:
            wins.append(set(d))
        else:
            wins.extend(set(d[i:i + window]) for i in range(len(d) - window + 1))
    n = len(wins)
    p = lambda *ws: sum(all(w in win for w in ws) for win in wins) / n  # noqa: E731

    def npmi(a, b):
        return math.log((p(a, b) + eps) / ((p(a) + eps) * (p(b) + eps))) / -math.log(p(a, b) + eps)

    out = []
    for topic in topics:
        vecs = [np.array([npmi(a, b) for b in topic]) for a in topic]
        total = sum(vecs)
        sims = [0.0 if not np.linalg.norm(v) * np.linalg.norm(total) else
                float(v @ total / (np.linalg.norm(v) * np.linalg.norm(total))) for v in vecs]
        out.append(np.mean(sims))
    return float(np.mean(out))


def test_cv_full_cooccurrence_is_one():
    docs = [["a", "b", "c"]] * 20
    assert topic_coherence_cv([["a", "b", "c"]], docs) == pytest.approx(1.0, abs=1e-9)


def test_cv_anticorrelated_words_is_low():
    docs = [["a"]] * 10 + [["b"]] * 10
    assert topic_coherence_cv([["a", "b"]], docs) < 0.5


def test_cv_matches_definition(rng):
    words = [f"w{i}" for i in range(12)]
    docs = [list(rng.choice(words, int(rng.integers(1, 30)))) for _ in range(40)]
    topics = [list(rng.choice(words, 5, replace=False)) for _ in range(3)] + [["w0", "zzz"]]
    for window in (4, 110):
        assert topic_coherence_cv(topics, docs, window) == pytest.approx(
            cv_by_definition(topics, docs, window), abs=1e-12)


def test_cv_errors():
    with pytest.raises(ValueError, match="duplicate"):
        topic_coherence_cv([["a", "a"]], [["a"]])
    with pytest.raises(ValueError):
        topic_coherence_cv([["a", "b"]], [])


# -- reports ------------------------------------------------------------------

def test_report_labelled_and_unlabelled(make_stream):
    rows = [(float(i), "va", {"pills": 2, "fast": 1}, 0) for i in range(4)]
    rows += [(float(i) + 0.5, "vb", {"powder": 1, "stealth": 1}, 1) for i in range(4)]
    s = make_stream(rows)
    r = report(s.truth_labels, s)
    assert (r.ars, r.nmi, r.v_score, r.h_score) == (1.0, 1.0, 1.0, 1.0)
    assert r.H_hat == 2 and r.silhouette == 1.0 and r.c_v is not None

    bare = make_stream([(t, v, b, None) for t, v, b, _ in rows])
    r2 = report([0, 1] * 4, bare)  # sources alternate in time
    assert r2.ars is None and r2.nmi is None
    assert r2.silhouette == 1.0 and r2.H_hat == 2


def test_features_and_top_words(make_stream):
    s = make_stream([(0.0, "v", {"a": 3, "b": 1}, 0), (1.0, "v", {}, 0), (2.0, "v", {"b": 2}, 1)])
    x = word_frequency_features(s)
    np.testing.assert_allclose(x, [[0.75, 0.25], [0, 0], [0, 1]])
    assert top_words([0, 0, 1], s, 5) == [["a", "b"], ["b"]]


def test_aggregate_and_csv(make_stream):
    s = make_stream([(0.0, "v", {"a": 1}, 0), (1.0, "v", {"b": 1}, 1), (2.0, "v", {"a": 1}, 0)])
    reps = [report([0, 1, 0], s, name="x"), report([0, 0, 0], s, name="y")]
    mean = aggregate(reps)
    assert mean.ars == pytest.approx((1.0 + 0.0) / 2)
    assert mean.silhouette == reps[0].silhouette  # undefined for y, skipped
    lines = reports_csv(reps + [mean]).splitlines()
    assert lines[0].startswith("name,") and len(lines) == 4


def test_random_labelling_ars_is_chance_adjusted(rng):
    truth = np.repeat(np.arange(5), 20)
    vals = [ars(truth, rng.integers(0, 5, 100)) for _ in range(1000)]
    assert abs(np.mean(vals)) <= 0.02


def test_pure_oversplit_has_unit_homogeneity():
    truth = [0, 0, 0, 1, 1, 1]
    for pred in ([0, 1, 2, 3, 4, 5], [0, 0, 1, 2, 2, 3], [7, 7, 7, 8, 8, 8]):
        assert v_and_h(truth, pred)[1] == 1.0


def test_cosine_silhouette_is_scale_invariant(rng):
    x = rng.random((25, 5))
    labels = rng.integers(0, 3, 25)
    base = silhouette(x, labels, "cosine")
    for scale in (1e-3, 7.0, 1e4):
        assert silhouette(x * scale, labels, "cosine") == pytest.approx(base, abs=1e-12)
