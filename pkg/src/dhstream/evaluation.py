"""Clustering scores: chance-adjusted and information-theoretic agreement with
truth, silhouette over word-frequency features, and C_v topic coherence."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .events import EventStream

DEFAULT_CV_WINDOW = 110
DEFAULT_CV_TOP_K = 10
NPMI_EPSILON = 1e-12
DISTANCES = ("euclidean", "cosine")


def contingency(truth: Sequence[int], predicted: Sequence[int]) -> np.ndarray:
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    if truth.shape != predicted.shape:
        raise ValueError(f"label arrays differ in length ({truth.size} vs {predicted.size})")
    _, ti = np.unique(truth, return_inverse=True)
    _, pi = np.unique(predicted, return_inverse=True)
    table = np.zeros((ti.max() + 1 if ti.size else 0, pi.max() + 1 if pi.size else 0), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def _pairs(x) -> int:
    return sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(x))


def ars(truth: Sequence[int], predicted: Sequence[int]) -> float:
    """Adjusted Rand score from pair counts of the contingency table."""
    table = contingency(truth, predicted)
    n = int(table.sum())
    if n < 2:
        raise ValueError("need at least two events")
    index = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    total = n * (n - 1) // 2
    expected = rows * cols / total
    max_index = (rows + cols) / 2
    if max_index == expected:
        # both partitions trivial (all-one or all-singletons) and identical in kind
        return 1.0
    return float((index - expected) / (max_index - expected))


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    n = counts.sum()
    return float(-(counts / n * np.log(counts / n)).sum()) if n else 0.0


def _mutual_info(table: np.ndarray) -> float:
    n = table.sum()
    rows = table.sum(axis=1, keepdims=True)
    cols = table.sum(axis=0, keepdims=True)
    nz = table > 0
    t = table[nz].astype(float)
    return float((t / n * np.log(t * n / (rows @ cols)[nz])).sum())


def nmi(truth: Sequence[int], predicted: Sequence[int]) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    table = contingency(truth, predicted)
    if table.sum() < 2:
        raise ValueError("need at least two events")
    h_t = _entropy(table.sum(axis=1))
    h_p = _entropy(table.sum(axis=0))
    if h_t == 0 and h_p == 0:
        return 1.0
    if h_t == 0 or h_p == 0:
        return 0.0
    return float(max(_mutual_info(table), 0.0) / ((h_t + h_p) / 2))


def v_and_h(truth: Sequence[int], predicted: Sequence[int]) -> tuple[float, float]:
    """(V-measure, homogeneity)."""
    table = contingency(truth, predicted)
    if table.sum() < 2:
        raise ValueError("need at least two events")
    h_t = _entropy(table.sum(axis=1))
    h_p = _entropy(table.sum(axis=0))
    mi = max(_mutual_info(table), 0.0)
    homogeneity = 1.0 if h_t == 0 else mi / h_t
    completeness = 1.0 if h_p == 0 else mi / h_p
    if homogeneity + completeness == 0:
        return 0.0, homogeneity
    return 2 * homogeneity * completeness / (homogeneity + completeness), homogeneity


def pairwise_distances(features: np.ndarray, distance: str = "euclidean") -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if distance == "euclidean":
        return cdist(x, x, "euclidean")
    if distance == "cosine":
        norm = np.linalg.norm(x, axis=1)
        safe = np.where(norm > 0, norm, 1.0)
        unit = x / safe[:, None]
        return np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    raise ValueError(f"unknown distance {distance!r}; choose from {DISTANCES}")


def silhouette(features, labels: Sequence[int], distance: str = "euclidean") -> float:
    """Mean silhouette; events in singleton clusters score 0."""
    labels = np.asarray(labels)
    x = np.asarray(features, dtype=float)
    if x.shape[0] != labels.size:
        raise ValueError("features and labels differ in length")
    names, inv = np.unique(labels, return_inverse=True)
    if names.size < 2:
        raise ValueError("silhouette is undefined for a single cluster")
    dist = pairwise_distances(x, distance)
    sizes = np.bincount(inv)
    # sum of distances from each event to each cluster
    sums = np.zeros((labels.size, names.size))
    for c in range(names.size):
        sums[:, c] = dist[:, inv == c].sum(axis=1)
    scores = np.zeros(labels.size)
    for i in range(labels.size):
        own = inv[i]
        if sizes[own] == 1:
            continue
        a = sums[i, own] / (sizes[own] - 1)
        others = [sums[i, c] / sizes[c] for c in range(names.size) if c != own]
        b = min(others)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def word_frequency_features(stream: EventStream) -> np.ndarray:
    """L1-normalized bag-of-words rows; empty documents stay all-zero."""
    x = np.zeros((len(stream), max(len(stream.vocabulary), 1)))
    for i, tx in enumerate(stream):
        for w, c in tx.content.items():
            x[i, w] = c
    totals = x.sum(axis=1, keepdims=True)
    return np.divide(x, totals, out=np.zeros_like(x), where=totals > 0)


def _windows(doc: Sequence[str], window: int):
    if len(doc) <= window:
        yield set(doc)
    else:
        for i in range(len(doc) - window + 1):
            yield set(doc[i:i + window])


def topic_coherence_cv(topics: Sequence[Sequence[str]], documents: Sequence[Sequence[str]],
                       window: int = DEFAULT_CV_WINDOW, epsilon: float = NPMI_EPSILON) -> float:
    """C_v coherence averaged over topics.

    Boolean sliding windows give word and pair probabilities; each word gets
    a context vector of NPMI values against the topic's words; a topic's score
    is the mean cosine between each word's vector and the summed vector.
    """
    if not documents:
        raise ValueError("reference corpus is empty")
    for topic in topics:
        if len(topic) < 2:
            raise ValueError("each topic needs at least two words")
        if len(set(topic)) != len(topic):
            raise ValueError(f"duplicate words in topic {list(topic)}")
    vocab = sorted({w for t in topics for w in t})
    pos = {w: i for i, w in enumerate(vocab)}
    single = np.zeros(len(vocab))
    joint = np.zeros((len(vocab), len(vocab)))
    num_windows = 0
    for doc in documents:
        for win in _windows(doc, window):
            num_windows += 1
            present = sorted(pos[w] for w in win if w in pos)
            if present:
                single[present] += 1
                joint[np.ix_(present, present)] += 1
    p = single / num_windows
    scores = []
    for topic in topics:
        idx = [pos[w] for w in topic]
        p1 = p[idx]
        p12 = joint[np.ix_(idx, idx)] / num_windows
        num = p12 + epsilon
        npmi = np.log(num / np.outer(p1 + epsilon, p1 + epsilon)) / -np.log(num)
        total = npmi.sum(axis=0)
        sims = []
        for row in npmi:
            denom = np.linalg.norm(row) * np.linalg.norm(total)
            sims.append(0.0 if denom == 0 else float(row @ total / denom))
        scores.append(float(np.mean(sims)))
    return float(np.mean(scores))


def top_words(labels: Sequence[int], stream: EventStream, k: int) -> list[list[str]]:
    """Most frequent words of each predicted cluster (ties by vocabulary order)."""
    counts: dict[int, Counter] = {}
    for lab, tx in zip(labels, stream):
        counts.setdefault(int(lab), Counter()).update(tx.content)
    out = []
    for lab in sorted(counts):
        ranked = sorted(counts[lab].items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        out.append([stream.vocabulary.word(w) for w, _ in ranked])
    return out


@dataclass
class MetricsReport:
    H_hat: int
    n_events: int
    ars: float | None = None
    nmi: float | None = None
    v_score: float | None = None
    h_score: float | None = None
    silhouette: float | None = None
    c_v: float | None = None
    name: str = ""

    FIELDS = ("name", "n_events", "H_hat", "ars", "nmi", "v_score", "h_score", "silhouette", "c_v")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.FIELDS}


def report(result, stream: EventStream, cv_top_k: int = DEFAULT_CV_TOP_K,
           cv_window: int = DEFAULT_CV_WINDOW, distance: str = "euclidean",
           name: str = "") -> MetricsReport:
    """All applicable scores for one fitted stream.

    ``result`` is a ClusteringResult or a plain label sequence.  Truth-based
    scores are filled only when every event carries a truth label.
    """
    labels = list(getattr(result, "labels", result))
    if len(labels) != len(stream):
        raise ValueError(f"{len(labels)} labels for a stream of {len(stream)} events")
    out = MetricsReport(H_hat=len(set(labels)), n_events=len(labels), name=name)
    truth = stream.truth_labels
    if truth is not None and len(labels) >= 2:
        out.ars = ars(truth, labels)
        out.nmi = nmi(truth, labels)
        out.v_score, out.h_score = v_and_h(truth, labels)
    if out.H_hat >= 2:
        out.silhouette = silhouette(word_frequency_features(stream), labels, distance)
    topics = [t for t in top_words(labels, stream, cv_top_k) if len(t) >= 2]
    if topics:
        out.c_v = topic_coherence_cv(topics, stream.documents(), cv_window)
    return out


def aggregate(reports: Sequence[MetricsReport], name: str = "mean") -> MetricsReport:
    """Mean of every score over sequences (missing scores are skipped)."""
    def mean(field):
        vals = [getattr(r, field) for r in reports if getattr(r, field) is not None]
        return float(np.mean(vals)) if vals else None
    return MetricsReport(
        H_hat=int(round(np.mean([r.H_hat for r in reports]))),
        n_events=int(sum(r.n_events for r in reports)),
        ars=mean("ars"), nmi=mean("nmi"), v_score=mean("v_score"), h_score=mean("h_score"),
        silhouette=mean("silhouette"), c_v=mean("c_v"), name=name)


def reports_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MetricsReport.FIELDS)
    for r in reports:
        row = r.to_dict()
        writer.writerow(["" if row[k] is None else row[k] for k in MetricsReport.FIELDS])
    return buf.getvalue()
