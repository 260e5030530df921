"""Collapsed Dirichlet-multinomial (content) and Dirichlet-categorical (vendor) predictives.

All densities are computed in log space through ``gammaln`` so counts in
the millions stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import gammaln


class CountUnderflowError(ValueError):
    pass


@dataclass(frozen=True)
class ContentPrior:
    pseudo_count: float = 0.01
    vocab_size: int = 1

    def __post_init__(self):
        if not self.pseudo_count > 0:
            raise ValueError("content pseudo-count must be positive")
        if self.vocab_size < 1:
            raise ValueError("vocabulary size must be >= 1")


@dataclass(frozen=True)
class VendorPrior:
    pseudo_count: float = 0.1
    num_vendors: int = 1

    def __post_init__(self):
        if not self.pseudo_count > 0:
            raise ValueError("vendor pseudo-count must be positive")
        if self.num_vendors < 1:
            raise ValueError("catalog size must be >= 1")


@dataclass
class ClusterMarkStats:
    """Word and vendor counts of one cluster."""

    num_vendors: int
    word_counts: dict[int, int] = field(default_factory=dict)
    word_total: int = 0
    vendor_counts: np.ndarray = None
    vendor_total: int = 0

    def __post_init__(self):
        if self.vendor_counts is None:
            self.vendor_counts = np.zeros(self.num_vendors, dtype=np.int64)

    def copy(self) -> "ClusterMarkStats":
        return ClusterMarkStats(self.num_vendors, dict(self.word_counts), self.word_total,
                                self.vendor_counts.copy(), self.vendor_total)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ClusterMarkStats)
                and self.word_counts == other.word_counts
                and self.word_total == other.word_total
                and np.array_equal(self.vendor_counts, other.vendor_counts)
                and self.vendor_total == other.vendor_total)


def add_event(stats: ClusterMarkStats, words: Mapping[int, int], vendor: int) -> ClusterMarkStats:
    out = stats.copy()
    for w, c in words.items():
        out.word_counts[w] = out.word_counts.get(w, 0) + c
        out.word_total += c
    out.vendor_counts[vendor] += 1
    out.vendor_total += 1
    return out


def remove_event(stats: ClusterMarkStats, words: Mapping[int, int], vendor: int) -> ClusterMarkStats:
    if stats.vendor_counts[vendor] < 1:
        raise CountUnderflowError(f"vendor {vendor} has no count to remove")
    for w, c in words.items():
        if stats.word_counts.get(w, 0) < c:
            raise CountUnderflowError(f"word {w} count would go negative")
    out = stats.copy()
    for w, c in words.items():
        left = out.word_counts[w] - c
        if left:
            out.word_counts[w] = left
        else:
            del out.word_counts[w]
        out.word_total -= c
    out.vendor_counts[vendor] -= 1
    out.vendor_total -= 1
    return out


def multinomial_log_coefficient(words: Mapping[int, int]) -> float:
    counts = np.fromiter(words.values(), dtype=float, count=len(words))
    return float(gammaln(counts.sum() + 1) - gammaln(counts + 1).sum())


def content_log_predictive(stats: ClusterMarkStats, words: Mapping[int, int], prior: ContentPrior,
                           with_coefficient: bool = True) -> float:
    """Log predictive of a bag of words given the cluster's other words.

    Factors for vocabulary words absent from ``words`` cancel between the
    numerator and denominator products, so only the present ones are summed.
    """
    if not words:
        return 0.0
    idx = np.fromiter(words.keys(), dtype=np.int64, count=len(words))
    if idx.min() < 0 or idx.max() >= prior.vocab_size:
        raise IndexError("word index outside the vocabulary")
    new = np.fromiter(words.values(), dtype=float, count=len(words))
    old = np.array([stats.word_counts.get(int(w), 0) for w in idx], dtype=float)
    th = prior.pseudo_count
    total_prior = th * prior.vocab_size
    out = (gammaln(stats.word_total + total_prior) - gammaln(stats.word_total + new.sum() + total_prior)
           + (gammaln(old + new + th) - gammaln(old + th)).sum())
    if with_coefficient:
        out += multinomial_log_coefficient(words)
    return float(out)


def vendor_log_predictive(stats: ClusterMarkStats, vendor: int, prior: VendorPrior) -> float:
    if not 0 <= vendor < prior.num_vendors:
        raise IndexError(f"vendor {vendor} outside the catalog")
    eta = prior.pseudo_count
    return float(np.log(stats.vendor_counts[vendor] + eta)
                 - np.log(stats.vendor_total + eta * prior.num_vendors))


# Vectorized forms over all clusters of a particle: counts are dense
# (H, |W|) and (H, |V|) arrays.

def content_log_predictive_batch(word_counts: np.ndarray, word_totals: np.ndarray,
                                 word_idx: np.ndarray, word_cnt: np.ndarray,
                                 prior: ContentPrior) -> np.ndarray:
    """Coefficient-free content log predictive for every cluster row."""
    if word_idx.size == 0:
        return np.zeros(word_totals.shape[0])
    th = prior.pseudo_count
    total_prior = th * prior.vocab_size
    old = word_counts[:, word_idx]
    return (gammaln(word_totals + total_prior) - gammaln(word_totals + word_cnt.sum() + total_prior)
            + (gammaln(old + word_cnt + th) - gammaln(old + th)).sum(axis=1))


def vendor_log_predictive_batch(vendor_counts: np.ndarray, vendor_totals: np.ndarray,
                                vendor: int, prior: VendorPrior) -> np.ndarray:
    eta = prior.pseudo_count
    return np.log(vendor_counts[:, vendor] + eta) - np.log(vendor_totals + eta * prior.num_vendors)
