"""Sequential Monte Carlo over cluster assignments of a marked event stream.

Every particle holds one assignment history together with dense per-cluster
count tables.  Each incoming event is assigned by drawing from its exact local
posterior (intensity prior times collapsed vendor and content predictives);
the particle weight is multiplied by that posterior's normalizer, i.e. the
event's marginal likelihood under the particle.
"""

from __future__ import annotations

import bisect
import copy
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .events import EventStream, Transaction
from .hawkes import (HawkesParams, KernelWeights, fit_weights_mle, kernel_matrix,
                     gaussian_mass)
from .marks import (ClusterMarkStats, ContentPrior, VendorPrior,
                    content_log_predictive_batch, vendor_log_predictive_batch)

SAMPLING_MODES = ("sample", "argmax")


@dataclass(frozen=True)
class SmcConfig:
    num_particles: int = 8
    ess_threshold: float = 0.5
    seed: int = 0
    use_vendor: bool = True
    use_content: bool = True
    use_time: bool = True
    sampling: str = "sample"
    refit_every: int = 10

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError("num_particles must be >= 1")
        if not 0 < self.ess_threshold <= 1:
            raise ValueError("ess_threshold must lie in (0, 1]")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}")
        if self.refit_every < 1:
            raise ValueError("refit_every must be >= 1")


@dataclass
class ClusterState:
    times: list[float]
    weights: KernelWeights
    stats: ClusterMarkStats


class Particle:
    """One assignment hypothesis with its sufficient statistics."""

    def __init__(self, num_kernels: int, vocab_size: int, num_vendors: int, capacity: int = 8):
        self.times: list[float] = []
        self.assignments: list[int] = []
        self.cluster_times: list[list[float]] = []
        self.since_refit: list[int] = []
        self.num_clusters = 0
        self.log_weight = 0.0
        self.alpha = np.zeros((capacity, num_kernels))
        self.word_counts = np.zeros((capacity, vocab_size))
        self.word_totals = np.zeros(capacity)
        self.vendor_counts = np.zeros((capacity, num_vendors))
        self.vendor_totals = np.zeros(capacity)

    def copy(self) -> "Particle":
        return copy.deepcopy(self)

    @property
    def last_time(self) -> float:
        return self.times[-1] if self.times else 0.0

    def _grow(self):
        for name in ("alpha", "word_counts", "word_totals", "vendor_counts", "vendor_totals"):
            arr = getattr(self, name)
            setattr(self, name, np.concatenate([arr, np.zeros_like(arr)]))

    def new_cluster(self) -> int:
        h = self.num_clusters
        if h == self.alpha.shape[0]:
            self._grow()
        k = self.alpha.shape[1]
        self.alpha[h] = 1.0 / k
        self.cluster_times.append([])
        self.since_refit.append(0)
        self.num_clusters += 1
        return h

    def add(self, h: int, tx: Transaction):
        if h == self.num_clusters:
            self.new_cluster()
        self.times.append(tx.time)
        self.assignments.append(h)
        self.cluster_times[h].append(tx.time)
        self.since_refit[h] += 1
        for w, c in tx.content.items():
            self.word_counts[h, w] += c
        self.word_totals[h] += tx.num_tokens
        self.vendor_counts[h, tx.vendor_id] += 1
        self.vendor_totals[h] += 1

    def _recent(self, t: float, window: float):
        lo = bisect.bisect_left(self.times, t - window)
        return np.asarray(self.times[lo:]), np.asarray(self.assignments[lo:], dtype=np.int64)

    def intensities(self, t: float, params: HawkesParams) -> np.ndarray:
        """Per-cluster intensity at ``t`` from strictly earlier events."""
        H = self.num_clusters
        times, labs = self._recent(t, params.kernels.truncation_window)
        if times.size == 0:
            return np.zeros(H)
        dt = t - times
        keep = dt > 0
        if not keep.any():
            return np.zeros(H)
        dt, labs = dt[keep], labs[keep]
        contrib = (kernel_matrix(dt, params.kernels) * self.alpha[labs]).sum(axis=1)
        return np.bincount(labs, contrib, minlength=H)

    def integrated_intensity(self, a: float, b: float, params: HawkesParams) -> float:
        """Total intensity integrated over [a, b] (closed form)."""
        cfg = params.kernels
        out = params.base_intensity * (b - a)
        if b <= a:
            return out
        times, labs = self._recent(a, cfg.truncation_window)
        if times.size == 0:
            return out
        sigma = cfg.widths
        u_lo = np.clip(a - times, 0.0, cfg.truncation_window)[:, None]
        u_hi = np.clip(b - times, 0.0, cfg.truncation_window)[:, None]
        masses = sigma * gaussian_mass((u_lo - cfg.delays) / sigma, (u_hi - cfg.delays) / sigma)
        return out + float((masses * self.alpha[labs]).sum())

    def weights(self, h: int) -> KernelWeights:
        return KernelWeights(self.alpha[h] / self.alpha[h].sum())

    def stats(self, h: int) -> ClusterMarkStats:
        row = self.word_counts[h]
        nz = np.flatnonzero(row)
        return ClusterMarkStats(
            self.vendor_counts.shape[1],
            {int(w): int(row[w]) for w in nz}, int(self.word_totals[h]),
            self.vendor_counts[h].astype(np.int64), int(self.vendor_totals[h]))

    @property
    def clusters(self) -> list[ClusterState]:
        return [ClusterState(list(self.cluster_times[h]), self.weights(h), self.stats(h))
                for h in range(self.num_clusters)]

    def refit(self, h: int, params: HawkesParams, horizon: float):
        fit = fit_weights_mle(self.cluster_times[h], params.kernels, params, horizon)
        self.alpha[h] = fit.weights.alpha
        self.since_refit[h] = 0


def _check_order(particle: Particle, tx: Transaction):
    if particle.times and tx.time < particle.last_time:
        raise ValueError(f"event at {tx.time} precedes particle's last event at {particle.last_time}")


def joint_log_scores(particle: Particle, tx: Transaction, params: HawkesParams,
                     content_prior: ContentPrior, vendor_prior: VendorPrior,
                     config: SmcConfig) -> np.ndarray:
    """Unnormalized log scores for clusters 0..H-1 and the new-cluster option.

    With the time factor on, the time term is the intensity itself, so the
    log-sum-exp of the result is the event's joint density up to the survival
    term.  Multinomial coefficients are omitted (constant across options).
    """
    _check_order(particle, tx)
    H = particle.num_clusters
    scores = np.zeros(H + 1)
    if config.use_time:
        lam = particle.intensities(tx.time, params)
        with np.errstate(divide="ignore"):
            scores[:H] = np.log(lam)
        scores[H] = math.log(params.base_intensity)
    if config.use_content and tx.content:
        idx = np.fromiter(tx.content.keys(), dtype=np.int64, count=len(tx.content))
        cnt = np.fromiter(tx.content.values(), dtype=float, count=len(tx.content))
        if H:
            scores[:H] += content_log_predictive_batch(
                particle.word_counts[:H], particle.word_totals[:H], idx, cnt, content_prior)
        th = content_prior.pseudo_count
        scores[H] += (gammaln(th * content_prior.vocab_size)
                      - gammaln(cnt.sum() + th * content_prior.vocab_size)
                      + (gammaln(cnt + th) - gammaln(th)).sum())
    if config.use_vendor:
        if H:
            scores[:H] += vendor_log_predictive_batch(
                particle.vendor_counts[:H], particle.vendor_totals[:H], tx.vendor_id, vendor_prior)
        scores[H] += -math.log(vendor_prior.num_vendors)
    return scores


def assignment_scores(particle: Particle, tx: Transaction, params: HawkesParams,
                      content_prior: ContentPrior, vendor_prior: VendorPrior,
                      config: SmcConfig = SmcConfig()) -> np.ndarray:
    """Normalized log posterior over the event's cluster (last entry: new cluster)."""
    joint = joint_log_scores(particle, tx, params, content_prior, vendor_prior, config)
    return joint - logsumexp(joint)


def advance(particle: Particle, tx: Transaction, params: HawkesParams,
            content_prior: ContentPrior, vendor_prior: VendorPrior, config: SmcConfig,
            rng: np.random.Generator) -> Particle:
    """Assign ``tx`` within ``particle`` (in place) and update its weight."""
    joint = joint_log_scores(particle, tx, params, content_prior, vendor_prior, config)
    log_norm = logsumexp(joint)
    if config.sampling == "argmax":
        h = int(np.argmax(joint))
    else:
        p = np.exp(joint - log_norm)
        h = int(rng.choice(p.size, p=p / p.sum()))
    increment = log_norm
    if config.use_time:
        increment -= particle.integrated_intensity(particle.last_time, tx.time, params)
    particle.log_weight += increment
    particle.add(h, tx)
    if config.use_time and particle.since_refit[h] >= config.refit_every:
        particle.refit(h, params, tx.time)
    return particle


def normalized_weights(particles: Sequence[Particle]) -> np.ndarray:
    lw = np.array([p.log_weight for p in particles])
    w = np.exp(lw - lw.max())
    return w / w.sum()


def effective_sample_size(particles: Sequence[Particle]) -> float:
    w = normalized_weights(particles)
    return float(1.0 / np.sum(w * w))


def systematic_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.size
    positions = (rng.uniform() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


def resample(particles: Sequence[Particle], rng: np.random.Generator) -> list[Particle]:
    """Systematic resampling; survivors get uniform weights."""
    idx = systematic_indices(normalized_weights(particles), rng)
    out = []
    for i in idx:
        p = particles[i].copy()
        p.log_weight = 0.0
        out.append(p)
    return out


@dataclass
class ClusterSummary:
    index: int
    size: int
    event_times: list[float]
    alpha: list[float]
    top_words: list[tuple[str, int]]
    vendor_histogram: dict[str, int]


@dataclass
class ClusteringResult:
    labels: list[int]
    num_clusters: int
    clusters: list[ClusterSummary]
    log_weight: float = 0.0
    trace_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    trace: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "H_hat": self.num_clusters,
            "log_weight": self.log_weight,
            "clusters": [
                {"index": c.index, "size": c.size, "event_times": c.event_times,
                 "alpha": c.alpha, "top_words": [[w, n] for w, n in c.top_words],
                 "vendor_histogram": c.vendor_histogram}
                for c in self.clusters],
        }

    def write_trace_csv(self, path: str | Path):
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t_days"] + [f"lambda_{h}" for h in range(self.num_clusters)])
            for t, row in zip(self.trace_times, self.trace):
                writer.writerow([repr(float(t))] + [repr(float(x)) for x in row])


def intensity_trace(particle: Particle, params: HawkesParams, grid: np.ndarray) -> np.ndarray:
    out = np.zeros((grid.size, particle.num_clusters))
    for i, t in enumerate(grid):
        out[i] = particle.intensities(float(t), params)
    return out


def summarize(particle: Particle, stream: EventStream, top_k: int = 15) -> list[ClusterSummary]:
    out = []
    for h in range(particle.num_clusters):
        row = particle.word_counts[h]
        order = sorted(np.flatnonzero(row), key=lambda w: (-row[w], w))[:top_k]
        vend = particle.vendor_counts[h]
        out.append(ClusterSummary(
            index=h,
            size=len(particle.cluster_times[h]),
            event_times=list(particle.cluster_times[h]),
            alpha=[float(a) for a in particle.alpha[h]],
            top_words=[(stream.vocabulary.word(int(w)), int(row[w])) for w in order],
            vendor_histogram={stream.vendors.name(int(v)): int(vend[v]) for v in np.flatnonzero(vend)},
        ))
    return out


def fit_sequence(stream: EventStream, params: HawkesParams = HawkesParams(),
                 config: SmcConfig = SmcConfig(), content_pseudo_count: float = 0.01,
                 vendor_pseudo_count: float = 0.1, trace_step: float = 1.0,
                 top_k: int = 15) -> ClusteringResult:
    """Cluster a stream; labels come from the highest-weight particle."""
    if len(stream) == 0:
        raise ValueError("cannot fit an empty stream")
    content_prior = ContentPrior(content_pseudo_count, max(len(stream.vocabulary), 1))
    vendor_prior = VendorPrior(vendor_pseudo_count, max(len(stream.vendors), 1))
    rng = np.random.default_rng(config.seed)
    k = params.kernels.num_kernels
    particles = [Particle(k, content_prior.vocab_size, vendor_prior.num_vendors)
                 for _ in range(config.num_particles)]
    threshold = config.ess_threshold * config.num_particles
    for tx in stream:
        for p in particles:
            advance(p, tx, params, content_prior, vendor_prior, config, rng)
        if config.num_particles > 1 and effective_sample_size(particles) < threshold:
            particles = resample(particles, rng)

    lw = [p.log_weight for p in particles]
    best = particles[int(np.argmax(lw))]
    if config.use_time:
        for h in range(best.num_clusters):
            best.refit(h, params, stream.horizon)
    grid = np.arange(0.0, stream.horizon + trace_step * 0.5, trace_step) if trace_step > 0 else np.zeros(0)
    return ClusteringResult(
        labels=list(best.assignments),
        num_clusters=best.num_clusters,
        clusters=summarize(best, stream, top_k),
        log_weight=float(best.log_weight),
        trace_times=grid,
        trace=intensity_trace(best, params, grid),
    )
