"""Synthetic labelled streams from the Dirichlet-Hawkes generative process."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .events import EventStream, build_stream, mix_ground_truth, with_labels
from .hawkes import HawkesParams, KernelConfig, cluster_intensity, next_event_time
from .prior import dhp_assignment_prior

GENERATOR_ORIGIN = datetime(2019, 1, 1, tzinfo=timezone.utc)
SCENARIOS = ("separable", "overlapping", "vendor-only", "time-only")


def word_name(i: int) -> str:
    return f"w{i:04d}"


def vendor_name(i: int) -> str:
    return f"vendor{i:03d}"


@dataclass(frozen=True)
class SourceSpec:
    """A fixed hidden source: its mark distributions and activity.

    The source's first event happens at ``onset``; later ones follow a
    Hawkes process with base rate ``base_rate`` and the source's own kernel
    weights.  ``alpha=None`` draws the weights from the kernel-weight prior.
    """

    theta: tuple[float, ...]
    eta: tuple[float, ...]
    onset: float
    num_events: int
    base_rate: float
    alpha: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GeneratorConfig:
    params: HawkesParams = field(default_factory=HawkesParams)
    alpha0: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)
    theta0: float = 0.01
    eta0: float = 0.1
    vocab_size: int = 200
    num_vendors: int = 20
    num_events: int = 200
    mean_content_length: float = 8.0
    seed: int = 0
    sources: tuple[SourceSpec, ...] = ()
    scenario: str | None = None

    def validate(self) -> list[str]:
        """Names of offending fields (empty when valid)."""
        bad = []
        if len(self.alpha0) != self.params.kernels.num_kernels or min(self.alpha0) <= 0:
            bad.append("alpha0")
        if not self.theta0 > 0:
            bad.append("theta0")
        if not self.eta0 > 0:
            bad.append("eta0")
        if self.vocab_size < 1:
            bad.append("vocab_size")
        if self.num_vendors < 1:
            bad.append("num_vendors")
        if self.num_events < 1:
            bad.append("num_events")
        if self.mean_content_length < 0:
            bad.append("mean_content_length")
        if self.sources:
            if sum(s.num_events for s in self.sources) != self.num_events:
                bad.append("sources")
            for s in self.sources:
                if (len(s.theta) != self.vocab_size or len(s.eta) != self.num_vendors
                        or s.num_events < 1 or s.base_rate <= 0 or s.onset < 0):
                    bad.append("sources")
                    break
        return bad

    def __post_init__(self):
        bad = self.validate()
        if bad:
            raise ValueError(f"invalid generator config: {', '.join(bad)}")


@dataclass
class Simulation:
    stream: EventStream
    truth: list[dict]

    def sidecar(self) -> dict:
        return {
            "vocabulary": self.stream.vocabulary.words,
            "vendors": self.stream.vendors.names,
            "sources": self.truth,
        }

    def write_sidecar(self, path: str | Path):
        Path(path).write_text(json.dumps(self.sidecar(), sort_keys=True, indent=1))


def _draw_marks(rng, theta, eta, mean_length):
    n = rng.poisson(mean_length) if mean_length > 0 else 0
    counts = rng.multinomial(n, theta) if n else np.zeros(len(theta), dtype=int)
    bag = {word_name(int(w)): int(counts[w]) for w in np.flatnonzero(counts)}
    vendor = vendor_name(int(rng.choice(len(eta), p=eta)))
    return bag, vendor


def _truth_record(theta, eta, alpha) -> dict:
    return {
        "theta": {word_name(int(w)): float(theta[w]) for w in np.flatnonzero(theta)},
        "eta": {vendor_name(int(v)): float(eta[v]) for v in np.flatnonzero(eta)},
        "alpha": [float(a) for a in alpha],
    }


def _normalize(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p / p.sum()


def generate(config: GeneratorConfig) -> Simulation:
    """Sample a labelled stream.

    Without explicit sources this runs the full generative process: each
    event time is drawn by thinning from the current total intensity, its
    source from the intensity-weighted prior, new sources draw their mark
    distributions and kernel weights from the Dirichlet priors, then the
    words and vendor are drawn.  With ``config.sources`` each listed source
    is simulated on its own and the streams are merged by time.
    """
    rng = np.random.default_rng(config.seed)
    if config.sources:
        return _generate_sources(config, rng)

    params = config.params
    kcfg = params.kernels
    histories: list[list[float]] = []
    alphas: list[np.ndarray] = []
    thetas, etas = [], []
    rows = []
    t = 0.0
    for _ in range(config.num_events):
        t = next_event_time(list(zip(histories, alphas)), params, t, rng)
        lam = [cluster_intensity(h, a, kcfg, t) for h, a in zip(histories, alphas)]
        u = int(rng.choice(len(lam) + 1, p=dhp_assignment_prior(lam, params.base_intensity)))
        if u == len(histories):
            etas.append(rng.dirichlet(np.full(config.num_vendors, config.eta0)))
            thetas.append(rng.dirichlet(np.full(config.vocab_size, config.theta0)))
            alphas.append(rng.dirichlet(np.asarray(config.alpha0, dtype=float)))
            histories.append([])
        histories[u].append(t)
        bag, vendor = _draw_marks(rng, thetas[u], etas[u], config.mean_content_length)
        rows.append((t, "synthetic", vendor, bag, u))
    for (t0, *_), (t1, *_) in zip(rows, rows[1:]):
        assert t1 > t0, "thinning produced non-increasing times"
    stream = build_stream(rows, GENERATOR_ORIGIN)
    truth = [_truth_record(th, et, al) for th, et, al in zip(thetas, etas, alphas)]
    return Simulation(stream, truth)


def _generate_sources(config: GeneratorConfig, rng) -> Simulation:
    kcfg = config.params.kernels
    streams, truth = [], []
    for spec in config.sources:
        theta, eta = _normalize(spec.theta), _normalize(spec.eta)
        if spec.alpha is None:
            alpha = rng.dirichlet(np.asarray(config.alpha0, dtype=float))
        else:
            alpha = _normalize(spec.alpha)
        params = HawkesParams(spec.base_rate, kcfg)
        times = [spec.onset]
        while len(times) < spec.num_events:
            times.append(next_event_time([(times, alpha)], params, times[-1], rng))
        rows = []
        for t in times:
            bag, vendor = _draw_marks(rng, theta, eta, config.mean_content_length)
            rows.append((t, "synthetic", vendor, bag, None))
        streams.append(build_stream(rows, GENERATOR_ORIGIN, horizon=times[-1]))
        truth.append(_truth_record(theta, eta, alpha))
    mixed = mix_ground_truth(streams) if len(streams) > 1 else _label_single(streams[0])
    return Simulation(mixed, truth)


def _label_single(stream: EventStream) -> EventStream:
    return with_labels(stream, [0] * len(stream))


def _split(n: int, parts: int) -> list[int]:
    return [n // parts + (1 if i < n % parts else 0) for i in range(parts)]


def _block(size: int, start: int, stop: int, rng, weight: float = 1.0) -> np.ndarray:
    """Random distribution supported on [start, stop) scaled to ``weight``."""
    p = np.zeros(size)
    p[start:stop] = rng.dirichlet(np.full(stop - start, 2.0)) * weight
    return p


def make_scenario(name: str, num_events: int = 200, num_sources: int = 5, seed: int = 0,
                  kernels: KernelConfig | None = None, base_intensity: float = 0.05) -> GeneratorConfig:
    """Canned ground-truth mixtures of ``num_sources`` hidden sources.

    separable     disjoint words, disjoint vendors, onsets 120 days apart
    overlapping   half of each source's word mass on a shared pool, own
                  vendors, onsets 30 days apart
    vendor-only   one uniform word distribution for everyone, each source
                  concentrated on its own vendor, simultaneous activity
    time-only     uniform words and vendors, onsets 120 days apart
    """
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
    if num_sources < 1 or num_events < num_sources:
        raise ValueError("need 1 <= num_sources <= num_events")
    kernels = kernels or KernelConfig()
    rng = np.random.default_rng([seed, SCENARIOS.index(name)])
    counts = _split(num_events, num_sources)
    H = num_sources
    mean_len = 8.0
    sources = []
    if name == "separable":
        per_w, per_v = 12, 2
        W, V = per_w * H, per_v * H
        for h in range(H):
            sources.append(SourceSpec(
                tuple(_block(W, h * per_w, (h + 1) * per_w, rng)),
                tuple(_block(V, h * per_v, (h + 1) * per_v, rng)),
                onset=120.0 * h, num_events=counts[h], base_rate=0.5))
    elif name == "overlapping":
        shared, per_w, per_v = 12, 12, 2
        W, V = shared + per_w * H, per_v * H
        for h in range(H):
            theta = _block(W, 0, shared, rng, 0.5) + _block(W, shared + h * per_w,
                                                            shared + (h + 1) * per_w, rng, 0.5)
            sources.append(SourceSpec(
                tuple(theta), tuple(_block(V, h * per_v, (h + 1) * per_v, rng)),
                onset=30.0 * h, num_events=counts[h], base_rate=0.3))
    elif name == "vendor-only":
        W, V = 30, H
        mean_len = 1.0
        for h in range(H):
            eta = np.full(V, 0.05 / max(V - 1, 1))
            eta[h] = 0.95 if V > 1 else 1.0
            sources.append(SourceSpec(
                tuple(np.full(W, 1.0 / W)), tuple(eta),
                onset=2.0 * h, num_events=counts[h], base_rate=0.2))
    else:
        W, V = 30, 6
        for h in range(H):
            sources.append(SourceSpec(
                tuple(np.full(W, 1.0 / W)), tuple(np.full(V, 1.0 / V)),
                onset=120.0 * h, num_events=counts[h], base_rate=0.5))
    return GeneratorConfig(
        params=HawkesParams(base_intensity, kernels),
        alpha0=tuple([1.0] * kernels.num_kernels),
        vocab_size=W, num_vendors=V, num_events=num_events,
        mean_content_length=mean_len, seed=seed, sources=tuple(sources), scenario=name)
