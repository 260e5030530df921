"""Hawkes intensities with Gaussian RBF kernel mixtures.

Each cluster excites only itself.  A past event at ``t_i`` contributes
``sum_l alpha[l] * exp(-(t - t_i - delay[l])**2 / (2 * width[l]**2))`` to its
cluster's intensity for ``0 < t - t_i <= truncation_window`` and nothing
afterwards.  Kernels are unnormalized (peak value 1).
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf, erfc

SQRT2 = math.sqrt(2.0)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)

DEFAULT_DELAYS = (1.0, 3.0, 7.0, 14.0, 30.0)
DEFAULT_WIDTHS = (0.5, 1.5, 3.5, 7.0, 15.0)


class CausalityError(ValueError):
    """A kernel or intensity was queried before an event in its history."""


@dataclass(frozen=True)
class KernelConfig:
    reference_delays: tuple[float, ...] = DEFAULT_DELAYS
    bandwidths: tuple[float, ...] = DEFAULT_WIDTHS
    truncation_window: float | None = None

    def __post_init__(self):
        delays = tuple(float(x) for x in self.reference_delays)
        widths = tuple(float(x) for x in self.bandwidths)
        object.__setattr__(self, "reference_delays", delays)
        object.__setattr__(self, "bandwidths", widths)
        if not delays or len(delays) != len(widths):
            raise ValueError("need K >= 1 delays and an equal number of bandwidths")
        if min(delays) <= 0 or min(widths) <= 0:
            raise ValueError("delays and bandwidths must be positive")
        minimum = max(delays) + 3.0 * max(widths)
        if self.truncation_window is None:
            object.__setattr__(self, "truncation_window", minimum)
        elif self.truncation_window < minimum - 1e-12:
            raise ValueError(f"truncation_window must be >= {minimum}")
        object.__setattr__(self, "_pi", np.asarray(delays))
        object.__setattr__(self, "_sigma", np.asarray(widths))

    @property
    def num_kernels(self) -> int:
        return len(self.reference_delays)

    @property
    def delays(self) -> np.ndarray:
        return self._pi

    @property
    def widths(self) -> np.ndarray:
        return self._sigma


@dataclass(frozen=True)
class KernelWeights:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).copy()
        if a.ndim != 1 or a.size < 1:
            raise ValueError("kernel weights must be a non-empty vector")
        if np.any(a < 0):
            raise ValueError("kernel weights must be non-negative")
        if abs(a.sum() - 1.0) > 1e-9:
            raise ValueError(f"kernel weights must sum to 1, got {a.sum()}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def uniform(cls, k: int) -> "KernelWeights":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class HawkesParams:
    base_intensity: float = 0.05
    kernels: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        if not self.base_intensity > 0:
            raise ValueError("base intensity must be positive")


def kernel_matrix(dt, config: KernelConfig) -> np.ndarray:
    """Base kernel values, shape ``(len(dt), K)``; zero past truncation."""
    dt = np.asarray(dt, dtype=float).reshape(-1, 1)
    z = (dt - config.delays) / config.widths
    out = np.exp(-0.5 * z * z)
    out[(dt[:, 0] > config.truncation_window) | (dt[:, 0] < 0)] = 0.0
    return out


def base_kernel(l: int, dt: float, config: KernelConfig) -> float:
    if dt < 0:
        raise CausalityError(f"negative elapsed time {dt}")
    if dt > config.truncation_window:
        return 0.0
    z = (dt - config.reference_delays[l]) / config.bandwidths[l]
    return math.exp(-0.5 * z * z)


def _alpha(weights) -> np.ndarray:
    return weights.alpha if isinstance(weights, KernelWeights) else np.asarray(weights, dtype=float)


def _recent(history: Sequence[float], t: float, config: KernelConfig) -> np.ndarray:
    """History times inside the truncation window before ``t``.

    ``history`` must be sorted.  Raises if any time is not strictly before t.
    """
    if len(history) and history[-1] >= t:
        raise CausalityError(f"history contains time {history[-1]} >= query {t}")
    lo = bisect.bisect_left(history, t - config.truncation_window)
    return np.asarray(history[lo:], dtype=float)


def cluster_intensity(history: Sequence[float], weights, config: KernelConfig, t: float) -> float:
    """Self-excited intensity of one cluster at ``t`` (history strictly earlier)."""
    recent = _recent(history, t, config)
    if recent.size == 0:
        return 0.0
    return float(kernel_matrix(t - recent, config).sum(axis=0) @ _alpha(weights))


def total_intensity(clusters, params: HawkesParams, t: float) -> tuple[float, list[float]]:
    """Base rate plus every cluster's intensity; returns (total, components)."""
    parts = [cluster_intensity(h, w, params.kernels, t) for h, w in clusters]
    return params.base_intensity + sum(parts), parts


def gaussian_mass(lo, hi):
    """Integral of exp(-z^2/2) over [lo, hi], accurate in both tails."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    a, b = lo / SQRT2, hi / SQRT2
    out = np.where(
        a >= 0, erfc(a) - erfc(b),
        np.where(b <= 0, erfc(-b) - erfc(-a), erf(b) - erf(a)))
    return SQRT_HALF_PI * out


def kernel_masses(history, config: KernelConfig, a: float, b: float) -> np.ndarray:
    """Per-kernel integral over [a, b] summed over history events, shape (K,)."""
    hist = np.asarray(history, dtype=float)
    if hist.size == 0 or b <= a:
        return np.zeros(config.num_kernels)
    hist = hist[(hist < b) & (hist > a - config.truncation_window)]
    if hist.size == 0:
        return np.zeros(config.num_kernels)
    # elapsed-time range of each event's kernel inside [a, b], clipped to its support
    u_lo = np.clip(a - hist, 0.0, config.truncation_window)[:, None]
    u_hi = np.clip(b - hist, 0.0, config.truncation_window)[:, None]
    sigma = config.widths
    masses = sigma * gaussian_mass((u_lo - config.delays) / sigma, (u_hi - config.delays) / sigma)
    return masses.sum(axis=0)


def kernel_compensator(history, weights, config: KernelConfig, a: float, b: float) -> float:
    if a > b:
        raise ValueError(f"invalid window [{a}, {b}]")
    return float(kernel_masses(history, config, a, b) @ _alpha(weights))


def compensator(history, weights, config: KernelConfig, params: HawkesParams,
                window: tuple[float, float]) -> float:
    """Closed-form integral of ``base + cluster intensity`` over ``window``."""
    a, b = window
    if a > b:
        raise ValueError(f"invalid window [{a}, {b}]")
    return params.base_intensity * (b - a) + kernel_compensator(history, weights, config, a, b)


def log_likelihood(times: Sequence[float], assignment: Sequence[int], weights: Sequence,
                   params: HawkesParams, horizon: float) -> float:
    """Point-process log-likelihood of a clustered event sequence on [0, horizon].

    ``weights[h]`` parameterizes cluster ``h``.  Events only excite later
    events of their own cluster; simultaneous events do not excite each
    other.  Returns ``-inf`` (with a warning) if an event has zero intensity.
    """
    times = np.asarray(times, dtype=float)
    assignment = np.asarray(assignment, dtype=int)
    if times.size != assignment.size:
        raise ValueError("times and assignment differ in length")
    if times.size and (np.any(np.diff(times) < 0) or times[-1] > horizon):
        raise ValueError("times must be sorted and within the horizon")
    config = params.kernels
    labels = np.unique(assignment)
    hists = {h: times[assignment == h] for h in labels}
    total = -params.base_intensity * horizon
    for h in labels:
        total -= kernel_compensator(hists[h], _alpha(weights[h]), config, 0.0, horizon)
    for t in times:
        lam = params.base_intensity
        for h in labels:
            hist = hists[h]
            lam += cluster_intensity(list(hist[hist < t]), _alpha(weights[h]), config, t)
        if lam <= 0:
            warnings.warn(f"zero intensity at event time {t}", RuntimeWarning, stacklevel=2)
            return -math.inf
        total += math.log(lam)
    return float(total)


def intensity_upper_bound(clusters, params: HawkesParams, t: float) -> float:
    """Bound on the total intensity over all times >= t given fixed histories."""
    config = params.kernels
    bound = params.base_intensity
    for hist, w in clusters:
        lo = bisect.bisect_right(hist, t - config.truncation_window)
        recent = np.asarray(hist[lo:], dtype=float)
        if recent.size == 0:
            continue
        dt = t - recent
        vals = kernel_matrix(np.maximum(dt, 0.0), config)
        vals[dt[:, None] <= config.delays] = 1.0
        bound += float(vals.sum(axis=0) @ _alpha(w))
    return bound


def next_event_time(clusters, params: HawkesParams, start: float, rng: np.random.Generator,
                    end: float = math.inf) -> float | None:
    """First event after ``start`` by thinning; None if none occurs before ``end``.

    The dominating rate is recomputed after every rejected candidate.
    """
    t = start
    while True:
        bound = intensity_upper_bound(clusters, params, t)
        t = t + rng.exponential(1.0 / bound)
        if t > end:
            return None
        lam, _ = total_intensity(clusters, params, t)
        if rng.uniform() * bound <= lam:
            return t


def sample_thinning(clusters, params: HawkesParams, window: tuple[float, float],
                    seed=None, excite: int | None = None, max_events: int | None = None) -> list[float]:
    """Sample event times on ``window`` from the conditional intensity.

    ``clusters`` is a list of (sorted history, weights).  When ``excite`` is
    a cluster index, every sampled event joins that cluster's history and
    raises later intensity; otherwise histories stay fixed.
    """
    a, b = window
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    clusters = [(list(h), w) for h, w in clusters]
    out: list[float] = []
    t = a
    while b > a and (max_events is None or len(out) < max_events):
        t_next = next_event_time(clusters, params, t, rng, end=b)
        if t_next is None:
            break
        out.append(t_next)
        if excite is not None:
            clusters[excite][0].append(t_next)
        t = t_next
    return out


# ---------------------------------------------------------------------------
# Kernel-weight estimation


def excitation_design(history: Sequence[float], config: KernelConfig, horizon: float):
    """Per-event kernel sums and per-kernel masses for one cluster.

    Returns ``(phi, mass)`` where ``phi[i, l]`` is the summed base kernel ``l``
    from events strictly before event ``i``, and ``mass[l]`` the integral of
    kernel ``l`` over [0, horizon] summed over the cluster's events.
    """
    hist = np.asarray(history, dtype=float)
    n = hist.size
    phi = np.zeros((n, config.num_kernels))
    for i in range(1, n):
        dt = hist[i] - hist[:i]
        dt = dt[(dt > 0) & (dt <= config.truncation_window)]
        if dt.size:
            phi[i] = kernel_matrix(dt, config).sum(axis=0)
    return phi, kernel_masses(hist, config, 0.0, horizon)


def kernel_weight_objective(alpha, phi, mass, base_intensity: float, horizon: float) -> float:
    """Cluster log-likelihood as a function of its kernel weights."""
    lam = base_intensity + phi @ alpha
    if np.any(lam <= 0):
        return -math.inf
    return float(np.log(lam).sum() - mass @ alpha - base_intensity * horizon)


def kernel_weight_gradient(alpha, phi, mass, base_intensity: float) -> np.ndarray:
    lam = base_intensity + phi @ alpha
    return (phi / lam[:, None]).sum(axis=0) - mass


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = ind[u - css / ind > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass
class WeightFit:
    weights: KernelWeights
    objective: float
    converged: bool
    iterations: int
    trace: list[float]


def fit_weights_mle(history: Sequence[float], config: KernelConfig, params: HawkesParams,
                    horizon: float, max_iter: int = 200, tol: float = 1e-8) -> WeightFit:
    """Maximum-likelihood kernel weights for one cluster's own events.

    Projected gradient ascent on the simplex from the uniform point with an
    Armijo backtracking line search.  The objective is concave in the weights,
    so accepted iterates never decrease it.  Clusters with fewer than two
    events carry no excitation evidence and keep uniform weights.
    """
    k = config.num_kernels
    uniform = np.full(k, 1.0 / k)
    if len(history) == 0:
        raise ValueError("cannot fit kernel weights of an empty cluster")
    phi, mass = excitation_design(history, config, horizon)
    lam0 = params.base_intensity
    f = kernel_weight_objective(uniform, phi, mass, lam0, horizon)
    if k == 1 or len(history) < 2:
        return WeightFit(KernelWeights(uniform), f, True, 0, [f])

    alpha = uniform
    trace = [f]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = kernel_weight_gradient(alpha, phi, mass, lam0)
        accepted = False
        while step > 1e-14:
            cand = project_simplex(alpha + step * g)
            f_cand = kernel_weight_objective(cand, phi, mass, lam0, horizon)
            if f_cand >= f + 1e-4 * g @ (cand - alpha):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        moved = np.abs(cand - alpha).max()
        if f_cand >= f:
            alpha, f = cand, f_cand
            trace.append(f)
        step = min(step * 2.0, 1e6)
        if moved < tol:
            converged = True
            break
    return WeightFit(KernelWeights(alpha / alpha.sum()), f, converged, it, trace)
