"""Independent reference computations used to check the library.

These go by definition (quadrature, sequential products, enumeration) and
share no code with the package beyond plain kernel evaluation.
"""

import itertools
import math
from collections import Counter

import numpy as np
from scipy import integrate


def rbf(dt, delay, width):
    return math.exp(-0.5 * ((dt - delay) / width) ** 2)


def intensity_by_definition(t, history, alpha, delays, widths, window):
    total = 0.0
    for ti in history:
        dt = t - ti
        if 0 < dt <= window:
            total += sum(a * rbf(dt, p, s) for a, p, s in zip(alpha, delays, widths))
    return total


def quad_compensator(history, alpha, delays, widths, window, base, a, b):
    """Integral of base + intensity over [a, b] by adaptive quadrature,
    split at every kink (event times, truncation ends) and kernel peak."""
    points = {a, b}
    for ti in history:
        for p in [0.0, window] + list(delays):
            if a < ti + p < b:
                points.add(ti + p)
    points = sorted(points)
    total = base * (b - a)
    f = lambda t: intensity_by_definition(t, history, alpha, delays, widths, window)  # noqa: E731
    for lo, hi in zip(points, points[1:]):
        val, _ = integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += val
    return total


def quad_log_likelihood(times, labels, alphas, delays, widths, window, base, horizon):
    loglik = 0.0
    for t in times:
        lam = base
        for h, alpha in alphas.items():
            hist = [s for s, lab in zip(times, labels) if lab == h and s < t]
            lam += intensity_by_definition(t, hist, alpha, delays, widths, window)
        loglik += math.log(lam)
    comp = base * horizon
    for h, alpha in alphas.items():
        hist = [s for s, lab in zip(times, labels) if lab == h]
        comp += quad_compensator(hist, alpha, delays, widths, window, 0.0, 0.0, horizon)
    return loglik - comp


def polya_urn_log_prob(old_counts, new_counts, pseudo, vocab_size, with_coefficient=True):
    """Sequential predictive product of the new tokens drawn one at a time."""
    counts = dict(old_counts)
    total = sum(counts.values())
    logp = 0.0
    for w, c in sorted(new_counts.items()):
        for _ in range(c):
            logp += math.log((counts.get(w, 0) + pseudo) / (total + pseudo * vocab_size))
            counts[w] = counts.get(w, 0) + 1
            total += 1
    if with_coefficient and new_counts:
        n = sum(new_counts.values())
        logp += math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in new_counts.values())
    return logp


def pair_counts(truth, predicted):
    """Agreement counts over all unordered event pairs by enumeration."""
    a = b = c = d = 0
    for i, j in itertools.combinations(range(len(truth)), 2):
        same_t = truth[i] == truth[j]
        same_p = predicted[i] == predicted[j]
        if same_t and same_p:
            a += 1
        elif same_t:
            b += 1
        elif same_p:
            c += 1
        else:
            d += 1
    return a, b, c, d


def ars_by_pairs(truth, predicted):
    a, b, c, d = pair_counts(truth, predicted)
    n = a + b + c + d
    expected = (a + b) * (a + c) / n
    maximum = ((a + b) + (a + c)) / 2
    if maximum == expected:
        return 1.0
    return (a - expected) / (maximum - expected)


def entropy_by_counts(labels):
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def mutual_info_by_counts(truth, predicted):
    n = len(truth)
    joint = Counter(zip(truth, predicted))
    pt, pp = Counter(truth), Counter(predicted)
    return sum(c / n * math.log(c * n / (pt[x] * pp[y])) for (x, y), c in joint.items())


def silhouette_by_definition(points, labels):
    points = [np.asarray(p, dtype=float) for p in points]
    scores = []
    for i, (p, lab) in enumerate(zip(points, labels)):
        own = [np.linalg.norm(p - q) for j, (q, l2) in enumerate(zip(points, labels)) if l2 == lab and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = sum(own) / len(own)
        b = min(np.mean([np.linalg.norm(p - q) for q, l2 in zip(points, labels) if l2 == other])
                for other in set(labels) - {lab})
        scores.append((b - a) / max(a, b))
    return sum(scores) / len(scores)
