from math import factorial, gamma, prod

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dhstream.hawkes import HawkesParams, KernelConfig, cluster_intensity
from dhstream.prior import CrpParams, crp_probabilities, dhp_assignment_prior, sample_crp


def test_crp_examples():
    assert crp_probabilities([], CrpParams(3.0)).tolist() == [1.0]
    np.testing.assert_allclose(crp_probabilities([2, 1], CrpParams(1.0)), [0.5, 0.25, 0.25], atol=1e-15)
    assert crp_probabilities([1], CrpParams(1e12))[-1] == pytest.approx(1.0)


def test_crp_rejects_nonpositive_counts():
    with pytest.raises(ValueError):
        crp_probabilities([2, 0], CrpParams())
    with pytest.raises(ValueError):
        CrpParams(0.0)


def test_crp_draw_frequencies(rng):
    draws = sample_crp([2, 1], CrpParams(1.0), rng, size=100_000)
    freq = np.bincount(draws, minlength=3) / draws.size
    np.testing.assert_allclose(freq, [0.5, 0.25, 0.25], atol=0.01)


def test_crp_partition_is_exchangeable(rng):
    """Sequential seating gives the Ewens probability of the final partition."""
    alpha = 1.7
    counts = [3, 1, 2]
    # one seating order for this partition
    seq, tables = [0, 0, 0, 1, 2, 2], []
    logp = 0.0
    for t in seq:
        p = crp_probabilities(tables, CrpParams(alpha))
        logp += np.log(p[t])
        if t == len(tables):
            tables.append(1)
        else:
            tables[t] += 1
    n = sum(counts)
    ewens = alpha ** len(counts) * prod(factorial(c - 1) for c in counts) * gamma(alpha) / gamma(alpha + n)
    assert np.exp(logp) == pytest.approx(ewens, rel=1e-12)


def test_dhp_prior_examples():
    assert dhp_assignment_prior([], 0.5).tolist() == [1.0]
    np.testing.assert_allclose(dhp_assignment_prior([0.3, 0.6], 0.1), [0.3, 0.6, 0.1], atol=1e-15)


def test_dhp_prior_dormant_cluster():
    cfg = KernelConfig()
    lam = cluster_intensity([0.0, 1.0, 2.0], [0.2] * 5, cfg, 2.0 + cfg.truncation_window + 1)
    p = dhp_assignment_prior([lam], HawkesParams().base_intensity)
    assert lam == 0.0
    assert p[0] < 1e-12 and p[-1] == pytest.approx(1.0)


def test_dhp_prior_validation():
    with pytest.raises(ValueError):
        dhp_assignment_prior([-0.1], 0.1)
    with pytest.raises(ValueError):
        dhp_assignment_prior([0.1], 0.0)


def test_crp_draws_at_each_seating_step(rng):
    """Grow a 3-table configuration and check draw frequencies at every step."""
    params = CrpParams(1.0)
    for counts in ([], [1], [1, 1], [2, 1], [2, 1, 1], [3, 1, 1]):
        draws = sample_crp(counts, params, rng, size=100_000)
        freq = np.bincount(draws, minlength=len(counts) + 1) / draws.size
        np.testing.assert_allclose(freq, crp_probabilities(counts, params), atol=0.01)


@given(st.lists(st.integers(1, 50), max_size=8), st.floats(0.01, 100))
def test_crp_is_a_distribution(counts, alpha):
    p = crp_probabilities(counts, CrpParams(alpha))
    assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-12


@given(st.lists(st.floats(0, 50), max_size=8), st.floats(1e-3, 10))
def test_dhp_prior_is_a_distribution(lam, base):
    p = dhp_assignment_prior(lam, base)
    assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-12


def test_rich_get_richer():
    for alpha in (0.1, 1.0, 10.0):
        probs = [crp_probabilities([n, 3, 2], CrpParams(alpha))[0] for n in range(1, 40)]
        assert all(b > a for a, b in zip(probs, probs[1:]))


@given(st.lists(st.floats(0, 10), min_size=1, max_size=6), st.randoms())
def test_dhp_prior_permutes_with_clusters(lam, random):
    order = list(range(len(lam)))
    random.shuffle(order)
    p = dhp_assignment_prior(lam, 0.05)
    q = dhp_assignment_prior([lam[i] for i in order], 0.05)
    np.testing.assert_allclose(q[:-1], p[:-1][order], atol=1e-15)
    assert q[-1] == pytest.approx(p[-1], abs=1e-15)
