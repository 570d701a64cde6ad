import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from poissonlab.process import (
    RandomSource, RateSegment, RunawayIntensityError, Timeline, poisson_pmf, sample_homogeneous, sample_next_event,
)
from poissonlab.analytics import estimate_mean
from poissonlab.verify import _pooled


def test_timeline_counts_half_open_intervals():
    timeline = Timeline(2.0, (0.5, 1.0, 1.5))
    assert len(timeline) == 3 and timeline.first == 0.5
    assert timeline.count() == 3
    assert timeline.count(0.5, 1.5) == 2
    assert timeline.count(0.0, 0.5) == 1
    assert Timeline(1.0).first is None


@pytest.mark.parametrize('events', [(0.5, 0.2), (0.3, 0.3), (-0.1,), (1.5,)])
def test_timeline_rejects_bad_events(events):
    with pytest.raises(ValueError):
        Timeline(1.0, events)


def test_timeline_count_range():
    with pytest.raises(ValueError):
        Timeline(1.0, (0.5,)).count(0.2, 2.0)


@pytest.mark.parametrize('rate', [-1.0, math.nan])
def test_rate_segment_rejects_bad_rates(rate):
    with pytest.raises(ValueError):
        RateSegment(rate, 1.0)


def test_random_source_is_keyed_by_seed_and_stream():
    a, b, c = RandomSource(7, 1), RandomSource(7, 1), RandomSource(7, 2)
    draws = [a.exponential() for _ in range(2000)]
    assert draws == [b.exponential() for _ in range(2000)]
    assert draws != [c.exponential() for _ in range(2000)]
    assert RandomSource(2**64 - 1, 2**64 - 1).uniform() < 1


@pytest.mark.parametrize('seed, error', [(1.5, TypeError), (True, TypeError), (-1, ValueError), (2**64, ValueError)])
def test_random_source_validates_seed(seed, error):
    with pytest.raises(error):
        RandomSource(seed)


def test_derived_sources_differ(rng):
    assert rng.derive(1).stream != rng.derive(2).stream
    assert rng.derive(1).stream == rng.derive(1).stream


def test_sample_next_event_edges(rng):
    assert sample_next_event(0.0, RateSegment(0.0, 1.0), rng) is None
    with pytest.raises(ValueError):
        sample_next_event(1.0, RateSegment(1.0, 1.0), rng)
    t = sample_next_event(0.5, RateSegment(1e9, 1.0), rng)
    assert 0.5 < t <= 1.0


@given(rate=st.floats(0.0, 20.0), horizon=st.floats(0.01, 5.0), seed=st.integers(0, 2**64 - 1))
@settings(max_examples=200, deadline=None)
def test_homogeneous_paths_are_ordered_and_inside(rate, horizon, seed):
    timeline = sample_homogeneous(rate, horizon, RandomSource(seed, 0))
    events = np.asarray(timeline.events)
    assert np.all(np.diff(events) > 0)
    assert np.all((events > 0) & (events <= horizon))
    if rate == 0:
        assert len(timeline) == 0


def test_runaway_intensity(rng):
    with pytest.raises(RunawayIntensityError):
        sample_homogeneous(1e4, 1.0, rng, max_events=100)


@pytest.mark.parametrize('rate, horizon', [(1.0, 1.0), (2.0, 3.0), (0.1, 5.0)])
def test_homogeneous_counts_follow_the_poisson_law(rate, horizon):
    rng, n = RandomSource(11, 5), 5000
    counts = np.array([len(sample_homogeneous(rate, horizon, rng)) for _ in range(n)])
    mean = rate * horizon
    top = int(counts.max()) + 10
    probs = np.array([poisson_pmf(mean, k) for k in range(top + 1)])
    probs[-1] += 1 - probs.sum()
    observed, expected = _pooled(np.bincount(counts, minlength=top + 1), n * probs)
    assert stats.chisquare(observed, expected * observed.sum() / expected.sum()).pvalue > 1e-3


def test_first_count_time_is_exponential():
    rng = RandomSource(3, 9)
    times = estimate_mean([sample_next_event(0.0, RateSegment(2.0), rng) for _ in range(20000)])
    assert times.within(0.5)
    sample = [sample_next_event(0.0, RateSegment(2.0), rng) for _ in range(5000)]
    assert stats.kstest(sample, 'expon', args=(0, 0.5)).pvalue > 1e-3


def test_restarted_sampling_has_the_same_law():
    "Stopping the segment at 0.3 and sampling again from there gives the first count of one unbroken segment."
    one, two = RandomSource(41, 1), RandomSource(41, 2)
    unbroken = [sample_next_event(0.0, RateSegment(2.0), one) for _ in range(10**5)]
    restarted = []
    for _ in range(10**5):
        t = sample_next_event(0.0, RateSegment(2.0, 0.3), two)
        restarted.append(t if t is not None else sample_next_event(0.3, RateSegment(2.0), two))
    assert stats.ks_2samp(unbroken, restarted).statistic < 0.01


def test_poisson_pmf_matches_scipy():
    for mean in (0.0, 0.3, 7.3, 150.0):
        ks = range(0, 300)
        ours = np.array([poisson_pmf(mean, k) for k in ks])
        np.testing.assert_allclose(ours, stats.poisson.pmf(list(ks), mean), rtol=1e-10, atol=1e-300)
    assert poisson_pmf(0.0, 0) == 1.0 and poisson_pmf(0.0, 3) == 0.0
    assert math.fsum(poisson_pmf(7.3, k) for k in range(80)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize('mean, count, error', [(-1.0, 1, ValueError), (1.0, 1.0, TypeError), (1.0, -2, ValueError), (math.inf, 1, ValueError)])
def test_poisson_pmf_validation(mean, count, error):
    with pytest.raises(error):
        poisson_pmf(mean, count)
