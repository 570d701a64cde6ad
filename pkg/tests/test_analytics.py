import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poissonlab.analytics import (
    Estimate, MeanAccumulator, PerfReport, closed_form_binary, closed_form_binary_dark, closed_form_mary,
    converse_energy_bound, energy_per_bit, estimate_bernoulli, estimate_mean, mary_dark_energy, reliable_energy_floor,
    required_horizon, union_bound_mary_dark, z_value,
)

powers = st.floats(1e-3, 1e4)
horizons = st.floats(1e-4, 50.0)
messages = st.integers(2, 64)
darks = st.floats(1e-3, 10.0)


def test_one_bit_costs_half_a_photon():
    cf = closed_form_binary(10.0, 5.0)
    assert cf.energy_avg == pytest.approx((1 - math.exp(-50)) / 2, rel=1e-15)
    assert cf.p_err_avg < 1e-20
    assert cf.p_err_given[0] == 0.0 and cf.energy_given[0] == 0.0


def test_mary_energy():
    assert closed_form_mary(4, 100.0, 3.0).energy_avg == pytest.approx(0.75 * (1 - math.exp(-100)))
    assert closed_form_mary(8, 1e4, 1.0).energy_avg == pytest.approx(0.875)
    assert closed_form_mary(2, 10.0, 5.0) == closed_form_binary(10.0, 5.0)


def test_dark_closed_form_reduces_to_zero_dark():
    assert closed_form_binary_dark(3.0, 0.2, 0.0) == closed_form_binary(3.0, 0.2)
    assert mary_dark_energy(5, 3.0, 2.0, 0.0) == pytest.approx(closed_form_mary(5, 3.0, 2.0).energy_given)


@given(M=messages, A=powers, T=horizons)
@settings(max_examples=300)
def test_energy_plus_error_is_the_floor(M, A, T):
    "Zero dark current: every photon not spent is an error, so energy_avg + p_err_avg = (M-1)/M."
    cf = closed_form_mary(M, A, T)
    assert cf.energy_avg + cf.p_err_avg == pytest.approx(converse_energy_bound(M), rel=1e-12)
    assert cf.energy_avg >= reliable_energy_floor(M, cf.p_err_avg) - 1e-12


@given(A=powers, delta=horizons, dark=darks)
@settings(max_examples=300)
def test_dark_current_does_not_lower_the_floor_much(A, delta, dark):
    cf = closed_form_binary_dark(A, delta, dark)
    assert 0 <= cf.p_err_avg <= 1 and 0 <= cf.energy_avg <= 0.5
    assert cf.energy_avg >= A / (A + dark) * (0.5 - cf.p_err_avg) - 1e-12


@given(M=st.integers(2, 16), A=powers, delta=horizons, dark=darks)
@settings(max_examples=200)
def test_union_bound_and_mary_dark_energy(M, A, delta, dark):
    bound = union_bound_mary_dark(M, A, delta, dark)
    assert 0 <= bound <= 1
    energies = mary_dark_energy(M, A, delta, dark)
    assert energies[0] == 0.0
    assert all(a >= b for a, b in zip(energies[1:], energies[2:])) # later slots wait longer
    assert max(energies) <= 1.0


def test_floors():
    assert converse_energy_bound(2) == 0.5
    assert reliable_energy_floor(2, 0.01) == pytest.approx(0.49)
    assert reliable_energy_floor(2, 0.6) == 0.0
    assert energy_per_bit(2) == 0.5
    assert energy_per_bit(1024) < energy_per_bit(16) < energy_per_bit(4)
    with pytest.raises(ValueError):
        converse_energy_bound(1)


@given(M=st.integers(2, 32), A=powers, eps=st.floats(1e-9, 0.49))
def test_required_horizon_meets_epsilon(M, A, eps):
    T = required_horizon(M, A, eps)
    assert T > 0
    assert closed_form_mary(M, A, T).p_err_avg == pytest.approx(eps, rel=1e-9)


def test_required_horizon_blind_guess():
    assert required_horizon(2, 5.0, 0.5) == 0.0
    assert required_horizon(4, 5.0, 0.8) == 0.0


def test_perf_report_validation():
    with pytest.raises(ValueError):
        PerfReport((0.1,), (0.0,))
    with pytest.raises(ValueError):
        PerfReport((0.1, 1.2), (0.0, 0.0))
    with pytest.raises(ValueError):
        PerfReport((0.1, 0.2), (0.0, -1.0))


def test_z_value():
    assert z_value(0.95) == pytest.approx(1.959963984540054)
    with pytest.raises(ValueError):
        z_value(1.0)


def test_wilson_interval_edges():
    zero, full = estimate_bernoulli(0, 100), estimate_bernoulli(100, 100)
    assert zero.ci_low == 0.0 and zero.mean == 0.0 and zero.ci_high > 0
    assert full.ci_high == 1.0 and full.ci_low < 1
    rare = estimate_bernoulli(37, 10**6)
    assert rare.mean == pytest.approx(3.7e-5)
    assert rare.ci_low < 3.7e-5 < rare.ci_high
    with pytest.raises(TypeError):
        estimate_bernoulli(1.0, 10)
    with pytest.raises(ValueError):
        estimate_bernoulli(11, 10)


def test_wilson_coverage():
    gen = np.random.default_rng(5)
    hits = [estimate_bernoulli(int(k), 200).contains(0.3) for k in gen.binomial(200, 0.3, size=2000)]
    assert np.mean(hits) >= 0.93


def test_wilson_coverage_for_rare_errors():
    p, n = 3.7e-5, 10**6
    gen = np.random.default_rng(6)
    intervals = [estimate_bernoulli(int(k), n) for k in gen.binomial(n, p, size=2000)]
    assert np.mean([e.contains(p) for e in intervals]) >= 0.93
    assert all(e.ci_low >= 0.0 for e in intervals)


@given(values=st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=200), cut=st.integers(1, 3))
def test_accumulator_merge_matches_numpy(values, cut):
    cut = len(values) * cut // 4
    merged = MeanAccumulator().add_many(values[:cut]).merge(MeanAccumulator().add_many(values[cut:]))
    streamed = MeanAccumulator()
    for v in values:
        streamed.add(v)
    for acc in (merged, streamed):
        assert acc.count == len(values)
        assert acc.mean == pytest.approx(np.mean(values), abs=1e-9)
        assert acc.variance == pytest.approx(np.var(values, ddof=1), rel=1e-7, abs=1e-7)


def test_estimate_mean():
    sample = np.random.default_rng(8).exponential(1.0, size=10**5)
    estimate = estimate_mean(sample)
    assert estimate.within(1.0)
    assert estimate.ci_low < estimate.mean < estimate.ci_high
    with pytest.raises(ValueError):
        estimate_mean([1.0])


def test_estimate_helpers():
    a = Estimate(10, 1.0, 0.1, 0.8, 1.2)
    assert a.contains(1.2) and not a.contains(1.25) and a.contains(1.25, slack=0.1)
    assert a.overlaps(Estimate(10, 1.3, 0.1, 1.1, 1.5)) and not a.overlaps(Estimate(10, 2.0, 0.1, 1.8, 2.2))
    assert a.within(1.39) and not a.within(1.41)
    with pytest.raises(ValueError):
        Estimate(10, 1.0, 0.1, 1.1, 1.2)
