import math
from types import SimpleNamespace

import pytest
from hypothesis import given, settings, strategies as st

from poissonlab.process import RandomSource, RunawayIntensityError, Timeline
from poissonlab.channel import (
    ChannelParams, IdentityReport, PolicyViolationError, TrialResult, path_energy, run_trial, verify_intensity_identity,
)
from poissonlab.analytics import Estimate, MeanAccumulator
from poissonlab.schemes import SilentPolicy, SlotPolicy, make_binary
from poissonlab.fuzz import FirstCountIndicator, JitteredPolicy, PiecewisePolicy, fuzz_cases


class ConstantPolicy:
    def __init__(self, rate, until=math.inf):
        self.rate, self.until = rate, until

    def query(self, message, now, history, rng):
        return SimpleNamespace(rate=self.rate, valid_until=self.until)


class SwitchAtFirstCount:
    "Rate `before` until the first count, `after` from then on."
    def __init__(self, before, after):
        self.before, self.after = before, after

    def query(self, message, now, history, rng):
        return SimpleNamespace(rate=self.before if len(history) == 0 else self.after, valid_until=math.inf)


def test_changes_after_the_first_count_do_not_move_it():
    params, changed = ChannelParams(0.3), 0
    for seed in range(200):
        quiet = run_trial(SwitchAtFirstCount(1.5, 0.0), 1, params, 2.0, RandomSource(seed, 5))
        loud = run_trial(SwitchAtFirstCount(1.5, 7.0), 1, params, 2.0, RandomSource(seed, 5))
        assert quiet.timeline.first == loud.timeline.first
        changed += quiet.energy != loud.energy
    assert changed > 0


def test_dark_current_alone_drives_counts(rng):
    counts, energy = MeanAccumulator(), set()
    for _ in range(5000):
        result = run_trial(SilentPolicy(), 0, ChannelParams(2.0), 1.0, rng)
        counts.add(len(result.timeline))
        energy.add(result.energy)
    assert counts.estimate().within(2.0)
    assert energy == {0.0}


@pytest.mark.parametrize('policy, params', [
    (ConstantPolicy(-1.0), ChannelParams()),
    (ConstantPolicy(math.nan), ChannelParams()),
    (ConstantPolicy(1.0, until=0.0), ChannelParams()),
    (SlotPolicy(0.0, 1.0, 10.0), ChannelParams(peak_power=5.0)),
    (SimpleNamespace(query=lambda *args: 1.0), ChannelParams()),
])
def test_policy_violations(policy, params, rng):
    with pytest.raises(PolicyViolationError):
        run_trial(policy, 1, params, 1.0, rng)


def test_runaway_policy(rng):
    with pytest.raises(RunawayIntensityError):
        run_trial(ConstantPolicy(1e7), 0, ChannelParams(), 1.0, rng, max_events=1000)


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(-1.0)
    with pytest.raises(ValueError):
        ChannelParams(0.0, peak_power=0.0)


def test_stop_at_first_count_energy_is_exact(rng):
    scheme = make_binary(3.0, 0.8)
    for _ in range(500):
        result = run_trial(scheme.policy(1), 1, scheme.params(peak=True), scheme.horizon, rng, decoder=scheme.decoder)
        first = result.timeline.first
        assert result.energy == pytest.approx(3.0 * (0.8 if first is None else first), rel=1e-12)
        assert result.correct == (first is not None)
        assert len(result.timeline) <= 1 # zero dark current, nothing after the stop


@given(seed=st.integers(0, 2**32), stop=st.booleans(), dark=st.sampled_from([0.0, 0.7]))
@settings(max_examples=60, deadline=None)
def test_trace_covers_the_horizon(seed, stop, dark):
    policy = (JitteredPolicy if seed % 2 else PiecewisePolicy)(seed, 1, stop=stop)
    rng = RandomSource(seed, 2)
    result = run_trial(policy, 0, ChannelParams(dark), 2.5, rng, policy_rng=rng.derive(1))
    starts = [s for s, _, _ in result.trace]
    ends = [e for _, e, _ in result.trace]
    assert starts[0] == 0.0 and ends[-1] == 2.5
    assert starts[1:] == ends[:-1]
    assert result.energy == pytest.approx(path_energy((r, e - s) for s, e, r in result.trace))
    # every count closes a trace interval
    assert set(result.timeline.events) <= set(ends)


def test_trial_result_decode():
    result = TrialResult(1, Timeline(1.0, (0.4,)), 0.4)
    assert result.decoded is None and result.correct is None
    decoded = result.decode(lambda timeline: int(len(timeline) > 0))
    assert decoded.decoded == 1 and decoded.correct is True
    assert result.decoded is None


def test_path_energy():
    assert path_energy([(2.0, 0.5), (0.0, 3.0), (1.0, 0.25)]) == 1.25
    with pytest.raises(ValueError):
        path_energy([(1.0, -0.1)])


def test_identity_report_threshold():
    lhs = Estimate(1000, 1.0, 0.03, 0.94, 1.06)
    rhs = Estimate(1000, 1.1, 0.04, 1.02, 1.18)
    report = IdentityReport(lhs, rhs)
    assert report.combined_stderr == pytest.approx(0.05)
    assert report.threshold == pytest.approx(0.2)
    assert report.passed and report.n == 1000
    assert not IdentityReport(lhs, Estimate(1000, 1.3, 0.04, 1.22, 1.38)).passed


def test_intensity_identity_first_count_indicator():
    policy, weight, params, horizon = fuzz_cases(1, seed=4)[0]
    assert isinstance(weight, FirstCountIndicator)
    rng = RandomSource(4, 77)
    report = verify_intensity_identity(policy, weight, 0, params, horizon, 3000, rng)
    assert report.passed


@pytest.mark.parametrize('index', [1, 2, 3, 5])
def test_intensity_identity_fuzzed(index):
    policy, weight, params, horizon = fuzz_cases(6, seed=9)[index]
    rng = RandomSource(9, 100 + index)
    report = verify_intensity_identity(policy, weight, 0, params, horizon, 2000, rng, policy_rng=rng.derive(1))
    assert report.passed


def test_identity_sides_match_the_exact_value():
    "Constant rate 2 with C = 1{t <= T1 ^ 1}: both sides equal P(T1 <= 1) = 1 - e^-2."
    rng = RandomSource(1, 1)
    report = verify_intensity_identity(ConstantPolicy(2.0), FirstCountIndicator(), 0, ChannelParams(), 1.0, 4000, rng)
    assert report.passed
    assert report.lhs.within(-math.expm1(-2.0)) and report.rhs.within(-math.expm1(-2.0))


def test_identity_needs_enough_trials(rng):
    with pytest.raises(ValueError):
        verify_intensity_identity(SilentPolicy(), FirstCountIndicator(), 0, ChannelParams(1.0), 1.0, 999, rng)
