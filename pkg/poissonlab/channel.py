"""
The Poisson channel with dark current and instantaneous noiseless feedback.

An encoder policy is asked for a rate segment at time 0, at every count and whenever its previous segment expires.
The segment governs (now, valid_until], so the input on any interval only depends on counts strictly before it.
Dark current is added by the channel and produces counts but no energy.
"""
import math

from dataclasses import dataclass, field, replace
from typing import Optional, Protocol

from .process import MAX_EVENTS, RateSegment, RunawayIntensityError, Timeline, sample_next_event
from .analytics import Estimate, MeanAccumulator

__all__ = [
    'ChannelParams', 'EncoderPolicy', 'WeightProcess', 'TrialResult', 'IdentityReport',
    'PolicyViolationError', 'RunawayIntensityError', 'run_trial', 'path_energy', 'verify_intensity_identity',
]


class PolicyViolationError(ValueError):
    "A policy asked for a negative rate, a rate above the peak cap, or a segment that ends before it starts."


@dataclass(frozen=True)
class ChannelParams:
    "Dark current and an optional peak-power cap on the input."
    dark_current: float = 0.0
    peak_power: Optional[float] = None

    def __post_init__(self):
        if not (self.dark_current >= 0 and math.isfinite(self.dark_current)):
            raise ValueError(f"dark_current should be finite and >= 0, got {self.dark_current!r}")
        if self.peak_power is not None and not self.peak_power > 0:
            raise ValueError(f"peak_power should be > 0 or None, got {self.peak_power!r}")


class EncoderPolicy(Protocol):
    "Predictable intensity program: what rate now, valid until when, given the message and the counts so far."
    def query(self, message: int, now: float, history: Timeline, rng) -> RateSegment: ...


class WeightProcess(Protocol):
    "Predictable nonnegative weight C(t), queried like an encoder policy. The segment rate is the weight value."
    def query(self, message: int, now: float, history: Timeline, rng) -> RateSegment: ...


@dataclass(frozen=True)
class TrialResult:
    """One simulated transmission. `trace` holds the traversed (start, end, rate) policy intervals, clipped to the horizon.
    `decoded` and `correct` stay None until a decoder is applied."""
    message: int
    timeline: Timeline
    energy: float
    trace: tuple = field(default=(), repr=False)
    decoded: Optional[int] = None
    correct: Optional[bool] = None

    def decode(self, decoder):
        "Copy with decoded/correct filled from a deterministic decoder Timeline -> message."
        decoded = decoder(self.timeline)
        return replace(self, decoded=decoded, correct=decoded == self.message)


@dataclass(frozen=True)
class IdentityReport:
    "Both sides of E[sum C(t_i)] = E[int C(t)(X(t) + dark) dt] over n paths."
    lhs: Estimate
    rhs: Estimate
    k: float = 4.0

    @property
    def n(self):
        return self.lhs.n

    @property
    def diff(self):
        return self.lhs.mean - self.rhs.mean

    @property
    def combined_stderr(self):
        return math.hypot(self.lhs.stderr, self.rhs.stderr)

    @property
    def threshold(self):
        return self.k * self.combined_stderr

    @property
    def passed(self):
        return abs(self.diff) <= self.threshold + 1e-12 * max(1.0, abs(self.rhs.mean))


def path_energy(segments):
    "Exact sum of rate * duration over (rate, duration) pairs."
    total = []
    for rate, duration in segments:
        if duration < 0:
            raise ValueError(f"segment duration should be >= 0, got {duration}")
        total.append(rate * duration)
    return math.fsum(total)


def _checked(segment, now, params, who='policy'):
    rate, until = getattr(segment, 'rate', None), getattr(segment, 'valid_until', None)
    if rate is None or until is None:
        raise PolicyViolationError(f"{who} should return a RateSegment, got {type(segment)}")
    if not rate >= 0:
        raise PolicyViolationError(f"{who} rate should be >= 0, got {rate!r}")
    if not until > now:
        raise PolicyViolationError(f"{who} segment should extend past {now}, got valid_until={until}")
    if who == 'policy' and params.peak_power is not None and rate > params.peak_power:
        raise PolicyViolationError(f"policy rate {rate} exceeds the peak power {params.peak_power}")
    return segment if isinstance(segment, RateSegment) else RateSegment(float(rate), float(until))


def _run_path(policy, message, params, horizon, rng, policy_rng=None, weight=None, max_events=MAX_EVENTS):
    """Event loop shared by run_trial and verify_intensity_identity.
    Returns (events, trace, weighted_counts, weighted_intensity); the last two are 0 without a weight."""
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon should be finite and > 0, got {horizon!r}")
    policy_rng = rng if policy_rng is None else policy_rng
    dark = params.dark_current
    events, trace = [], []
    lhs, rhs = 0.0, 0.0
    now, seg, wseg = 0.0, None, None

    while now < horizon:
        history = None
        if seg is None or seg.valid_until <= now:
            history = Timeline(now, events)
            seg = _checked(policy.query(message, now, history, policy_rng), now, params)
        if weight is not None and (wseg is None or wseg.valid_until <= now):
            history = history or Timeline(now, events)
            wseg = _checked(weight.query(message, now, history, policy_rng), now, params, who='weight')

        end = min(seg.valid_until, horizon, wseg.valid_until if weight is not None else math.inf)
        t = sample_next_event(now, RateSegment(seg.rate + dark, end), rng)
        stop = end if t is None else t
        trace.append((now, stop, seg.rate))
        if weight is not None:
            rhs += wseg.rate * (seg.rate + dark) * (stop - now)
        if t is not None:
            events.append(t)
            if len(events) > max_events:
                raise RunawayIntensityError(f"more than {max_events} events before t={t}, rate {seg.rate} + dark {dark}")
            if weight is not None:
                lhs += wseg.rate # left-limit: the segment in force when the count arrives
            seg, wseg = None, None # every count triggers a fresh query
        now = stop

    return events, trace, lhs, rhs


def run_trial(policy, message, params, horizon, rng, decoder=None, policy_rng=None, max_events=MAX_EVENTS):
    """Simulate one transmission of `message` over [0, horizon].
    Energy is the exact integral of the policy rate (dark current excluded). Pass `decoder` to fill decoded/correct."""
    events, trace, _, _ = _run_path(policy, message, params, horizon, rng, policy_rng=policy_rng, max_events=max_events)
    result = TrialResult(
        message=message,
        timeline=Timeline(horizon, events),
        energy=path_energy((rate, end - start) for start, end, rate in trace),
        trace=tuple(trace),
    )
    return result.decode(decoder) if decoder is not None else result


def verify_intensity_identity(policy, weight, message, params, horizon, n_trials, rng, policy_rng=None, k=4.0, max_events=MAX_EVENTS):
    """Monte Carlo check of E[int C dY] = E[int C (X + dark) dt] for a predictable weight C.
    Both integrals are exact per path; passes iff the means agree within k combined standard errors."""
    if isinstance(n_trials, bool) or not isinstance(n_trials, int) or n_trials < 1000:
        raise ValueError(f"n_trials should be an integer >= 1000, got {n_trials!r}")
    lhs, rhs = MeanAccumulator(), MeanAccumulator()
    for _ in range(n_trials):
        _, _, counted, integrated = _run_path(policy, message, params, horizon, rng, policy_rng=policy_rng, weight=weight, max_events=max_events)
        lhs.add(counted)
        rhs.add(integrated)
    return IdentityReport(lhs.estimate(), rhs.estimate(), k)
