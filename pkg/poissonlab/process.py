"""
Exact sampling of piecewise-constant Poisson processes and Poisson-law helpers.

Intensities are constant on segments, so every draw is an exponential inter-arrival time; no thinning is needed.
"""
import math
import numpy as np

from dataclasses import dataclass
from scipy.special import gammaln, xlogy

__all__ = ['Timeline', 'RateSegment', 'RandomSource', 'sample_homogeneous', 'sample_next_event', 'poisson_pmf', 'MAX_EVENTS', 'RunawayIntensityError']

MAX_EVENTS = 10**6 # per trial, exceeding it is an error, never a truncation
_MASK64 = (1 << 64) - 1


class RunawayIntensityError(RuntimeError):
    "More events on a path than the event cap allows."


@dataclass(frozen=True)
class Timeline:
    "Realized channel output: ordered count times within [0, horizon]. Counting is over half-open intervals (a, b]."
    horizon: float
    events: tuple = ()

    def __post_init__(self):
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon should be finite and >= 0, got {self.horizon!r}")
        events = tuple(float(t) for t in self.events)
        if any(b <= a for a, b in zip(events, events[1:])):
            raise ValueError("events should be strictly increasing!")
        if events and (events[0] < 0 or events[-1] > self.horizon):
            raise ValueError(f"events should lie in [0, {self.horizon}], got range [{events[0]}, {events[-1]}]")
        object.__setattr__(self, 'events', events)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def first(self):
        "Time of the first count or None."
        return self.events[0] if self.events else None

    def count(self, a=0.0, b=None):
        "Number of events in (a, b], b defaults to horizon."
        b = self.horizon if b is None else b
        if not 0 <= a <= b <= self.horizon:
            raise ValueError(f"need 0 <= a <= b <= horizon, got a={a}, b={b}, horizon={self.horizon}")
        events = np.asarray(self.events)
        return int(np.searchsorted(events, b, side='right') - np.searchsorted(events, a, side='right'))


@dataclass(frozen=True)
class RateSegment:
    "Constant intensity `rate` on (issue time, valid_until]. The issue time is known to whoever asked for the segment."
    rate: float
    valid_until: float = math.inf

    def __post_init__(self):
        if not self.rate >= 0: # catches NaN too
            raise ValueError(f"rate should be >= 0, got {self.rate!r}")


class RandomSource:
    """Reproducible stream of draws keyed by (seed, stream). Backed by numpy's counter-based Philox generator,
    so distinct stream ids give independent streams and the same key always gives bit-identical draws.

    Scalar draws are served from blocks to keep per-event overhead low; block boundaries are deterministic.
    """
    _block = 1024

    def __init__(self, seed=0, stream=0):
        for name, value in (('seed', seed), ('stream', stream)):
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} should be an integer, got {type(value)}")
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} should fit in 64 bits, got {value}")
        self.seed, self.stream = int(seed), int(stream)
        self.generator = np.random.Generator(np.random.Philox(key=self.seed | (self.stream << 64)))
        self._exp, self._iexp = (), 0
        self._uni, self._iuni = (), 0

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"

    def derive(self, *tags):
        "New independent source on the same seed, stream id mixed from this stream and integer tags."
        state = np.random.SeedSequence([self.seed, self.stream, *map(int, tags)]).generate_state(1, np.uint64)
        return RandomSource(self.seed, int(state[0]))

    def exponential(self):
        "One standard (mean 1) exponential draw."
        if self._iexp >= len(self._exp):
            self._exp, self._iexp = self.generator.standard_exponential(self._block).tolist(), 0
        self._iexp += 1
        return self._exp[self._iexp - 1]

    def uniform(self):
        "One uniform draw on [0, 1)."
        if self._iuni >= len(self._uni):
            self._uni, self._iuni = self.generator.random(self._block).tolist(), 0
        self._iuni += 1
        return self._uni[self._iuni - 1]


def sample_next_event(current_time, segment, rng):
    """Next count of a constant-rate segment started at `current_time`, or None if it would land after `segment.valid_until`.
    A count exactly at valid_until belongs to the segment. Zero rate never draws.
    """
    if not current_time < segment.valid_until:
        raise ValueError(f"current_time should be before valid_until, got {current_time} >= {segment.valid_until}")
    if segment.rate == 0:
        return None
    t = current_time + rng.exponential() / segment.rate
    if t <= current_time: # a zero draw, keep events strictly increasing
        t = math.nextafter(current_time, math.inf)
    return t if t <= segment.valid_until else None


def sample_homogeneous(rate, horizon, rng, max_events=MAX_EVENTS):
    "Rate-`rate` Poisson process on [0, horizon] by exponential inter-arrival times."
    if not (rate >= 0 and math.isfinite(rate)):
        raise ValueError(f"rate should be finite and >= 0, got {rate!r}")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon should be finite and >= 0, got {horizon!r}")

    events, now, segment = [], 0.0, RateSegment(rate, horizon)
    while now < horizon and (t := sample_next_event(now, segment, rng)) is not None:
        events.append(t)
        if len(events) > max_events:
            raise RunawayIntensityError(f"more than {max_events} events on [0, {horizon}] at rate {rate}")
        now = t
    return Timeline(horizon, tuple(events))


def poisson_pmf(mean, count):
    "e^{-mean} mean^count / count!, evaluated in log-space."
    if not (mean >= 0 and math.isfinite(mean)):
        raise ValueError(f"mean should be finite and >= 0, got {mean!r}")
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)):
        raise TypeError(f"count should be an integer, got {type(count)}")
    if count < 0:
        raise ValueError(f"count should be >= 0, got {count}")
    return float(np.exp(xlogy(count, mean) - mean - gammaln(count + 1)))
