"""
Randomized predictable policies and weights for the identity and converse checks.

Every object here is a deterministic function of (seed, stream) and of the history it is queried with, except
`JitteredPolicy`, which draws its segment lengths from the private stream it is handed at query time.
"""
import math
import numpy as np

from .process import RandomSource, RateSegment
from .channel import ChannelParams

__all__ = ['PiecewisePolicy', 'JitteredPolicy', 'PiecewiseWeight', 'FirstCountIndicator', 'fuzz_cases', 'stop_at_first_count_cases']


def _bucket(now, width):
    j = math.floor(now / width)
    if (j + 1) * width <= now:
        j += 1
    return j, (j + 1) * width


class PiecewisePolicy:
    """Rate table indexed by (counts so far, time bucket). With `stop` the rate drops to zero after the first count."""
    def __init__(self, seed, stream, max_rate=5.0, width=0.25, levels=4, buckets=64, stop=False):
        gen = RandomSource(seed, stream).generator
        self.width, self.stop, self.max_rate = width, stop, max_rate
        self.table = gen.uniform(0.0, max_rate, size=(levels, buckets))
        self.table[gen.random(size=self.table.shape) < 0.2] = 0.0 # silent stretches

    def __repr__(self):
        return f'PiecewisePolicy(shape={self.table.shape}, width={self.width}, stop={self.stop})'

    def query(self, message, now, history, rng):
        if self.stop and len(history):
            return RateSegment(0.0)
        j, until = _bucket(now, self.width)
        k = min(len(history), self.table.shape[0] - 1)
        return RateSegment(float(self.table[k, j % self.table.shape[1]]), until)


class JitteredPolicy:
    "Constant-by-count rates held for exponential stretches drawn from the private stream."
    def __init__(self, seed, stream, max_rate=5.0, mean_hold=0.3, stop=False):
        gen = RandomSource(seed, stream).generator
        self.rates = gen.uniform(0.0, max_rate, size=8)
        self.mean_hold, self.stop = mean_hold, stop

    def __repr__(self):
        return f'JitteredPolicy(rates={np.round(self.rates, 3).tolist()}, stop={self.stop})'

    def query(self, message, now, history, rng):
        if self.stop and len(history):
            return RateSegment(0.0)
        hold = self.mean_hold * rng.exponential() + 1e-9
        return RateSegment(float(self.rates[min(len(history), len(self.rates) - 1)]), now + hold)


class PiecewiseWeight(PiecewisePolicy):
    "Nonnegative predictable weight with the same table construction as PiecewisePolicy."
    def __init__(self, seed, stream, max_weight=2.0, width=0.4, levels=3, buckets=32):
        super().__init__(seed, stream, max_rate=max_weight, width=width, levels=levels, buckets=buckets)


class FirstCountIndicator:
    "C(t) = 1{t <= T1}, with T1 the first count; clipping to the horizon gives 1{t <= T1 ^ T}."
    def query(self, message, now, history, rng):
        return RateSegment(0.0 if len(history) else 1.0)

    def __repr__(self):
        return 'FirstCountIndicator()'


def fuzz_cases(n, seed=0):
    """n (policy, weight, params, horizon) cases for the intensity identity. The first is the first-count indicator
    against a stop-at-first-count policy at zero dark current."""
    gen = RandomSource(seed, 0xF022).generator
    cases = [(PiecewisePolicy(seed, 1, stop=True), FirstCountIndicator(), ChannelParams(0.0), 2.0)]
    for i in range(1, n):
        policy = (JitteredPolicy if i % 3 == 0 else PiecewisePolicy)(seed, 2 * i + 1, stop=bool(i % 4 == 1))
        weight = FirstCountIndicator() if i % 5 == 0 else PiecewiseWeight(seed, 2 * i + 2)
        params = ChannelParams(float(gen.choice([0.0, gen.uniform(0.0, 2.0)])))
        cases.append((policy, weight, params, float(gen.uniform(0.5, 3.0))))
    return cases[:n]


def stop_at_first_count_cases(n, seed=0):
    "n (policy, horizon) stop-at-first-count policies for the converse identity at zero dark current."
    gen = RandomSource(seed, 0xC0E).generator
    return [
        ((JitteredPolicy if i % 2 else PiecewisePolicy)(seed, 1000 + i, stop=True), float(gen.uniform(0.2, 3.0)))
        for i in range(n)
    ]
