"""
Closed-form performance of the stop-at-first-count schemes, the converse floor, and Monte Carlo estimators.

Energies are in photons (expected counts of the transmitted signal). Messages are equiprobable.
"""
import math
import numpy as np

from dataclasses import dataclass
from scipy import stats

__all__ = [
    'PerfReport', 'Estimate', 'MeanAccumulator',
    'closed_form_binary', 'closed_form_binary_dark', 'closed_form_mary', 'mary_dark_energy', 'union_bound_mary_dark',
    'converse_energy_bound', 'reliable_energy_floor', 'energy_per_bit', 'required_horizon',
    'estimate_bernoulli', 'estimate_mean', 'z_value',
]


def z_value(confidence=0.95):
    "Two-sided normal quantile for a confidence level."
    if not 0 < confidence < 1:
        raise ValueError(f"confidence should be in (0, 1), got {confidence!r}")
    return float(stats.norm.ppf(0.5 + confidence / 2))


@dataclass(frozen=True)
class PerfReport:
    "Per-message error probabilities and expected energies, with their uniform averages."
    p_err_given: tuple
    energy_given: tuple

    def __post_init__(self):
        if len(self.p_err_given) != len(self.energy_given) or len(self.p_err_given) < 2:
            raise ValueError("p_err_given and energy_given should have the same length >= 2")
        if any(not 0 <= p <= 1 for p in self.p_err_given):
            raise ValueError(f"probabilities should be in [0, 1], got {self.p_err_given}")
        if any(not e >= 0 for e in self.energy_given):
            raise ValueError(f"energies should be >= 0, got {self.energy_given}")
        object.__setattr__(self, 'p_err_given', tuple(float(p) for p in self.p_err_given))
        object.__setattr__(self, 'energy_given', tuple(float(e) for e in self.energy_given))

    @property
    def M(self):
        return len(self.p_err_given)

    @property
    def p_err_avg(self):
        return math.fsum(self.p_err_given) / self.M

    @property
    def energy_avg(self):
        return math.fsum(self.energy_given) / self.M


@dataclass(frozen=True)
class Estimate:
    "Monte Carlo statistic with a two-sided confidence interval."
    n: int
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    confidence: float = 0.95

    def __post_init__(self):
        if not (self.ci_low <= self.mean <= self.ci_high):
            raise ValueError(f"interval [{self.ci_low}, {self.ci_high}] should contain mean {self.mean}")
        if not self.stderr >= 0:
            raise ValueError(f"stderr should be >= 0, got {self.stderr!r}")

    def contains(self, value, slack=0.0):
        "True if value lies in the interval widened by slack on both sides."
        return self.ci_low - slack <= value <= self.ci_high + slack

    def overlaps(self, other):
        return self.ci_low <= other.ci_high and other.ci_low <= self.ci_high

    def within(self, value, k=4.0):
        "True if |mean - value| <= k stderr (exact match always passes)."
        return abs(self.mean - value) <= k * self.stderr + 1e-12 * max(1.0, abs(value))


class MeanAccumulator:
    "Streaming count/mean/M2 with an associative merge, so chunked runs reduce in any grouping."
    def __init__(self):
        self.count, self.mean, self.m2 = 0, 0.0, 0.0

    def __repr__(self):
        return f"MeanAccumulator(count={self.count}, mean={self.mean})"

    def add(self, value):
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)
        return self

    def add_many(self, values):
        values = np.asarray(values, dtype=float)
        if values.size:
            other = MeanAccumulator()
            other.count, other.mean = values.size, float(values.mean())
            other.m2 = float(((values - other.mean)**2).sum())
            self.merge(other)
        return self

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta**2 * self.count * other.count / n
        self.count = n
        return self

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    def estimate(self, confidence=0.95):
        if self.count < 2:
            raise ValueError(f"need at least 2 samples for an estimate, got {self.count}")
        stderr = math.sqrt(max(self.variance, 0.0) / self.count)
        half = z_value(confidence) * stderr
        return Estimate(self.count, self.mean, stderr, self.mean - half, self.mean + half, confidence)


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} should be finite and > 0, got {value!r}")

def _check_messages(M):
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise TypeError(f"M should be an integer, got {type(M)}")
    if M < 2:
        raise ValueError(f"M should be >= 2, got {M}")

def _check_dark(dark_current):
    if not (dark_current >= 0 and math.isfinite(dark_current)):
        raise ValueError(f"dark_current should be finite and >= 0, got {dark_current!r}")


def closed_form_binary(A, T):
    "Zero dark current: D=0 sends nothing, D=1 sends A until the first count or T."
    _check_positive(A=A, T=T)
    miss = math.exp(-A * T)
    return PerfReport((0.0, miss), (0.0, -math.expm1(-A * T)))


def closed_form_binary_dark(A, Delta, dark_current):
    "Binary scheme on a short window [0, Delta] with dark current; a spurious count flips D=0."
    _check_positive(A=A, Delta=Delta)
    _check_dark(dark_current)
    if dark_current == 0:
        return closed_form_binary(A, Delta)
    total = A + dark_current
    return PerfReport(
        (-math.expm1(-dark_current * Delta), math.exp(-total * Delta)),
        (0.0, A * -math.expm1(-total * Delta) / total),
    )


def closed_form_mary(M, A, T):
    "Zero dark current, M-1 equal slots of length T/(M-1); message 0 sends nothing."
    _check_messages(M)
    _check_positive(A=A, T=T)
    tau = T / (M - 1)
    miss, energy = math.exp(-A * tau), -math.expm1(-A * tau)
    return PerfReport((0.0, *[miss] * (M - 1)), (0.0, *[energy] * (M - 1)))


def mary_dark_energy(M, A, Delta, dark_current):
    """Per-message expected energy of the M-ary window scheme with dark current. Message m only transmits if no
    spurious count arrives before its slot opens at (m-1)tau."""
    _check_messages(M)
    _check_positive(A=A, Delta=Delta)
    _check_dark(dark_current)
    tau, total = Delta / (M - 1), A + dark_current
    in_slot = A * -math.expm1(-total * tau) / total
    return (0.0, *[math.exp(-dark_current * (m - 1) * tau) * in_slot for m in range(1, M)])


def union_bound_mary_dark(M, A, Delta, dark_current):
    "Upper bound on the average error of the M-ary window scheme: a spurious count or a silent slot."
    _check_messages(M)
    _check_positive(A=A, Delta=Delta)
    _check_dark(dark_current)
    return min(1.0, -math.expm1(-dark_current * Delta) + math.exp(-A * Delta / (M - 1)))


def converse_energy_bound(M):
    "(M-1)/M photons: no reliable M-message scheme spends less on average."
    _check_messages(M)
    return (M - 1) / M


def reliable_energy_floor(M, epsilon):
    "Least average energy of a stop-at-first-count scheme at zero dark current with average error <= epsilon."
    _check_messages(M)
    if not 0 <= epsilon <= 1:
        raise ValueError(f"epsilon should be in [0, 1], got {epsilon!r}")
    return max(0.0, (M - 1) / M - epsilon)


def energy_per_bit(M):
    "(M-1)/(M log2 M): the floor spread over log2 M bits, vanishing as M grows."
    _check_messages(M)
    return (M - 1) / (M * math.log2(M))


def required_horizon(M, A, epsilon):
    "Least T with closed_form_mary(M, A, T).p_err_avg <= epsilon; zero if a blind guess already meets epsilon."
    _check_messages(M)
    _check_positive(A=A)
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon should be in (0, 1), got {epsilon!r}")
    ratio = (M - 1) / (M * epsilon)
    return 0.0 if ratio <= 1 else (M - 1) * math.log(ratio) / A


def estimate_bernoulli(successes, n, confidence=0.95):
    "Proportion with a Wilson score interval, valid near 0 and 1."
    for name, value in (('successes', successes), ('n', n)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise TypeError(f"{name} should be an integer, got {type(value)}")
    if n < 1 or not 0 <= successes <= n:
        raise ValueError(f"need n >= 1 and 0 <= successes <= n, got successes={successes}, n={n}")
    z, p = z_value(confidence), successes / n
    denom = 1 + z**2 / n
    centre = (p + z**2 / (2 * n)) / denom
    margin = z * math.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    low = 0.0 if successes == 0 else min(p, max(0.0, centre - margin))
    high = 1.0 if successes == n else max(p, min(1.0, centre + margin))
    return Estimate(int(n), p, math.sqrt(p * (1 - p) / n), low, high, confidence)


def estimate_mean(samples, confidence=0.95):
    "Sample mean with a normal interval."
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError(f"need a flat sequence of at least 2 samples, got shape {samples.shape}")
    return MeanAccumulator().add_many(samples).estimate(confidence)
