"""
The stop-at-first-count feedback schemes: binary and M-ary, with and without dark current.

Message 0 is always the all-zero input. A nonzero message m owns the slot [(m-1)tau, m tau) of the horizon, tau = T/(M-1),
and transmits at power A inside it until the first count comes back. The decoder guesses 0 without counts, otherwise
the message whose slot holds the first count. Policies and decoders are plain classes so they pickle into workers.
"""
import math
import numpy as np

from dataclasses import dataclass, field

from .process import RateSegment
from .channel import ChannelParams
from .analytics import closed_form_binary, closed_form_binary_dark, closed_form_mary

__all__ = [
    'KINDS', 'SchemeSpec', 'Scheme', 'SilentPolicy', 'SlotPolicy', 'SchemeEncoder', 'FirstCountDecoder',
    'make_binary', 'make_binary_dark', 'make_mary', 'make_mary_dark', 'build_scheme', 'slot_edges', 'default_window',
]

KINDS = ('binary-zero-dark', 'binary-dark-window', 'mary-zero-dark', 'mary-dark-window')
DEFAULT_POWER = 1e4


def default_window(dark_current):
    "Window length that keeps the spurious-count probability near 1%; 1e-2 at zero dark current."
    return 1e-2 / dark_current if dark_current > 0 else 1e-2


@dataclass(frozen=True)
class SchemeSpec:
    "Which scheme and its parameters. `horizon` is T for zero-dark kinds and the window Delta otherwise."
    kind: str
    M: int = 2
    A: float = DEFAULT_POWER
    horizon: float = 1.0
    dark_current: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind should be one of {KINDS}, got {self.kind!r}")
        if isinstance(self.M, bool) or not isinstance(self.M, (int, np.integer)):
            raise TypeError(f"M should be an integer, got {type(self.M)}")
        if self.kind.startswith('binary') and self.M != 2:
            raise ValueError(f"{self.kind} sends one bit, M should be 2, got {self.M}")
        if self.M < 2:
            raise ValueError(f"M should be >= 2, got {self.M}")
        for name in ('A', 'horizon'):
            if not (getattr(self, name) > 0 and math.isfinite(getattr(self, name))):
                raise ValueError(f"{name} should be finite and > 0, got {getattr(self, name)!r}")
        if not (self.dark_current >= 0 and math.isfinite(self.dark_current)):
            raise ValueError(f"dark_current should be finite and >= 0, got {self.dark_current!r}")
        if self.kind.endswith('zero-dark') and self.dark_current != 0:
            raise ValueError(f"{self.kind} requires dark_current = 0, got {self.dark_current}")
        object.__setattr__(self, 'M', int(self.M))

    @property
    def props(self):
        return {'kind': self.kind, 'M': self.M, 'A': self.A, 'horizon': self.horizon, 'dark_current': self.dark_current}


def slot_edges(M, T):
    "Right edges tau, 2tau, ..., T of the M-1 slots."
    return tuple(T * m / (M - 1) for m in range(1, M))


class SilentPolicy:
    "All-zero input."
    def query(self, message, now, history, rng):
        return RateSegment(0.0)

    def __repr__(self):
        return 'SilentPolicy()'


class SlotPolicy:
    "Power `A` on [start, end) until the first count, zero otherwise."
    def __init__(self, start, end, A):
        if not 0 <= start < end:
            raise ValueError(f"need 0 <= start < end, got start={start}, end={end}")
        self.start, self.end, self.A = start, end, A

    def __repr__(self):
        return f'SlotPolicy(start={self.start}, end={self.end}, A={self.A})'

    def query(self, message, now, history, rng):
        if len(history) or now >= self.end:
            return RateSegment(0.0)
        if now < self.start:
            return RateSegment(0.0, self.start)
        return RateSegment(self.A, self.end)


class SchemeEncoder:
    "Encoder policy of a scheme: dispatches each query to the policy of the message being sent."
    def __init__(self, policies):
        self.policies = tuple(policies)

    def __repr__(self):
        return f'SchemeEncoder({list(self.policies)})'

    def __getitem__(self, message):
        return self.policies[message]

    def query(self, message, now, history, rng):
        return self.policies[message].query(message, now, history, rng)


class FirstCountDecoder:
    "No counts -> 0, else the slot holding the first count. A count on a slot edge goes to the earlier slot."
    def __init__(self, edges):
        self.edges = np.asarray(edges, dtype=float)

    def __repr__(self):
        return f'FirstCountDecoder(edges={self.edges.tolist()})'

    def __call__(self, timeline):
        first = timeline.first
        if first is None:
            return 0
        return min(int(np.searchsorted(self.edges, first, side='left')), len(self.edges) - 1) + 1


@dataclass(frozen=True)
class Scheme:
    "A SchemeSpec with its encoder policy and decoder."
    spec: SchemeSpec
    encoder: SchemeEncoder = field(repr=False)
    decoder: FirstCountDecoder = field(repr=False)

    @property
    def M(self):
        return self.spec.M

    @property
    def horizon(self):
        return self.spec.horizon

    def policy(self, message):
        return self.encoder[message]

    def params(self, peak=False):
        "ChannelParams for this scheme; with `peak` the input is capped at A."
        return ChannelParams(self.spec.dark_current, self.spec.A if peak else None)

    def closed_form(self):
        "PerfReport where a closed form exists, None for the M-ary window with dark current."
        s = self.spec
        if s.kind == 'binary-zero-dark':
            return closed_form_binary(s.A, s.horizon)
        if s.kind == 'binary-dark-window':
            return closed_form_binary_dark(s.A, s.horizon, s.dark_current)
        if s.kind == 'mary-zero-dark' or s.dark_current == 0:
            return closed_form_mary(s.M, s.A, s.horizon)
        return None


def _slotted(spec):
    edges = slot_edges(spec.M, spec.horizon)
    starts = (0.0, *edges[:-1])
    encoder = SchemeEncoder([SilentPolicy(), *[SlotPolicy(a, b, spec.A) for a, b in zip(starts, edges)]])
    return Scheme(spec, encoder, FirstCountDecoder(edges))


def make_binary(A, T):
    "One bit at zero dark current: D=1 sends A until the first count, decoder says 1 on any count."
    return _slotted(SchemeSpec('binary-zero-dark', 2, A, T, 0.0))


def make_binary_dark(A, Delta, dark_current):
    "make_binary on the short window [0, Delta]; the channel adds dark current."
    return _slotted(SchemeSpec('binary-dark-window', 2, A, Delta, dark_current))


def make_mary(M, A, T):
    "M messages at zero dark current over M-1 equal slots of [0, T)."
    return _slotted(SchemeSpec('mary-zero-dark', M, A, T, 0.0))


def make_mary_dark(M, A, Delta, dark_current):
    "make_mary on the short window [0, Delta]; the decoder still reads the first count's slot."
    return _slotted(SchemeSpec('mary-dark-window', M, A, Delta, dark_current))


def build_scheme(spec):
    "Scheme for a SchemeSpec (or a dict of its fields)."
    if isinstance(spec, dict):
        spec = SchemeSpec(**spec)
    if not isinstance(spec, SchemeSpec):
        raise TypeError(f"spec should be a SchemeSpec or dict, got {type(spec)}")
    return _slotted(spec)
