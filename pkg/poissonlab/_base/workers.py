"""
Chunked Monte Carlo runs. Chunk boundaries and stream ids depend only on (message, chunk index), never on how many
workers run them, and results are merged in chunk order, so output does not change with POISSON_LAB_THREADS.
"""
import os
from multiprocessing import Pool

from loguru import logger

from ..process import RandomSource
from ..channel import run_trial
from ..analytics import MeanAccumulator
from ..schemes import build_scheme

CHUNK = 10_000
ENV_THREADS = 'POISSON_LAB_THREADS'


def worker_count():
    "cpu count, capped by POISSON_LAB_THREADS when set."
    count = os.cpu_count() or 1
    if (cap := os.environ.get(ENV_THREADS)):
        try:
            cap = int(cap)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} should be a positive integer, got {cap!r}") from None
        if cap < 1:
            raise ValueError(f"{ENV_THREADS} should be a positive integer, got {cap}")
        count = min(count, cap)
    return count


def stream_id(message, chunk):
    "Disjoint stream per (message, chunk)."
    return (int(message) << 40) | int(chunk)


def chunk_sizes(n_trials, size=CHUNK):
    full, rest = divmod(int(n_trials), size)
    return [size] * full + ([rest] if rest else [])


class ChunkTally:
    "Errors and energy moments of a run of trials, mergeable."
    def __init__(self):
        self.errors, self.energy = 0, MeanAccumulator()

    @property
    def n(self):
        return self.energy.count

    def merge(self, other):
        self.errors += other.errors
        self.energy.merge(other.energy)
        return self


def simulate_chunk(payload):
    "Run one chunk of a scheme for one message. `payload` is (spec props, message, chunk index, size, seed, peak)."
    props, message, chunk, size, seed, peak = payload
    scheme = build_scheme(props)
    params, rng = scheme.params(peak=peak), RandomSource(seed, stream_id(message, chunk))
    tally, energies = ChunkTally(), []
    for _ in range(size):
        result = run_trial(scheme.encoder, message, params, scheme.horizon, rng, decoder=scheme.decoder)
        tally.errors += not result.correct
        energies.append(result.energy)
    tally.energy.add_many(energies)
    return tally


def map_ordered(func, payloads, workers=None):
    "func over payloads, results in payload order; inline when a single worker is enough."
    payloads = list(payloads)
    workers = min(worker_count() if workers is None else workers, len(payloads)) or 1
    logger.debug(f"{func.__name__}: {len(payloads)} items on {workers} worker(s)")
    if workers == 1:
        return [func(p) for p in payloads]
    with Pool(workers) as pool:
        return pool.map(func, payloads, chunksize=1)


def simulate_specs(specs, n_trials, seed, messages=None, peak=True, workers=None):
    """Merged ChunkTally per (spec, message) for n_trials transmissions of each message, all specs in one pool.
    Returns a list aligned with `specs` of {message: ChunkTally}; `messages` defaults to every message of a spec."""
    sizes = chunk_sizes(n_trials)
    keys, payloads = [], []
    for i, spec in enumerate(specs):
        for message in (range(spec.M) if messages is None else messages):
            if not 0 <= message < spec.M:
                raise ValueError(f"message should be in [0, {spec.M - 1}], got {message}")
            for k, size in enumerate(sizes):
                keys.append((i, message))
                payloads.append((spec.props, message, k, size, seed, peak))

    tallies = [{} for _ in specs]
    for (i, message), part in zip(keys, map_ordered(simulate_chunk, payloads, workers)):
        tallies[i].setdefault(message, ChunkTally()).merge(part)
    return tallies
