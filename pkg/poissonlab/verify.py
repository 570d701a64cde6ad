"""
Check suites behind `poissonlab verify`. Every suite returns CheckRow objects; a row passes when |lhs - rhs| <= threshold.

- identity: E[sum C(t_i)] = E[int C (X + dark) dt] for fuzzed predictable policies and weights.
- converse: P(count on [0, T] | D=1) equals the expected energy E_1 for stop-at-first-count policies at zero dark current.
- oracle: closed forms of the four schemes lie inside 99.9% Monte Carlo intervals.
- substrate: chi-square fit of homogeneous counts to the Poisson law and the mean first-count time.
"""
import math
import numpy as np

from loguru import logger
from scipy import stats

from .process import RandomSource, RateSegment, sample_homogeneous, sample_next_event, poisson_pmf
from .channel import ChannelParams, run_trial, verify_intensity_identity
from .analytics import MeanAccumulator, estimate_bernoulli, estimate_mean, mary_dark_energy, union_bound_mary_dark
from .schemes import SchemeSpec, build_scheme, make_binary
from .fuzz import fuzz_cases, stop_at_first_count_cases
from .formatters import CheckRow
from ._base.settings import SUITES, ConfigError
from ._base.workers import map_ordered, simulate_specs

__all__ = ['SUITES', 'SUITE_RUNNERS', 'run_suites', 'identity_suite', 'converse_suite', 'oracle_suite', 'substrate_suite']

CONVERSE_GRID = [(A, T) for A in (1.0, 10.0, 100.0) for T in (0.1, 1.0, 3.0)]
ORACLE_GRID = [(A, T, dark) for A in (1.0, 10.0, 100.0) for T in (0.1, 1.0, 3.0) for dark in (0.0, 0.5, 2.0)]
SUBSTRATE_POINTS = [(1.0, 1.0), (2.0, 10.0), (0.1, 5.0)]
SIGNIFICANCE = 1e-3
ORACLE_CONFIDENCE = 0.999


def _stream(suite, index):
    # top byte keeps suite streams apart from the (message << 40 | chunk) simulation streams
    return ((SUITES.index(suite) + 1) << 56) | index


def _row(suite, check, lhs, rhs, threshold, lhs_ci=None, rhs_ci=None, passed=None):
    lhs_ci, rhs_ci = lhs_ci or (lhs, lhs), rhs_ci or (rhs, rhs)
    diff = lhs - rhs
    if passed is None:
        passed = abs(diff) <= threshold + 1e-12 * max(1.0, abs(rhs))
    return CheckRow(suite, check, float(lhs), float(lhs_ci[0]), float(lhs_ci[1]), float(rhs), float(rhs_ci[0]), float(rhs_ci[1]),
                    float(diff), float(threshold), bool(passed))


def _identity_case(payload):
    seed, n_cases, index, n_trials = payload
    policy, weight, params, horizon = fuzz_cases(n_cases, seed)[index]
    rng = RandomSource(seed, _stream('identity', index))
    report = verify_intensity_identity(policy, weight, 0, params, horizon, n_trials, rng, policy_rng=rng.derive(1))
    return _row(
        'identity', f'case={index} {policy!r} weight={weight!r} dark={params.dark_current:.6g} T={horizon:.6g}',
        report.lhs.mean, report.rhs.mean, report.threshold,
        (report.lhs.ci_low, report.lhs.ci_high), (report.rhs.ci_low, report.rhs.ci_high),
    )


def identity_suite(config, workers=None):
    "Intensity identity over `n_policies` fuzzed (policy, weight) pairs, the first being C(t) = 1{t <= T1 ^ T}."
    payloads = [(config.seed, config.n_policies, i, config.n_trials) for i in range(config.n_policies)]
    return map_ordered(_identity_case, payloads, workers)


def _converse_case(payload):
    seed, index, n_trials, target = payload
    if target[0] == 'binary':
        _, A, T = target
        scheme = make_binary(A, T)
        policy, params, horizon, name = scheme.encoder, scheme.params(peak=True), T, f'binary A={A:g} T={T:g}'
    else:
        _, n_cases, i = target
        policy, horizon = stop_at_first_count_cases(n_cases, seed)[i]
        params, name = ChannelParams(0.0), f'fuzz={i} {policy!r} T={horizon:.6g}'

    rng = RandomSource(seed, _stream('converse', index))
    policy_rng, hits, energy = rng.derive(1), 0, MeanAccumulator()
    for _ in range(n_trials):
        result = run_trial(policy, 1, params, horizon, rng, policy_rng=policy_rng)
        hits += len(result.timeline) > 0
        energy.add(result.energy)
    correct, spent = estimate_bernoulli(hits, n_trials), energy.estimate()
    return _row('converse', name, correct.mean, spent.mean, 4 * math.hypot(correct.stderr, spent.stderr),
                (correct.ci_low, correct.ci_high), (spent.ci_low, spent.ci_high))


def converse_suite(config, workers=None):
    "p(correct | D=1) = E_1 on the binary (A, T) grid and on `n_policies` fuzzed stop-at-first-count policies."
    targets = [('binary', A, T) for A, T in CONVERSE_GRID] + [('fuzz', config.n_policies, i) for i in range(config.n_policies)]
    payloads = [(config.seed, i, config.n_trials, target) for i, target in enumerate(targets)]
    return map_ordered(_converse_case, payloads, workers)


def _oracle_specs():
    specs = []
    for A, T, dark in ORACLE_GRID:
        if dark == 0:
            specs += [SchemeSpec('binary-zero-dark', 2, A, T), SchemeSpec('mary-zero-dark', 4, A, T)]
        else:
            specs += [SchemeSpec('binary-dark-window', 2, A, T, dark), SchemeSpec('mary-dark-window', 4, A, T, dark)]
    return specs


def oracle_suite(config, workers=None):
    """Closed-form p_err and energy per message inside the 99.9% Monte Carlo interval. The M-ary window with dark current
    has no exact error formula: its energies are checked exactly and its average error against the union bound."""
    specs = _oracle_specs()
    tallies = simulate_specs(specs, config.n_trials, config.seed, workers=workers)
    half = stats.norm.ppf(0.5 + ORACLE_CONFIDENCE / 2)
    rows = []
    for spec, tally in zip(specs, tallies):
        label = f'{spec.kind} M={spec.M} A={spec.A:g} horizon={spec.horizon:g} dark={spec.dark_current:g}'
        cf = build_scheme(spec).closed_form()
        energies = cf.energy_given if cf else mary_dark_energy(spec.M, spec.A, spec.horizon, spec.dark_current)
        for m in range(spec.M):
            t = tally[m]
            energy = t.energy.estimate(ORACLE_CONFIDENCE)
            rows.append(_row('oracle', f'{label} message={m} energy', energy.mean, energies[m], half * energy.stderr,
                             (energy.ci_low, energy.ci_high), passed=energy.contains(energies[m], 1e-12)))
            if cf:
                p = estimate_bernoulli(t.errors, t.n, ORACLE_CONFIDENCE)
                rows.append(_row('oracle', f'{label} message={m} p_err', p.mean, cf.p_err_given[m], max(p.ci_high - p.mean, p.mean - p.ci_low),
                                 (p.ci_low, p.ci_high), passed=p.contains(cf.p_err_given[m], 1e-12)))
        if not cf:
            bound = union_bound_mary_dark(spec.M, spec.A, spec.horizon, spec.dark_current)
            p = estimate_bernoulli(sum(t.errors for t in tally.values()), sum(t.n for t in tally.values()), ORACLE_CONFIDENCE)
            rows.append(_row('oracle', f'{label} p_err_avg <= union bound', p.mean, bound, 0.0,
                             (p.ci_low, p.ci_high), passed=p.ci_low <= bound))
    return rows


def _pooled(observed, expected, least=5.0):
    "Merge neighbouring bins left to right until each expects at least `least` counts."
    obs, exp, o, e = [], [], 0, 0.0
    for a, b in zip(observed, expected):
        o, e = o + a, e + b
        if e >= least:
            obs.append(o); exp.append(e)
            o, e = 0, 0.0
    if e > 0 or o > 0:
        if obs:
            obs[-1] += o; exp[-1] += e
        else:
            obs.append(o); exp.append(e)
    return np.array(obs), np.array(exp)


def _count_fit(payload):
    seed, index, n_trials, rate, horizon = payload
    rng = RandomSource(seed, _stream('substrate', index))
    counts = np.array([len(sample_homogeneous(rate, horizon, rng)) for _ in range(n_trials)])
    mean = rate * horizon

    top = max(int(counts.max()), int(mean + 10 * math.sqrt(mean) + 10))
    probs = np.array([poisson_pmf(mean, k) for k in range(top + 1)])
    probs[-1] += max(0.0, 1.0 - math.fsum(probs)) # upper tail
    observed, expected = _pooled(np.bincount(counts, minlength=top + 1), n_trials * probs)
    expected *= observed.sum() / expected.sum()
    statistic, _ = stats.chisquare(observed, expected)
    critical = stats.chi2.ppf(1 - SIGNIFICANCE, len(observed) - 1)
    return _row('substrate', f'chisquare rate={rate:g} T={horizon:g} bins={len(observed)}', statistic, critical, 0.0,
                passed=statistic <= critical)


def _first_count(payload):
    seed, index, n_trials, rate = payload
    rng = RandomSource(seed, _stream('substrate', index))
    segment = RateSegment(rate)
    times = estimate_mean([sample_next_event(0.0, segment, rng) for _ in range(n_trials)])
    return _row('substrate', f'first count mean rate={rate:g}', times.mean, 1 / rate, 4 * times.stderr, (times.ci_low, times.ci_high))


def substrate_suite(config, workers=None):
    "Poisson count law at three (rate, T) points and the exponential first-count time at rate 2."
    payloads = [(config.seed, i, config.n_trials, rate, T) for i, (rate, T) in enumerate(SUBSTRATE_POINTS)]
    rows = map_ordered(_count_fit, payloads, workers)
    return rows + [_first_count((config.seed, len(payloads), config.n_trials, 2.0))]


SUITE_RUNNERS = {
    'identity': identity_suite,
    'converse': converse_suite,
    'oracle': oracle_suite,
    'substrate': substrate_suite,
}


def run_suites(config, workers=None):
    "Rows of every selected suite, in selection order."
    if not config.suites:
        raise ConfigError(f"suites: select at least one of {SUITES}")
    rows = []
    for name in config.suites:
        if name not in SUITE_RUNNERS:
            raise ConfigError(f"suites: unknown {name!r}, available suites are {SUITES}")
        logger.info(f"verify {name}: n_trials={config.n_trials}, seed={config.seed}")
        suite_rows = SUITE_RUNNERS[name](config, workers)
        failed = [r.check for r in suite_rows if not r.passed]
        for check in failed:
            logger.warning(f"verify {name}: failed {check}")
        logger.info(f"verify {name}: {len(suite_rows) - len(failed)}/{len(suite_rows)} passed")
        rows.extend(suite_rows)
    return rows
