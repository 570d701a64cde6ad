"""
Commands behind the `poissonlab` command line: simulate, sweep, frontier and verify.
Each takes a configuration object from `poissonlab._base.settings` and returns a `Report`; nothing here prints.
"""
import math
import itertools
import numpy as np

from dataclasses import dataclass
from typing import Optional

from loguru import logger
from scipy.optimize import brentq

from .analytics import (
    Estimate, MeanAccumulator, closed_form_binary_dark, closed_form_mary, converse_energy_bound,
    estimate_bernoulli, mary_dark_energy, reliable_energy_floor, union_bound_mary_dark,
)
from .schemes import SchemeSpec, build_scheme
from .formatters import SimRow, FrontierRow, Report, CheckRow
from .verify import run_suites
from ._base.settings import ExperimentConfig, FrontierQuery, VerifyConfig, parse_axes
from ._base.workers import simulate_specs, worker_count

__all__ = ['cmd_simulate', 'cmd_sweep', 'cmd_frontier', 'cmd_verify', 'FrontierResult', 'simulate_rows']

PROBE_TRIALS = 20_000
PROBE_GRID = 16
PROBE_CANDIDATES = 32


def _energy_estimate(acc):
    if acc.count < 2: # a single trial has no spread to report
        return Estimate(acc.count, acc.mean, 0.0, acc.mean, acc.mean)
    return acc.estimate()


def _pooled(tally):
    "Average error and energy over equally sampled messages."
    energy = MeanAccumulator()
    for t in tally.values():
        energy.merge(t.energy)
    errors, n = sum(t.errors for t in tally.values()), sum(t.n for t in tally.values())
    return estimate_bernoulli(errors, n), _energy_estimate(energy)


def simulate_rows(spec, tally, n_trials, seed):
    "SimRow per simulated message, plus the pooled `avg` row when every message was run."
    cf = build_scheme(spec).closed_form()
    rows = []

    def row(message, p, e, cf_p, cf_e):
        return SimRow(spec.kind, spec.M, spec.A, spec.horizon, spec.dark_current, message, n_trials,
                      p.mean, p.ci_low, p.ci_high, e.mean, e.ci_low, e.ci_high, cf_p, cf_e, seed)

    for message in sorted(tally):
        t = tally[message]
        rows.append(row(message, estimate_bernoulli(t.errors, t.n), _energy_estimate(t.energy),
                        cf.p_err_given[message] if cf else None, cf.energy_given[message] if cf else None))
    if len(tally) == spec.M:
        rows.append(row('avg', *_pooled(tally), cf.p_err_avg if cf else None, cf.energy_avg if cf else None))
    return rows


def cmd_simulate(config: ExperimentConfig, messages=None, workers=None):
    "Monte Carlo error and energy per message of one scheme, with closed forms where they exist."
    spec = config.scheme_spec()
    logger.info(f"simulate {spec.kind}: M={spec.M}, A={spec.A}, horizon={spec.horizon}, dark_current={spec.dark_current}, "
                f"n_trials={config.n_trials}, seed={config.seed}, workers={workers or worker_count()}")
    tally, = simulate_specs([spec], config.n_trials, config.seed, messages=messages, workers=workers)
    return Report(simulate_rows(spec, tally, config.n_trials, config.seed), SimRow)


def cmd_sweep(config: ExperimentConfig, axes=None, workers=None):
    "simulate over the row-major product of one or two axes, one row per grid point and message."
    axes = parse_axes(config.axes if axes is None else axes)
    names = [name for name, _ in axes]
    specs = [config.scheme_spec(**dict(zip(names, point))) for point in itertools.product(*[values for _, values in axes])]
    logger.info(f"sweep {config.scheme} over {names}: {len(specs)} points, n_trials={config.n_trials}, seed={config.seed}")
    tallies = simulate_specs(specs, config.n_trials, config.seed, workers=workers)
    rows = [row for spec, tally in zip(specs, tallies) for row in simulate_rows(spec, tally, config.n_trials, config.seed)]
    return Report(rows, SimRow)


@dataclass(frozen=True)
class FrontierResult:
    "Least-energy point of the scheme family meeting the target error, or why there is none."
    feasible: bool
    floor: float
    floor_at_epsilon: float
    spec: Optional[SchemeSpec] = None
    energy_avg: Optional[float] = None
    p_err_avg: Optional[float] = None
    mc_energy: Optional[Estimate] = None
    mc_p_err: Optional[Estimate] = None
    reason: str = ''

    def row(self, query):
        def parts(e):
            return (e.mean, e.ci_low, e.ci_high) if e is not None else (None, None, None)
        return FrontierRow(
            self.feasible, query.M, query.dark_current, query.epsilon,
            self.spec.A if self.spec else None, self.spec.horizon if self.spec else None,
            self.energy_avg, self.p_err_avg, *parts(self.mc_energy), *parts(self.mc_p_err),
            self.floor, self.floor_at_epsilon, query.n_trials, query.seed, self.reason,
        )


def _place(x, query):
    "(A, T) with A*T = x inside the search box, preferring high power and a short horizon."
    A = min(query.A_max, x / query.horizon_min)
    return A, min(max(x / A, query.horizon_min), query.horizon_max)


def _zero_dark_point(query):
    "Closed form: the error only depends on x = A*T and falls while the energy rises, so the least x meeting epsilon wins."
    kind = 'binary-zero-dark' if query.M == 2 else 'mary-zero-dark'
    lo, hi = query.A_min * query.horizon_min, query.A_max * query.horizon_max
    p_err = lambda x: closed_form_mary(query.M, 1.0, x).p_err_avg - query.epsilon
    if p_err(hi) > 0:
        return None, f"p_err_avg at A*T = {hi:g} is {p_err(hi) + query.epsilon:.6g} > epsilon"
    x = lo if p_err(lo) <= 0 else brentq(p_err, lo, hi, xtol=1e-14, rtol=1e-15)
    A, T = _place(x, query)
    if closed_form_mary(query.M, A, T).p_err_avg > query.epsilon: # rounding at the root
        T = math.nextafter(T, math.inf)
    return SchemeSpec(kind, query.M, A, T, 0.0), ''


def _binary_dark_point(query):
    "Closed form: for each A on a log grid the least window meeting epsilon, keeping the lowest energy."
    dark, best = query.dark_current, None
    for A in np.geomspace(query.A_min, query.A_max, query.grid).tolist():
        p_err = lambda d: closed_form_binary_dark(A, d, dark).p_err_avg - query.epsilon
        turn = min(max(math.log((A + dark) / dark) / A, query.horizon_min), query.horizon_max) # least error window
        if p_err(turn) > 0:
            logger.debug(f"frontier probe A={A:.6g}: infeasible, least p_err_avg {p_err(turn) + query.epsilon:.6g}")
            continue
        delta = query.horizon_min if p_err(query.horizon_min) <= 0 else brentq(p_err, query.horizon_min, turn, xtol=1e-15, rtol=1e-15)
        if p_err(delta) > 0:
            delta = math.nextafter(delta, math.inf)
        energy = closed_form_binary_dark(A, delta, dark).energy_avg
        logger.debug(f"frontier probe A={A:.6g}: window {delta:.6g}, energy_avg {energy:.6g}")
        if best is None or energy < best[0]:
            best = (energy, A, delta)
    if best is None:
        return None, f"no window in [{query.horizon_min:g}, {query.horizon_max:g}] meets epsilon for A in [{query.A_min:g}, {query.A_max:g}]"
    return SchemeSpec('binary-dark-window', 2, best[1], best[2], dark), ''


def _mary_dark_point(query, workers=None):
    """No error formula: rank a coarse grid by exact energy, accept the union bound where it meets epsilon, and try the
    cheaper points just below it with Monte Carlo probes."""
    size = min(query.grid, PROBE_GRID)
    points = [
        (math.fsum(mary_dark_energy(query.M, A, d, query.dark_current)) / query.M, A, d)
        for A in np.geomspace(query.A_min, query.A_max, size).tolist()
        for d in np.geomspace(query.horizon_min, query.horizon_max, size).tolist()
    ]
    points.sort()
    bounded = [p for p in points if union_bound_mary_dark(query.M, p[1], p[2], query.dark_current) <= query.epsilon]
    ceiling = bounded[0][0] if bounded else math.inf
    cheaper = [p for p in points if p[0] < ceiling][-PROBE_CANDIDATES:]

    if cheaper:
        specs = [SchemeSpec('mary-dark-window', query.M, A, d, query.dark_current) for _, A, d in cheaper]
        tallies = simulate_specs(specs, min(query.n_trials, PROBE_TRIALS), query.seed, workers=workers)
        for (energy, A, d), spec, tally in zip(cheaper, specs, tallies):
            p_err, _ = _pooled(tally)
            logger.debug(f"frontier probe A={A:.6g} window={d:.6g}: energy_avg {energy:.6g}, p_err_avg <= {p_err.ci_high:.6g}")
            if p_err.ci_high <= query.epsilon:
                return spec, ''
    if bounded:
        return SchemeSpec('mary-dark-window', query.M, bounded[0][1], bounded[0][2], query.dark_current), ''
    return None, f"no probe on the {size}x{size} grid meets epsilon"


def cmd_frontier(query: FrontierQuery, workers=None):
    "Least average energy of the scheme family with p_err_avg <= epsilon, with a Monte Carlo certificate."
    floor, floor_eps = converse_energy_bound(query.M), reliable_energy_floor(query.M, query.epsilon)
    logger.info(f"frontier M={query.M}, dark_current={query.dark_current}, epsilon={query.epsilon}, "
                f"A in [{query.A_min}, {query.A_max}], horizon in [{query.horizon_min}, {query.horizon_max}]")

    if query.epsilon >= floor: # guessing 0 without sending anything already meets epsilon
        blind = Estimate(query.M * query.n_trials, floor, 0.0, floor, floor)
        zero = Estimate(query.M * query.n_trials, 0.0, 0.0, 0.0, 0.0)
        result = FrontierResult(True, floor, floor_eps, None, 0.0, floor, zero, blind, 'blind guess meets epsilon')
        return Report([result.row(query)], FrontierRow), result

    if query.dark_current == 0:
        spec, reason = _zero_dark_point(query)
    elif query.M == 2:
        spec, reason = _binary_dark_point(query)
    else:
        spec, reason = _mary_dark_point(query, workers)

    if spec is None:
        logger.warning(f"frontier infeasible: {reason}")
        result = FrontierResult(False, floor, floor_eps, reason=reason)
        return Report([result.row(query)], FrontierRow), result

    cf = build_scheme(spec).closed_form()
    energy = cf.energy_avg if cf else math.fsum(mary_dark_energy(spec.M, spec.A, spec.horizon, spec.dark_current)) / spec.M
    tally, = simulate_specs([spec], query.n_trials, query.seed, workers=workers)
    mc_p_err, mc_energy = _pooled(tally)
    logger.info(f"frontier point {spec.kind}: A={spec.A:.6g}, horizon={spec.horizon:.6g}, energy_avg={energy:.6g}, "
                f"Monte Carlo energy {mc_energy.mean:.6g} +- {mc_energy.stderr:.2g}")
    if mc_energy.mean < floor_eps - 4 * mc_energy.stderr:
        logger.warning(f"frontier energy {mc_energy.mean:.6g} is below the floor {floor_eps:.6g} at epsilon")
    if cf is None and mc_p_err.ci_low > query.epsilon: # accepted on a short run or a bound, the certificate decides
        reason = f"certificate p_err_avg >= {mc_p_err.ci_low:.6g} > epsilon at A={spec.A:.6g}, horizon={spec.horizon:.6g}"
        logger.warning(f"frontier infeasible: {reason}")
        result = FrontierResult(False, floor, floor_eps, spec, energy, None, mc_energy, mc_p_err, reason)
        return Report([result.row(query)], FrontierRow), result
    result = FrontierResult(True, floor, floor_eps, spec, energy, cf.p_err_avg if cf else None, mc_energy, mc_p_err)
    return Report([result.row(query)], FrontierRow), result


def cmd_verify(config: VerifyConfig, workers=None):
    "Rows of the selected check suites and whether all of them passed."
    rows = run_suites(config, workers)
    return Report(rows, CheckRow), all(r.passed for r in rows)
