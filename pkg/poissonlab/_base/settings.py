"""
Author Notes: configuration objects of the command line harness. Each one is a traitlets object whose call signature
is built from its traits, so `ExperimentConfig()(M=4, A=100)` validates and sets in one go and returns itself for chaining.
Values come from defaults, then a TOML/JSON file, then command line flags.
"""
import json, math
import traitlets
import numpy as np

from traitlets import HasTraits, Int, Unicode, Float, List, TraitError
from pathlib import Path
from inspect import Signature, Parameter

try:
    import tomllib
except ModuleNotFoundError: # Python < 3.11
    import tomli as tomllib

from ..schemes import KINDS, DEFAULT_POWER, SchemeSpec, default_window

FORMATS = ('csv', 'json')
AXES = ('A', 'horizon', 'dark_current', 'M')
SUITES = ('identity', 'converse', 'oracle', 'substrate')
MAX_GRID = 10**4


class ConfigError(ValueError):
    "Invalid configuration. The message names the offending field."


class ConfigTraits(HasTraits):
    _sections = () # file sections read by this object, first one is used to dump

    def _check(self): pass # cross-field validation after setting values

    @property
    def props(self):
        return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in self.trait_values().items()}

    def __repr__(self):
        r = ", ".join(f"{k}={v!r}" for k, v in self.props.items())
        return f'{self.__class__.__name__}({r})'

    def _set_trait(self, key, value):
        if not self.has_trait(key):
            raise ConfigError(f"unknown field {key!r}, expected one of {sorted(self.trait_names())}")
        try:
            self.set_trait(key, value)
        except TraitError as e:
            raise ConfigError(f"{key}: {e}") from None

    def _set_props(self, **kwargs):
        for key, value in kwargs.items():
            self._set_trait(key, value)
        self._check()
        return self # For method chaining

    def load(self, path):
        "Apply values from a TOML or JSON file. Errors name the file field as section.key."
        for origin, key, value in _read_sections(path, self._sections):
            try:
                self._set_trait(key, value)
            except ConfigError as e:
                raise ConfigError(f"{path}: [{origin}] {e}") from None
        self._check()
        return self

    def dump(self, path):
        "Write current values to a JSON file that `load` reads back."
        Path(path).write_text(json.dumps({self._sections[0]: self.props}, indent=4))
        return self


def fix_sig(cls):
    parameters=[Parameter('self', Parameter.POSITIONAL_ONLY),
        *[Parameter(key, Parameter.KEYWORD_ONLY, default=value.default_value) for key,value in cls.class_traits().items()]]
    def set_props(self, **kwargs): return cls._set_props(self, **kwargs)
    cls.__call__ = set_props # need new function each time
    cls.__call__.__signature__ = Signature(parameters) # can only be set over class level
    return cls


def _check_seed(proposal):
    if not 0 <= proposal["value"] < 2**64:
        raise TraitError(f"should be an integer in [0, 2**64), got {proposal['value']}")
    return proposal["value"]

def _check_positive(proposal):
    if proposal["value"] is not None and not (proposal["value"] > 0 and math.isfinite(proposal["value"])):
        raise TraitError(f"should be finite and > 0, got {proposal['value']}")
    return proposal["value"]

def _check_format(proposal):
    if proposal["value"] not in FORMATS:
        raise TraitError(f"should be one of {FORMATS}, got {proposal['value']!r}")
    return proposal["value"]


@fix_sig
class ExperimentConfig(ConfigTraits):
    "Scheme, trial count, seed and output of `simulate` and `sweep`. horizon is T, or the window Delta for dark-window kinds."
    _sections = ('run', 'scheme', 'output', 'sweep')

    scheme       = Unicode('binary-zero-dark')
    M            = Int(2)
    A            = Float(DEFAULT_POWER)
    horizon      = Float(None, allow_none=True, help="None picks 1 for zero-dark kinds and default_window(dark_current) otherwise.")
    dark_current = Float(0.0)
    n_trials     = Int(10**6)
    seed         = Int(0)
    format       = Unicode('csv')
    out          = Unicode(None, allow_none=True)
    axes         = List(Unicode(), help="Sweep axes as NAME=VALUES, see parse_axis.")

    _v_seed = traitlets.validate('seed')(lambda self, p: _check_seed(p))
    _v_pos  = traitlets.validate('A', 'horizon')(lambda self, p: _check_positive(p))
    _v_fmt  = traitlets.validate('format')(lambda self, p: _check_format(p))

    @traitlets.validate('scheme')
    def _valid_kind(self, proposal):
        if proposal["value"] not in KINDS:
            raise TraitError(f"should be one of {KINDS}, got {proposal['value']!r}")
        return proposal["value"]

    @traitlets.validate('n_trials')
    def _valid_trials(self, proposal):
        if proposal["value"] < 1:
            raise TraitError(f"should be >= 1, got {proposal['value']}")
        return proposal["value"]

    @traitlets.validate('dark_current')
    def _valid_dark(self, proposal):
        if not (proposal["value"] >= 0 and math.isfinite(proposal["value"])):
            raise TraitError(f"should be finite and >= 0, got {proposal['value']}")
        return proposal["value"]

    def _check(self):
        self.scheme_spec() # raises ConfigError on inconsistent fields
        for text in self.axes:
            parse_axis(text)

    def scheme_spec(self, **overrides):
        "Validated SchemeSpec from the current values, with optional field overrides (used by sweeps)."
        values = dict(kind=self.scheme, M=self.M, A=self.A, horizon=self.horizon, dark_current=self.dark_current)
        values.update(overrides)
        if values['kind'].startswith('binary') and 'M' not in overrides:
            values['M'] = 2
        if values['horizon'] is None:
            values['horizon'] = 1.0 if values['kind'].endswith('zero-dark') else default_window(values['dark_current'])
        try:
            return SchemeSpec(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"scheme: {e}") from None


@fix_sig
class FrontierQuery(ConfigTraits):
    "Target error, channel, and search box of `frontier`."
    _sections = ('frontier', 'run', 'output')

    epsilon      = Float(0.01)
    dark_current = Float(0.0)
    M            = Int(2)
    A_min        = Float(0.1)
    A_max        = Float(1e5)
    horizon_min  = Float(1e-5)
    horizon_max  = Float(100.0)
    grid         = Int(48, help="probe points per axis")
    n_trials     = Int(10**6, help="Monte Carlo trials per message for certificates and probes")
    seed         = Int(0)
    format       = Unicode('csv')
    out          = Unicode(None, allow_none=True)

    _v_seed = traitlets.validate('seed')(lambda self, p: _check_seed(p))
    _v_pos  = traitlets.validate('A_min', 'A_max', 'horizon_min', 'horizon_max')(lambda self, p: _check_positive(p))
    _v_fmt  = traitlets.validate('format')(lambda self, p: _check_format(p))

    @traitlets.validate('epsilon')
    def _valid_epsilon(self, proposal):
        if not 0 < proposal["value"] < 1:
            raise TraitError(f"should be strictly inside (0, 1), got {proposal['value']}")
        return proposal["value"]

    @traitlets.validate('M', 'grid', 'n_trials')
    def _valid_counts(self, proposal):
        low = 2 if proposal["trait"].name in ('M', 'grid') else 1
        if proposal["value"] < low:
            raise TraitError(f"should be >= {low}, got {proposal['value']}")
        return proposal["value"]

    @traitlets.validate('dark_current')
    def _valid_dark(self, proposal):
        if not (proposal["value"] >= 0 and math.isfinite(proposal["value"])):
            raise TraitError(f"should be finite and >= 0, got {proposal['value']}")
        return proposal["value"]

    def _check(self):
        for low, high in (('A_min', 'A_max'), ('horizon_min', 'horizon_max')):
            if getattr(self, low) > getattr(self, high):
                raise ConfigError(f"{low}..{high}: empty range [{getattr(self, low)}, {getattr(self, high)}]")


@fix_sig
class VerifyConfig(ConfigTraits):
    "Suites and sizes of `verify`."
    _sections = ('verify', 'run', 'output')

    suites     = List(Unicode())
    n_trials   = Int(10**5)
    n_policies = Int(50)
    seed       = Int(0)
    format     = Unicode('csv')
    out        = Unicode(None, allow_none=True)

    _v_seed = traitlets.validate('seed')(lambda self, p: _check_seed(p))
    _v_fmt  = traitlets.validate('format')(lambda self, p: _check_format(p))

    @traitlets.validate('n_trials', 'n_policies')
    def _valid_sizes(self, proposal):
        low = 1000 if proposal["trait"].name == 'n_trials' else 1
        if proposal["value"] < low:
            raise TraitError(f"should be >= {low}, got {proposal['value']}")
        return proposal["value"]

    def _check(self):
        if not self.suites:
            raise ConfigError(f"suites: select at least one of {SUITES}")
        if (unknown := [s for s in self.suites if s not in SUITES]):
            raise ConfigError(f"suites: unknown {unknown}, available suites are {SUITES}")


def parse_axis(text):
    """Parse NAME=VALUES into (name, values). VALUES is `v1,v2,...`, `lo:hi:num` (linear) or `log:lo:hi:num` (geometric)."""
    name, sep, values = str(text).partition('=')
    name = name.strip()
    if not sep or name not in AXES:
        raise ConfigError(f"axis {text!r}: expected NAME=VALUES with NAME in {AXES}")
    parts = [p.strip() for p in values.split(':')]
    try:
        if len(parts) == 1:
            grid = [float(v) for v in parts[0].split(',') if v.strip()]
        elif len(parts) in (3, 4):
            log = parts[0] == 'log'
            if len(parts) == 4 and not log:
                raise ValueError(f"unknown spacing {parts[0]!r}")
            lo, hi, num = float(parts[-3]), float(parts[-2]), int(parts[-1])
            grid = (np.geomspace if log else np.linspace)(lo, hi, num).tolist() if num > 0 else []
        else:
            raise ValueError("expected v1,v2,... or lo:hi:num or log:lo:hi:num")
    except ValueError as e:
        raise ConfigError(f"axis {text!r}: {e}") from None
    if not grid:
        raise ConfigError(f"axis {text!r}: empty grid")
    if name == 'M':
        if any(v != int(v) for v in grid):
            raise ConfigError(f"axis {text!r}: M values should be integers")
        grid = [int(v) for v in grid]
    return name, tuple(grid)


def parse_axes(texts):
    "Validated list of at most two (name, values) axes with at most MAX_GRID points in total."
    axes = [parse_axis(t) for t in texts]
    if not axes:
        raise ConfigError("axes: a sweep needs at least one axis, e.g. --axis A=1:10:10")
    if len(axes) > 2:
        raise ConfigError(f"axes: at most two axes are supported, got {len(axes)}")
    if len({name for name, _ in axes}) != len(axes):
        raise ConfigError("axes: the same parameter appears twice")
    if math.prod(len(v) for _, v in axes) > MAX_GRID:
        raise ConfigError(f"axes: grid has more than {MAX_GRID} points")
    return axes


def _read_sections(path, sections):
    "Flatten the relevant sections of a TOML/JSON file into trait values. [scheme].kind maps to the `scheme` trait."
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"config file {str(path)!r} does not exist!")
    try:
        if file.suffix.lower() == '.json':
            data = json.loads(file.read_text())
        else:
            data = tomllib.loads(file.read_text())
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{file}: {e}") from None

    known = ('run', 'scheme', 'output', 'sweep', 'frontier', 'verify')
    values = []
    for section, table in data.items():
        if not isinstance(table, dict):
            raise ConfigError(f"{file}: top level key {section!r} should be a [section]")
        if section not in known:
            raise ConfigError(f"{file}: unknown section [{section}], expected one of {known}")
        if section not in sections:
            continue # belongs to another command
        for key, value in table.items():
            values.append((f'{section}.{key}', 'scheme' if (section, key) == ('scheme', 'kind') else key, value))
    return values


def load_config(path, config):
    "Apply a TOML/JSON file to a configuration object and return it."
    return config.load(path)


def dump_config(config, path):
    "Write a configuration object as JSON that load_config reads back."
    return config.dump(path)
