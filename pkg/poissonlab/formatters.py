"""Report rows and their CSV, JSON and HTML representations.

Rows are frozen dataclasses whose field order is the column order. A `Report` renders them through pandas; floats are
written with 17 significant digits so a CSV read back gives the same numbers.
"""
import json, math

from dataclasses import dataclass, fields, astuple
from pathlib import Path
from typing import Optional, Union

import pandas as pd

__all__ = ['SimRow', 'CheckRow', 'FrontierRow', 'Report']


@dataclass(frozen=True)
class SimRow:
    "One message (or the pooled `avg` row) of a simulated scheme."
    kind: str
    M: int
    A: float
    horizon: float
    dark_current: float
    message: Union[int, str]
    n_trials: int
    p_err: float
    p_err_lo: float
    p_err_hi: float
    energy: float
    energy_lo: float
    energy_hi: float
    cf_p_err: Optional[float]
    cf_energy: Optional[float]
    seed: int


@dataclass(frozen=True)
class CheckRow:
    "One check of a verification suite: two estimates and whether they agree."
    suite: str
    check: str
    lhs: float
    lhs_lo: float
    lhs_hi: float
    rhs: float
    rhs_lo: float
    rhs_hi: float
    diff: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class FrontierRow:
    "Best point of a frontier search with its Monte Carlo certificate and the converse floors."
    feasible: bool
    M: int
    dark_current: float
    epsilon: float
    A: Optional[float]
    horizon: Optional[float]
    energy_avg: Optional[float]
    p_err_avg: Optional[float]
    mc_energy: Optional[float]
    mc_energy_lo: Optional[float]
    mc_energy_hi: Optional[float]
    mc_p_err: Optional[float]
    mc_p_err_lo: Optional[float]
    mc_p_err_hi: Optional[float]
    floor: float
    floor_at_epsilon: float
    n_trials: int
    seed: int
    reason: str = ''


def _plain(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class Report:
    "Ordered rows of a single row type."
    def __init__(self, rows, row_type=None):
        self.rows = list(rows)
        self.row_type = row_type or (type(self.rows[0]) if self.rows else None)
        if self.row_type is None:
            raise ValueError("an empty Report needs an explicit row_type")
        if (other := [type(r) for r in self.rows if type(r) is not self.row_type]):
            raise TypeError(f"all rows should be {self.row_type.__name__}, got {other[0].__name__}")

    def __repr__(self):
        return f'Report({self.row_type.__name__}, {len(self.rows)} rows)'

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def columns(self):
        return [f.name for f in fields(self.row_type)]

    def to_frame(self):
        return pd.DataFrame([astuple(r) for r in self.rows], columns=self.columns)

    def to_csv(self):
        return self.to_frame().to_csv(index=False, float_format='%.17g', na_rep='', lineterminator='\n')

    def to_json(self):
        "One JSON object per row and line; missing values are null."
        return ''.join(json.dumps({k: _plain(v) for k, v in zip(self.columns, astuple(r))}) + '\n' for r in self.rows)

    def render(self, format='csv'):
        if format == 'csv':
            return self.to_csv()
        if format == 'json':
            return self.to_json()
        raise ValueError(f"format should be 'csv' or 'json', got {format!r}")

    def write(self, path, format='csv'):
        "Write to `path`, creating parent folders."
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(format))
        return path

    def _repr_html_(self):
        return self.to_frame().to_html(index=False, na_rep='', float_format=lambda v: f'{v:.6g}')
