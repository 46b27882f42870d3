"""Single-input fuzzy gain scheduler driven by the epoch-level RMSE improvement.

The input is ``a_t = rmse(t-1) - rmse(t)``. Triangular membership functions
with unit overlap on five breakpoints give exactly two non-zero degrees, and
defuzzification is the degree-weighted average of the adjacent table values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PidGains
from .errors import ConfigError, InvalidArgumentError

N_POINTS = 5

# (field name, required direction) in the order the chains are checked
_CHAINS = (
    ("a_points", "increasing"),
    ("phi_points", "increasing"),
    ("p_points", "increasing"),
    ("i_points", "decreasing"),
    ("d_points", "decreasing"),
)


@dataclass(frozen=True)
class FuzzyTable:
    a_points: tuple
    phi_points: tuple
    p_points: tuple
    i_points: tuple
    d_points: tuple

    def __post_init__(self):
        for name, direction in _CHAINS:
            values = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, values)
            if len(values) != N_POINTS:
                raise ConfigError(f"fuzzy.{name} needs {N_POINTS} values, got {len(values)}")
            if not all(math.isfinite(v) and v > 0 for v in values):
                raise ConfigError(f"fuzzy.{name} values must be positive and finite: {values}")
            diffs = np.diff(values)
            ok = np.all(diffs > 0) if direction == "increasing" else np.all(diffs < 0)
            if not ok:
                raise ConfigError(f"fuzzy.{name} must be strictly {direction}: {values}")


@dataclass(frozen=True)
class MembershipResult:
    lower_index: int
    d_lower: float
    d_upper: float


@dataclass(frozen=True)
class AdaptedParams:
    """Folded shrinkage ``phi`` and eta-folded gains for one epoch."""

    phi: float
    gains: PidGains


def default_table() -> FuzzyTable:
    return FuzzyTable(
        a_points=(0.0001, 0.0002, 0.0003, 0.0004, 0.0005),
        phi_points=(0.00006, 0.00007, 0.00008, 0.00009, 0.0001),
        p_points=(0.004, 0.0045, 0.005, 0.0055, 0.006),
        i_points=(9e-7, 8e-7, 7e-7, 6e-7, 5e-7),
        d_points=(7.2e-6, 6.4e-6, 5.6e-6, 4.8e-6, 4e-6),
    )


def fuzzify(a_t: float, table: FuzzyTable) -> MembershipResult:
    """Membership degrees of ``a_t`` on its two bracketing breakpoints.

    Inputs outside [A1, A5] saturate to the nearest endpoint. Intervals are
    half-open, ``A_i <= a_t < A_{i+1}``.
    """
    a_t = float(a_t)
    if not math.isfinite(a_t):
        raise InvalidArgumentError(f"fuzzy input must be finite, got {a_t}")
    a = table.a_points
    if a_t <= a[0]:
        return MembershipResult(0, 1.0, 0.0)
    if a_t >= a[-1]:
        return MembershipResult(N_POINTS - 2, 0.0, 1.0)
    i = 0
    while a_t >= a[i + 1]:
        i += 1
    width = a[i + 1] - a[i]
    return MembershipResult(i, (a[i + 1] - a_t) / width, (a_t - a[i]) / width)


def defuzzify(m: MembershipResult, table: FuzzyTable) -> AdaptedParams:
    i = m.lower_index
    if not 0 <= i <= N_POINTS - 2:
        raise InvalidArgumentError(f"lower_index {i} outside 0..{N_POINTS - 2}")

    def blend(points):
        return m.d_lower * points[i] + m.d_upper * points[i + 1]

    return AdaptedParams(
        phi=blend(table.phi_points),
        gains=PidGains(blend(table.p_points), blend(table.i_points), blend(table.d_points)),
    )


def schedule(a_t: float, table: FuzzyTable) -> AdaptedParams:
    """``defuzzify(fuzzify(a_t))``."""
    return defuzzify(fuzzify(a_t, table), table)
