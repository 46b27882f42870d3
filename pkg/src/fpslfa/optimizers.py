"""Per-instance update rules: plain SGD, fixed-gain PID-SGD and fuzzy-PID SGD.

Each rule exists twice. The scalar functions (``sgd_update``, ``psl_update``,
``fps_update``) work on one entry with plain numpy and are the readable
reference. ``apply_epoch`` runs a whole pass through a numba kernel that
performs the same arithmetic; the test suite checks one against the other.

All rules update ``x_row`` and ``y_col`` simultaneously from their
pre-update values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .core import FactorModel, Hyperparams, PidGains, SparseMatrix
from .errors import NumericalDivergenceError

DIVERGENCE_LIMIT = 1e6


class OptimizerKind(str, Enum):
    SGD = "sgd"
    PID = "pid"
    FPS = "fps"


_KERNEL_MODE = {OptimizerKind.SGD: 0, OptimizerKind.PID: 1, OptimizerKind.FPS: 2}


@dataclass(frozen=True)
class ControllerState:
    prev_error: float = 0.0
    integral: float = 0.0
    initialized: bool = False


class ControllerBank:
    """One PID memory per training entry, indexed by position in the train set.

    Stored as flat arrays so the epoch kernel can update them in place. The
    bank is never reset between epochs.
    """

    def __init__(self, size):
        self.prev_error = np.zeros(size, dtype=np.float64)
        self.integral = np.zeros(size, dtype=np.float64)
        self.initialized = np.zeros(size, dtype=np.bool_)

    def __len__(self):
        return len(self.integral)

    def __getitem__(self, i):
        return ControllerState(float(self.prev_error[i]), float(self.integral[i]),
                               bool(self.initialized[i]))

    def __setitem__(self, i, state):
        self.prev_error[i] = state.prev_error
        self.integral[i] = state.integral
        self.initialized[i] = state.initialized


def instance_error(model: FactorModel, entry) -> float:
    row, col, value = entry
    return float(value) - float(np.dot(model.x[row], model.y[col]))


def _check(model, row, col):
    xr, yc = model.x[row], model.y[col]
    if not (np.all(np.isfinite(xr)) and np.all(np.isfinite(yc))
            and np.max(np.abs(xr)) <= DIVERGENCE_LIMIT
            and np.max(np.abs(yc)) <= DIVERGENCE_LIMIT):
        raise NumericalDivergenceError(row, col)


def _regularized_step(model, row, col, signal, eta, lam):
    x_old = model.x[row].copy()
    y_old = model.y[col].copy()
    model.x[row] = x_old + eta * (signal * y_old - lam * x_old)
    model.y[col] = y_old + eta * (signal * x_old - lam * y_old)
    _check(model, row, col)


def sgd_update(model: FactorModel, entry, h: Hyperparams) -> None:
    row, col, _ = entry
    e = instance_error(model, entry)
    _regularized_step(model, row, col, e, h.eta, h.lam)


def pid_refine(e_t: float, state: ControllerState, g: PidGains):
    """Return ``(refined_error, new_state)``; the previous error starts at 0."""
    integral = state.integral + e_t
    refined = g.kp * e_t + g.ki * integral + g.kd * (e_t - state.prev_error)
    return refined, ControllerState(prev_error=e_t, integral=integral, initialized=True)


def psl_update(model: FactorModel, entry, state: ControllerState, h: Hyperparams,
               g: PidGains) -> ControllerState:
    """PID-refined SGD step with raw gains. Returns the advanced controller state."""
    row, col, _ = entry
    refined, new_state = pid_refine(instance_error(model, entry), state, g)
    _regularized_step(model, row, col, refined, h.eta, h.lam)
    return new_state


def fps_update(model: FactorModel, entry, state: ControllerState, params) -> ControllerState:
    """Folded step ``v <- (1 - phi) v + refined * other`` with eta-folded gains.

    ``params`` is an ``AdaptedParams``. Returns the advanced controller state.
    """
    row, col, _ = entry
    scaled, new_state = pid_refine(instance_error(model, entry), state, params.gains)
    keep = 1.0 - params.phi
    x_old = model.x[row].copy()
    y_old = model.y[col].copy()
    model.x[row] = keep * x_old + scaled * y_old
    model.y[col] = keep * y_old + scaled * x_old
    _check(model, row, col)
    return new_state


@numba.njit(cache=True)
def _epoch_kernel(x, y, rows, cols, vals, order, prev, integ, init,
                  mode, eta, lam, phi, kp, ki, kd, limit):
    f = x.shape[1]
    for pos in range(order.shape[0]):
        j = order[pos]
        m = rows[j]
        n = cols[j]
        dot = 0.0
        for k in range(f):
            dot += x[m, k] * y[n, k]
        e = vals[j] - dot
        if mode == 0:
            s = e
        else:
            total = integ[j] + e
            s = kp * e + ki * total + kd * (e - prev[j])
            integ[j] = total
            prev[j] = e
            init[j] = True
        bad = False
        if mode == 2:
            keep = 1.0 - phi
            for k in range(f):
                xo = x[m, k]
                yo = y[n, k]
                xn = keep * xo + s * yo
                yn = keep * yo + s * xo
                x[m, k] = xn
                y[n, k] = yn
                if not (abs(xn) <= limit and abs(yn) <= limit):
                    bad = True
        else:
            for k in range(f):
                xo = x[m, k]
                yo = y[n, k]
                xn = xo + eta * (s * yo - lam * xo)
                yn = yo + eta * (s * xo - lam * yo)
                x[m, k] = xn
                y[n, k] = yn
                if not (abs(xn) <= limit and abs(yn) <= limit):
                    bad = True
        if bad:
            return j
    return -1


def apply_epoch(model: FactorModel, bank: ControllerBank, train, order, kind,
                eta=1.0, lam=0.0, phi=0.0, gains=PidGains(1.0, 0.0, 0.0)) -> None:
    """One pass over ``train`` in ``order``, mutating ``model`` and ``bank``.

    ``kind`` selects the rule. SGD uses ``eta``/``lam``; PID uses ``eta``,
    ``lam`` and raw ``gains``; FPS uses ``phi`` and eta-folded ``gains``.
    """
    kind = OptimizerKind(kind)
    failed = _epoch_kernel(
        model.x, model.y, train.rows, train.cols, train.values,
        np.ascontiguousarray(order, dtype=np.int64),
        bank.prev_error, bank.integral, bank.initialized,
        _KERNEL_MODE[kind], float(eta), float(lam), float(phi),
        float(gains.kp), float(gains.ki), float(gains.kd), DIVERGENCE_LIMIT)
    if failed >= 0:
        raise NumericalDivergenceError(int(train.rows[failed]), int(train.cols[failed]))


def warmup() -> None:
    """Compile the epoch kernel so later timings exclude JIT cost."""
    model = FactorModel(np.zeros((1, 1)), np.zeros((1, 1)))
    tiny = SparseMatrix(1, 1, np.array([0]), np.array([0]), np.array([1.0]))
    apply_epoch(model, ControllerBank(1), tiny, np.array([0]), OptimizerKind.SGD,
                eta=0.1, lam=0.0)
