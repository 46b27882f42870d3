"""Epoch loop, RMSE evaluation, fuzzy adaptation and early stopping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (DatasetSplit, FactorModel, Hyperparams, PidGains, SparseMatrix,
                   init_factors, predict_entries)
from .errors import InvalidArgumentError, NumericalDivergenceError
from .fuzzy import AdaptedParams, FuzzyTable, default_table, schedule
from .optimizers import ControllerBank, OptimizerKind, apply_epoch, warmup

# initial values for the adaptive parameters of the fuzzy scheme
FPS_INITIAL_PHI = 0.00012
FPS_INITIAL_GAINS = PidGains(0.005, 0.000001, 0.0002)

BASELINE_ETA = 0.005
BASELINE_LAMBDA = 0.03
# FPS initial folded gains divided by the baseline eta
PID_DEFAULT_GAINS = PidGains(1.0, 0.0002, 0.04)


@dataclass(frozen=True)
class TrainConfig:
    """Everything ``train`` needs besides the data.

    For ``sgd`` and ``pid`` the ``initial_gains`` are raw gains used with
    ``hyperparams``. For ``fps`` they are eta-folded and paired with
    ``initial_phi``; ``hyperparams`` is then unused by the updates.
    """

    optimizer_kind: OptimizerKind = OptimizerKind.FPS
    f: int = 20
    max_epochs: int = 1000
    patience: int = 5
    min_delta: float = 1e-5
    seed: int = 0
    shuffle_each_epoch: bool = False
    hyperparams: Hyperparams = Hyperparams(BASELINE_ETA, BASELINE_LAMBDA)
    initial_gains: Optional[PidGains] = None
    initial_phi: float = FPS_INITIAL_PHI
    fuzzy_table: FuzzyTable = field(default_factory=default_table)

    def __post_init__(self):
        object.__setattr__(self, "optimizer_kind", OptimizerKind(self.optimizer_kind))
        if self.max_epochs < 1:
            raise InvalidArgumentError("max_epochs must be >= 1")
        if self.patience < 1:
            raise InvalidArgumentError("patience must be >= 1")
        if not self.min_delta >= 0:
            raise InvalidArgumentError("min_delta must be >= 0")
        if self.f < 1:
            raise InvalidArgumentError("f must be >= 1")
        if self.initial_gains is None:
            gains = {OptimizerKind.SGD: PidGains(1.0, 0.0, 0.0),
                     OptimizerKind.PID: PID_DEFAULT_GAINS,
                     OptimizerKind.FPS: FPS_INITIAL_GAINS}[self.optimizer_kind]
            object.__setattr__(self, "initial_gains", gains)

    def initial_params(self) -> AdaptedParams:
        """Parameters in effect during epoch 0, in folded form."""
        if self.optimizer_kind is OptimizerKind.FPS:
            return AdaptedParams(self.initial_phi, self.initial_gains)
        h = self.hyperparams
        if self.optimizer_kind is OptimizerKind.SGD:
            return AdaptedParams(h.phi, PidGains(h.eta, 0.0, 0.0))
        return AdaptedParams(h.phi, self.initial_gains.folded(h.eta))


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    validation_rmse: float
    a_t: Optional[float]
    adapted: AdaptedParams
    update_seconds: float
    eval_seconds: float

    @property
    def elapsed_seconds(self):
        return self.update_seconds + self.eval_seconds


@dataclass
class TrainReport:
    per_epoch: list = field(default_factory=list)
    best_epoch: int = -1
    best_validation_rmse: float = float("inf")
    test_rmse: float = float("nan")

    @property
    def update_seconds(self):
        return sum(m.update_seconds for m in self.per_epoch)

    @property
    def eval_seconds(self):
        return sum(m.eval_seconds for m in self.per_epoch)

    @property
    def total_seconds(self):
        return self.update_seconds + self.eval_seconds

    @property
    def seconds_to_best(self):
        return sum(m.elapsed_seconds for m in self.per_epoch[:self.best_epoch + 1])

    @property
    def update_seconds_to_best(self):
        return sum(m.update_seconds for m in self.per_epoch[:self.best_epoch + 1])

    def epochs_to_within(self, ratio):
        """Number of epochs until validation RMSE first falls to ``ratio * best``."""
        target = ratio * self.best_validation_rmse
        for m in self.per_epoch:
            if m.validation_rmse <= target:
                return m.epoch + 1
        raise ValueError("report is empty")

    def seconds_to_within(self, ratio):
        n = self.epochs_to_within(ratio)
        return sum(m.elapsed_seconds for m in self.per_epoch[:n])


def compute_rmse(model: FactorModel, entries: SparseMatrix) -> float:
    if len(entries) == 0:
        raise InvalidArgumentError("cannot compute RMSE over an empty entry set")
    residuals = entries.values - predict_entries(model, entries.rows, entries.cols)
    return float(np.sqrt(np.sum(residuals * residuals) / len(residuals)))


def run_epoch(model: FactorModel, bank: ControllerBank, train: SparseMatrix,
              cfg: TrainConfig, current: AdaptedParams, order=None) -> None:
    """Apply the configured rule to every training entry once.

    ``current`` is held fixed for the whole pass. It is only read for FPS;
    the baselines take ``cfg.hyperparams`` and ``cfg.initial_gains``.
    """
    if len(bank) != len(train):
        raise InvalidArgumentError(
            f"controller bank has {len(bank)} states for {len(train)} entries")
    if order is None:
        order = np.arange(len(train), dtype=np.int64)
    kind = cfg.optimizer_kind
    h = cfg.hyperparams
    if kind is OptimizerKind.FPS:
        apply_epoch(model, bank, train, order, kind, phi=current.phi, gains=current.gains)
    else:
        apply_epoch(model, bank, train, order, kind, eta=h.eta, lam=h.lam,
                    gains=cfg.initial_gains)


def train(data: DatasetSplit, cfg: TrainConfig, model: Optional[FactorModel] = None):
    """Train until early stopping or ``max_epochs``; return ``(best_model, report)``.

    A^t is measured on the validation set. For FPS the fuzzy stage turns it
    into the parameters of the following epoch.
    """
    if len(data.train) == 0 or len(data.validation) == 0 or len(data.test) == 0:
        raise InvalidArgumentError(
            "degenerate split: train/validation/test sizes are "
            f"{len(data.train)}/{len(data.validation)}/{len(data.test)}")
    train_set = data.train
    if model is None:
        model = init_factors(train_set.num_rows, train_set.num_cols, cfg.f, cfg.seed)
    elif (model.num_rows, model.num_cols) != (train_set.num_rows, train_set.num_cols):
        raise InvalidArgumentError("model dimensions do not match the data")
    bank = ControllerBank(len(train_set))
    params = cfg.initial_params()
    warmup()
    is_fps = cfg.optimizer_kind is OptimizerKind.FPS
    shuffle_rng = np.random.default_rng([cfg.seed, 1]) if cfg.shuffle_each_epoch else None
    order = np.arange(len(train_set), dtype=np.int64)

    report = TrainReport()
    best_model = model.copy()
    reference = float("inf")
    stall = 0
    previous = None
    for t in range(cfg.max_epochs):
        if shuffle_rng is not None:
            order = shuffle_rng.permutation(len(train_set))
        t0 = time.perf_counter()
        try:
            run_epoch(model, bank, train_set, cfg, params, order)
        except NumericalDivergenceError as exc:
            exc.epoch = t
            exc.report = report
            exc.args = (f"{exc.args[0]} during epoch {t}",)
            raise
        t1 = time.perf_counter()
        rmse = compute_rmse(model, data.validation)
        if rmse < report.best_validation_rmse:
            report.best_validation_rmse = rmse
            report.best_epoch = t
            best_model = model.copy()
        t2 = time.perf_counter()

        a_t = None if previous is None else previous - rmse
        report.per_epoch.append(EpochMetrics(t, rmse, a_t, params, t1 - t0, t2 - t1))
        previous = rmse

        if rmse < reference - cfg.min_delta:
            reference = rmse
            stall = 0
        else:
            stall += 1
        if stall >= cfg.patience:
            break
        if is_fps and a_t is not None:
            params = schedule(a_t, cfg.fuzzy_table)

    report.test_rmse = compute_rmse(best_model, data.test)
    return best_model, report
