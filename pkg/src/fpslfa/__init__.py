"""Latent factor analysis of sparse rating matrices with fuzzy-PID SGD."""

from .core import (DatasetSplit, FactorModel, Hyperparams, PidGains, SparseMatrix,
                   init_factors, predict, predict_entries, split_dataset)
from .data_io import (DatasetFormat, FormatKind, ParsedDataset, generate_synthetic,
                      load_model, parse_dataset, save_model, write_dataset)
from .errors import (ConfigError, FormatError, FpsLfaError, InvalidArgumentError,
                     NumericalDivergenceError, ParseError)
from .fuzzy import (AdaptedParams, FuzzyTable, MembershipResult, default_table,
                    defuzzify, fuzzify, schedule)
from .optimizers import (ControllerBank, ControllerState, OptimizerKind, apply_epoch,
                         fps_update, instance_error, pid_refine, psl_update, sgd_update,
                         warmup)
from .training import (EpochMetrics, TrainConfig, TrainReport, compute_rmse, run_epoch,
                       train)

__version__ = "0.1.0"
