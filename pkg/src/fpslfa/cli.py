"""Command-line front end: ``train``, ``evaluate`` and ``benchmark``.

Settings are resolved as built-in defaults, then the ``--config`` file, then
command-line flags. The config file holds flat ``key = value`` lines; values
are Python/JSON-style literals and keys may be dotted, e.g.::

    optimizer = "fps"
    f = 20
    fuzzy.a_points = [0.0001, 0.0002, 0.0003, 0.0004, 0.0005]

Reports are JSON lines: one ``config`` record echoing the effective settings,
one ``epoch`` record per epoch and a final ``summary`` record.

Exit codes: 0 success, 2 usage/config error, 3 parse error, 4 divergence.
"""

from __future__ import annotations

import argparse
import ast
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import Hyperparams, PidGains, split_dataset
from .data_io import (DatasetFormat, load_index_maps, load_model, parse_dataset,
                      save_index_maps, save_model)
from .errors import (ConfigError, FormatError, InvalidArgumentError, NumericalDivergenceError,
                     ParseError)
from .fuzzy import FuzzyTable, default_table
from .optimizers import OptimizerKind, warmup
from .training import (BASELINE_ETA, BASELINE_LAMBDA, FPS_INITIAL_GAINS, FPS_INITIAL_PHI,
                       PID_DEFAULT_GAINS, TrainConfig, compute_rmse, train)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_DIVERGENCE = 4

TIMING_FIELDS = ("update_secs", "eval_secs", "total_secs", "secs_to_best",
                 "update_secs_to_best")

_TABLE = default_table()
DEFAULTS = {
    "format": "movielens_dat",
    "has_header": False,
    "optimizer": "fps",
    "f": 20,
    "eta": BASELINE_ETA,
    "lambda": BASELINE_LAMBDA,
    "phi": None,
    "kp": None,
    "ki": None,
    "kd": None,
    "max_epochs": 1000,
    "patience": 5,
    "min_delta": 1e-5,
    "seed": 0,
    "split_seed": 0,
    "shuffle": False,
    "repeats": 3,
    "optimizers": ["sgd", "pid", "fps"],
    "grid.eta": None,
    "grid.lambda": None,
    "fuzzy.a_points": list(_TABLE.a_points),
    "fuzzy.phi_points": list(_TABLE.phi_points),
    "fuzzy.p_points": list(_TABLE.p_points),
    "fuzzy.i_points": list(_TABLE.i_points),
    "fuzzy.d_points": list(_TABLE.d_points),
}

_GAIN_DEFAULTS = {
    "sgd": PidGains(1.0, 0.0, 0.0),
    "pid": PID_DEFAULT_GAINS,
    "fps": FPS_INITIAL_GAINS,
}


def parse_config_text(text, source="<config>"):
    """Parse flat ``key = value`` text into a dict. ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        lowered = value.lower()
        if lowered in ("true", "false"):
            out[key] = lowered == "true"
            continue
        try:
            out[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            # bare words such as fps or csv
            out[key] = value
    return out


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config_text(text, source=str(path))


def _csv_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _csv_words(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="fpslfa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", required=True, help="ratings file")
        p.add_argument("--format", choices=["movielens_dat", "csv", "tsv"])
        p.add_argument("--has-header", dest="has_header", action="store_const", const=True)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--split-seed", dest="split_seed", type=int)

    def training(p):
        p.add_argument("--f", type=int)
        p.add_argument("--eta", type=float)
        p.add_argument("--lambda", dest="lambda", type=float)
        p.add_argument("--phi", type=float, help="initial phi for fps")
        p.add_argument("--kp", type=float)
        p.add_argument("--ki", type=float)
        p.add_argument("--kd", type=float)
        p.add_argument("--max-epochs", dest="max_epochs", type=int)
        p.add_argument("--patience", type=int)
        p.add_argument("--min-delta", dest="min_delta", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--shuffle", action="store_const", const=True)

    p_train = sub.add_parser("train", help="train one model and write a report")
    common(p_train)
    training(p_train)
    p_train.add_argument("--optimizer", choices=["sgd", "pid", "fps"])
    p_train.add_argument("--output", default="report.jsonl",
                         help="report path; the snapshot is written next to it")

    p_eval = sub.add_parser("evaluate", help="RMSE of a saved snapshot")
    common(p_eval)
    p_eval.add_argument("--model", required=True, help="snapshot written by train")
    p_eval.add_argument("--subset", choices=["train", "validation", "test", "all"],
                        default="test")
    p_eval.add_argument("--predictions", help="write per-entry predictions here (csv)")
    p_eval.add_argument("--output", help="also write the metric record here")

    p_bench = sub.add_parser("benchmark", help="compare optimizers on one split")
    common(p_bench)
    training(p_bench)
    p_bench.add_argument("--optimizers", type=_csv_words, help="e.g. sgd,pid,fps")
    p_bench.add_argument("--eta-grid", dest="grid.eta", type=_csv_floats,
                         help="comma-separated eta values for sgd/pid")
    p_bench.add_argument("--lambda-grid", dest="grid.lambda", type=_csv_floats,
                         help="comma-separated lambda values for sgd/pid")
    p_bench.add_argument("--repeats", type=int)
    p_bench.add_argument("--output", help="write result rows here (json lines)")
    return parser


def effective_settings(args):
    """Merge defaults, config file and command-line flags."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings["data"] = args.data
    return settings


def _resolve_gains(settings, optimizer):
    base = _GAIN_DEFAULTS[optimizer]
    return PidGains(*(base_v if settings[k] is None else float(settings[k])
                      for k, base_v in zip(("kp", "ki", "kd"), (base.kp, base.ki, base.kd))))


def make_train_config(settings, optimizer=None, eta=None, lam=None, seed=None):
    optimizer = optimizer or settings["optimizer"]
    if optimizer not in _GAIN_DEFAULTS:
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    try:
        table = FuzzyTable(*(settings[f"fuzzy.{name}"] for name in
                             ("a_points", "phi_points", "p_points", "i_points", "d_points")))
        phi = FPS_INITIAL_PHI if settings["phi"] is None else float(settings["phi"])
        return TrainConfig(
            optimizer_kind=OptimizerKind(optimizer),
            f=int(settings["f"]),
            max_epochs=int(settings["max_epochs"]),
            patience=int(settings["patience"]),
            min_delta=float(settings["min_delta"]),
            seed=int(settings["seed"] if seed is None else seed),
            shuffle_each_epoch=bool(settings["shuffle"]),
            hyperparams=Hyperparams(float(settings["eta"] if eta is None else eta),
                                    float(settings["lambda"] if lam is None else lam)),
            initial_gains=_resolve_gains(settings, optimizer),
            initial_phi=phi,
            fuzzy_table=table,
        )
    except (InvalidArgumentError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _echo(cfg: TrainConfig, settings):
    t = cfg.fuzzy_table
    record = {
        "record": "config",
        "data": settings["data"],
        "format": settings["format"],
        "has_header": bool(settings["has_header"]),
        "split_seed": int(settings["split_seed"]),
        "optimizer": cfg.optimizer_kind.value,
        "f": cfg.f,
        "eta": cfg.hyperparams.eta,
        "lambda": cfg.hyperparams.lam,
        "kp": cfg.initial_gains.kp,
        "ki": cfg.initial_gains.ki,
        "kd": cfg.initial_gains.kd,
        "max_epochs": cfg.max_epochs,
        "patience": cfg.patience,
        "min_delta": cfg.min_delta,
        "seed": cfg.seed,
        "shuffle": cfg.shuffle_each_epoch,
    }
    if cfg.optimizer_kind is OptimizerKind.FPS:
        record["phi"] = cfg.initial_phi
        record.update({f"fuzzy.{k}": list(getattr(t, k)) for k in
                       ("a_points", "phi_points", "p_points", "i_points", "d_points")})
    return record


def _ms(seconds):
    return round(seconds, 3)


def epoch_record(m):
    return {
        "record": "epoch",
        "epoch": m.epoch,
        "val_rmse": m.validation_rmse,
        "a_t": m.a_t,
        "phi": m.adapted.phi,
        "kp": m.adapted.gains.kp,
        "ki": m.adapted.gains.ki,
        "kd": m.adapted.gains.kd,
        "update_secs": _ms(m.update_seconds),
        "eval_secs": _ms(m.eval_seconds),
    }


def summary_record(report, status, snapshot=None):
    rec = {
        "record": "summary",
        "status": status,
        "epochs": len(report.per_epoch),
        "best_epoch": report.best_epoch,
        "best_val_rmse": report.best_validation_rmse if report.per_epoch else None,
        "test_rmse": report.test_rmse if np.isfinite(report.test_rmse) else None,
        "update_secs": _ms(report.update_seconds),
        "eval_secs": _ms(report.eval_seconds),
        "total_secs": _ms(report.total_seconds),
        "secs_to_best": _ms(report.seconds_to_best),
    }
    if snapshot is not None:
        rec["snapshot"] = str(snapshot)
    return rec


def _write_lines(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def strip_timing(records):
    return [{k: v for k, v in rec.items() if k not in TIMING_FIELDS} for rec in records]


def _load_split(settings):
    fmt = DatasetFormat(settings["format"], bool(settings["has_header"]))
    parsed = parse_dataset(settings["data"], fmt)
    return parsed, split_dataset(parsed.matrix, int(settings["split_seed"]))


def cmd_train(args):
    settings = effective_settings(args)
    cfg = make_train_config(settings)
    parsed, split = _load_split(settings)
    output = Path(args.output)
    snapshot = output.with_suffix(".model")
    records = [_echo(cfg, settings)]
    try:
        model, report = train(split, cfg)
    except NumericalDivergenceError as exc:
        partial = exc.report
        records += [epoch_record(m) for m in partial.per_epoch]
        rec = summary_record(partial, "diverged")
        rec["error"] = str(exc)
        records.append(rec)
        _write_lines(output, records)
        raise
    save_model(model, snapshot)
    save_index_maps(output.with_suffix(".ids.json"), parsed.row_ids, parsed.col_ids)
    records += [epoch_record(m) for m in report.per_epoch]
    records.append(summary_record(report, "ok", snapshot))
    _write_lines(output, records)
    print(f"best validation RMSE {report.best_validation_rmse:.6f} at epoch {report.best_epoch}, "
          f"test RMSE {report.test_rmse:.6f}, {report.total_seconds:.3f}s")
    return EXIT_OK


def cmd_evaluate(args):
    settings = effective_settings(args)
    parsed, split = _load_split(settings)
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise ConfigError(f"cannot read snapshot {args.model}: {exc.strerror}") from exc
    dims = (parsed.num_rows, parsed.num_cols)
    if (model.num_rows, model.num_cols) != dims:
        raise ConfigError(f"snapshot is {model.num_rows}x{model.num_cols} but data is "
                          f"{dims[0]}x{dims[1]}")
    entries = parsed.matrix if args.subset == "all" else getattr(split, args.subset)
    if len(entries) == 0:
        raise InvalidArgumentError(f"the {args.subset} selection is empty")
    rmse = compute_rmse(model, entries)
    print(f"{args.subset} RMSE {rmse:.6f} over {len(entries)} entries")
    if args.predictions:
        ids_path = Path(args.model).with_suffix(".ids.json")
        row_ids, col_ids = (load_index_maps(ids_path) if ids_path.exists()
                            else (parsed.row_ids, parsed.col_ids))
        preds = np.einsum("ij,ij->i", model.x[entries.rows], model.y[entries.cols])
        with open(args.predictions, "w", encoding="utf-8") as fh:
            fh.write("user,item,rating,prediction\n")
            for r, c, v, p in zip(entries.rows, entries.cols, entries.values, preds):
                fh.write(f"{row_ids[r]},{col_ids[c]},{float(v)!r},{float(p)!r}\n")
    if args.output:
        _write_lines(args.output, [{"record": "evaluate", "subset": args.subset,
                                    "entries": len(entries), "rmse": rmse}])
    return EXIT_OK


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def benchmark_rows(split, settings):
    """Train every configured optimizer ``repeats`` times on ``split``.

    Repeat ``r`` uses initialisation seed ``seed + r`` for every optimizer.
    """
    optimizers = list(settings["optimizers"])
    if len(optimizers) < 2:
        raise ConfigError("benchmark needs at least two optimizers")
    repeats = int(settings["repeats"])
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    etas = settings["grid.eta"] or [settings["eta"]]
    lambdas = settings["grid.lambda"] or [settings["lambda"]]
    gridded = len(etas) > 1 or len(lambdas) > 1
    warmup()
    rows = []
    for name in optimizers:
        grid = [(None, None)] if name == "fps" else [(e, l) for e in etas for l in lambdas]
        for eta, lam in grid:
            label = name if (name == "fps" or not gridded) else f"{name}(eta={eta:g},lambda={lam:g})"
            runs = []
            for r in range(repeats):
                cfg = make_train_config(settings, optimizer=name, eta=eta, lam=lam,
                                        seed=int(settings["seed"]) + r)
                _, report = train(split, cfg)
                runs.append(report)
            rows.append({
                "record": "benchmark",
                "optimizer": label,
                "repeats": repeats,
                "best_rmse": _mean_std([rp.best_validation_rmse for rp in runs]),
                "test_rmse": _mean_std([rp.test_rmse for rp in runs]),
                "epochs_to_best": _mean_std([rp.best_epoch + 1 for rp in runs]),
                "update_secs": _mean_std([rp.update_seconds_to_best for rp in runs]),
                "total_secs": _mean_std([rp.seconds_to_best for rp in runs]),
            })
    return rows


def format_table(rows):
    header = f"{'optimizer':<28}{'best RMSE':>22}{'epochs-to-best':>20}" \
             f"{'update s':>20}{'total s':>20}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['optimizer']:<28}"
            f"{'%.4f ± %.1e' % row['best_rmse']:>22}"
            f"{'%.1f ± %.1f' % row['epochs_to_best']:>20}"
            f"{'%.3f ± %.3f' % row['update_secs']:>20}"
            f"{'%.3f ± %.3f' % row['total_secs']:>20}")
    return "\n".join(lines)


def cmd_benchmark(args):
    settings = effective_settings(args)
    _, split = _load_split(settings)
    rows = benchmark_rows(split, settings)
    print(format_table(rows))
    if args.output:
        config = {k: v for k, v in settings.items() if not k.startswith("fuzzy.")}
        _write_lines(args.output, [{"record": "config", **config}] + rows)
    return EXIT_OK


_COMMANDS = {"train": cmd_train, "evaluate": cmd_evaluate, "benchmark": cmd_benchmark}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConfigError, InvalidArgumentError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
