import json

import pytest

from fpslfa import (DatasetFormat, generate_synthetic, init_factors, load_model, parse_dataset,
                    save_model, write_dataset)
from fpslfa.cli import (EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_OK, EXIT_PARSE, main,
                        parse_config_text, strip_timing)
from fpslfa.errors import ConfigError


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    matrix, _ = generate_synthetic(40, 30, 2, 0.4, noise_std=0.05, seed=21)
    path = tmp_path_factory.mktemp("data") / "ratings.csv"
    write_dataset(matrix, path)
    return path


def read_records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def base_args(data_file, *extra):
    return ["--data", str(data_file), "--format", "csv", "--f", "2", "--max-epochs", "40",
            *extra]


def test_train_writes_report_and_snapshot(tmp_path, data_file):
    out = tmp_path / "run.jsonl"
    rc = main(["train", *base_args(data_file, "--optimizer", "fps", "--output", str(out))])
    assert rc == EXIT_OK
    records = read_records(out)
    assert records[0]["record"] == "config" and records[0]["optimizer"] == "fps"
    epochs = [r for r in records if r["record"] == "epoch"]
    assert set(epochs[0]) == {"record", "epoch", "val_rmse", "a_t", "phi", "kp", "ki", "kd",
                              "update_secs", "eval_secs"}
    assert epochs[0]["a_t"] is None
    summary = records[-1]
    assert summary["record"] == "summary" and summary["status"] == "ok"
    assert summary["epochs"] == len(epochs)
    model = load_model(out.with_suffix(".model"))
    assert model.f == 2
    assert out.with_suffix(".ids.json").exists()


def test_config_echo_uses_paper_defaults(tmp_path, data_file):
    out = tmp_path / "run.jsonl"
    main(["train", "--data", str(data_file), "--format", "csv", "--max-epochs", "2",
          "--output", str(out)])
    echo = read_records(out)[0]
    assert echo["optimizer"] == "fps" and echo["f"] == 20
    assert (echo["phi"], echo["kp"], echo["ki"], echo["kd"]) == (0.00012, 0.005, 1e-6, 2e-4)
    assert echo["fuzzy.a_points"] == [0.0001, 0.0002, 0.0003, 0.0004, 0.0005]


def test_config_precedence(tmp_path, data_file):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text("# comment\noptimizer = sgd\neta = 0.02\nlambda = 0.01\nseed = 3\n")
    out = tmp_path / "run.jsonl"
    main(["train", *base_args(data_file, "--config", str(cfg), "--eta", "0.03",
                              "--output", str(out))])
    echo = read_records(out)[0]
    assert echo["optimizer"] == "sgd"
    assert echo["eta"] == 0.03 and echo["lambda"] == 0.01 and echo["seed"] == 3


def test_config_file_fuzzy_table(tmp_path, data_file):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text("fuzzy.a_points = [0.001, 0.002, 0.003, 0.004, 0.005]\n")
    out = tmp_path / "run.jsonl"
    assert main(["train", *base_args(data_file, "--config", str(cfg),
                                     "--output", str(out))]) == EXIT_OK
    assert read_records(out)[0]["fuzzy.a_points"][0] == 0.001


def test_broken_fuzzy_chain_is_config_error(tmp_path, data_file, capsys):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text("fuzzy.i_points = [1e-7, 2e-7, 3e-7, 4e-7, 5e-7]\n")
    rc = main(["train", *base_args(data_file, "--config", str(cfg),
                                   "--output", str(tmp_path / "r.jsonl"))])
    assert rc == EXIT_CONFIG
    assert "i_points" in capsys.readouterr().err


def test_parse_config_text():
    got = parse_config_text("optimizer = fps\nshuffle = true\nf = 8\nmin_delta = 1e-4\n"
                            "optimizers = [\"sgd\", \"fps\"]\n")
    assert got == {"optimizer": "fps", "shuffle": True, "f": 8, "min_delta": 1e-4,
                   "optimizers": ["sgd", "fps"]}
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("colour = blue\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("just words\n")


def test_missing_data_file_is_parse_error(tmp_path, capsys):
    rc = main(["train", "--data", str(tmp_path / "absent.dat"), "--output",
               str(tmp_path / "r.jsonl")])
    assert rc == EXIT_PARSE
    assert "absent.dat" in capsys.readouterr().err


def test_divergence_exit_code(tmp_path, data_file):
    out = tmp_path / "r.jsonl"
    rc = main(["train", *base_args(data_file, "--optimizer", "sgd", "--eta", "5",
                                   "--lambda", "0", "--output", str(out))])
    assert rc == EXIT_DIVERGENCE
    assert read_records(out)[-1]["status"] == "diverged"


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["train", "--optimizer", "adam", "--data", "x"])
    assert info.value.code == EXIT_CONFIG


def test_pid_unit_gain_matches_sgd_end_to_end(tmp_path, data_file):
    a, b = tmp_path / "pid.jsonl", tmp_path / "sgd.jsonl"
    main(["train", *base_args(data_file, "--optimizer", "pid", "--kp", "1", "--ki", "0",
                              "--kd", "0", "--seed", "7", "--output", str(a))])
    main(["train", *base_args(data_file, "--optimizer", "sgd", "--seed", "7",
                              "--output", str(b))])
    ra, rb = read_records(a), read_records(b)
    assert ra[-1]["best_val_rmse"] == rb[-1]["best_val_rmse"]
    assert [r["val_rmse"] for r in ra[1:-1]] == [r["val_rmse"] for r in rb[1:-1]]


def test_evaluate_after_exact_fit(tmp_path):
    matrix, _ = generate_synthetic(30, 20, 2, 1.0, noise_std=0.0, seed=2)
    data = tmp_path / "exact.csv"
    write_dataset(matrix, data)
    out = tmp_path / "run.jsonl"
    assert main(["train", "--data", str(data), "--format", "csv", "--optimizer", "sgd",
                 "--f", "2", "--eta", "0.05", "--lambda", "0", "--max-epochs", "2000",
                 "--min-delta", "0", "--patience", "20", "--output", str(out)]) == EXIT_OK
    metric = tmp_path / "eval.jsonl"
    preds = tmp_path / "preds.csv"
    rc = main(["evaluate", "--data", str(data), "--format", "csv", "--model",
               str(out.with_suffix(".model")), "--subset", "train", "--output", str(metric),
               "--predictions", str(preds)])
    assert rc == EXIT_OK
    assert read_records(metric)[0]["rmse"] < 1e-2
    lines = preds.read_text().splitlines()
    assert lines[0] == "user,item,rating,prediction" and len(lines) == 1 + 420


def test_evaluate_dimension_mismatch(tmp_path, data_file):
    out = tmp_path / "run.jsonl"
    main(["train", *base_args(data_file, "--output", str(out))])
    other, _ = generate_synthetic(10, 10, 1, 0.5, seed=1)
    other_path = tmp_path / "other.csv"
    write_dataset(other, other_path)
    rc = main(["evaluate", "--data", str(other_path), "--format", "csv",
               "--model", str(out.with_suffix(".model"))])
    assert rc == EXIT_CONFIG


def test_evaluate_empty_selection(tmp_path):
    tiny = tmp_path / "tiny.dat"
    tiny.write_text("1::1::3\n1::2::4\n2::1::5\n")
    parsed = parse_dataset(tiny, DatasetFormat("movielens_dat"))
    save_model(init_factors(parsed.num_rows, parsed.num_cols, 2, 0), tmp_path / "m.model")
    rc = main(["evaluate", "--data", str(tiny), "--model", str(tmp_path / "m.model"),
               "--subset", "test"])
    assert rc == EXIT_CONFIG


def test_benchmark_table(tmp_path, data_file, capsys):
    out = tmp_path / "bench.jsonl"
    rc = main(["benchmark", *base_args(data_file, "--optimizers", "sgd,pid,fps",
                                       "--repeats", "2", "--output", str(out))])
    assert rc == EXIT_OK
    rows = [r for r in read_records(out) if r["record"] == "benchmark"]
    assert [r["optimizer"] for r in rows] == ["sgd", "pid", "fps"]
    for r in rows:
        assert set(r) >= {"best_rmse", "epochs_to_best", "update_secs", "total_secs"}
        assert len(r["best_rmse"]) == 2
    table = capsys.readouterr().out
    assert "epochs-to-best" in table and "±" in table


def test_benchmark_single_repeat_has_zero_spread(tmp_path, data_file):
    out = tmp_path / "bench.jsonl"
    main(["benchmark", *base_args(data_file, "--optimizers", "sgd,fps", "--repeats", "1",
                                  "--output", str(out))])
    for r in read_records(out)[1:]:
        assert r["best_rmse"][1] == 0.0 and r["epochs_to_best"][1] == 0.0
        assert r["total_secs"][1] == 0.0


def test_benchmark_grid(tmp_path, data_file):
    out = tmp_path / "bench.jsonl"
    main(["benchmark", *base_args(data_file, "--optimizers", "sgd,fps", "--repeats", "1",
                                  "--eta-grid", "0.005,0.01", "--output", str(out))])
    names = [r["optimizer"] for r in read_records(out)[1:]]
    assert names == ["sgd(eta=0.005,lambda=0.03)", "sgd(eta=0.01,lambda=0.03)", "fps"]


def test_benchmark_needs_two_optimizers(data_file):
    assert main(["benchmark", *base_args(data_file, "--optimizers", "fps")]) == EXIT_CONFIG


def test_strip_timing():
    assert strip_timing([{"a": 1, "update_secs": 2.0, "eval_secs": 1}]) == [{"a": 1}]
