"""Compare SGD, PID-SGD and fuzzy-PID SGD on one split, Table IV style.

Run with ``python demos/04_compare_optimizers.py``.
"""
from fpslfa import TrainConfig, generate_synthetic, split_dataset, train
from fpslfa.cli import DEFAULTS, benchmark_rows, format_table

matrix, _ = generate_synthetic(500, 300, rank=5, density=0.05, noise_std=0.1, seed=0)
split = split_dataset(matrix, split_seed=0)

settings = dict(DEFAULTS, f=5, repeats=3, optimizers=["sgd", "pid", "fps"])
rows = benchmark_rows(split, settings)
print(format_table(rows))

# Epochs to the first plateau are a fairer speed measure than epochs to the
# very best value when some runs find a late second descent.
for kind in ("sgd", "fps"):
    _, report = train(split, TrainConfig(optimizer_kind=kind, f=5, seed=1))
    print(f"{kind}: within 5% of best after {report.epochs_to_within(1.05)} epochs, "
          f"best {report.best_validation_rmse:.4f} at epoch {report.best_epoch}")
