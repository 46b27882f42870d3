"""Train the fuzzy-PID optimizer on a synthetic low-rank matrix.

Run with ``python demos/03_train_synthetic.py``.
"""
from fpslfa import TrainConfig, generate_synthetic, split_dataset, train

matrix, rank = generate_synthetic(500, 300, rank=5, density=0.05, noise_std=0.1, seed=0)
print(f"{matrix.num_rows}x{matrix.num_cols} matrix, {len(matrix)} known entries "
      f"({matrix.density:.1%} dense), true rank {rank}")

split = split_dataset(matrix, split_seed=0)
print(f"train/validation/test = {len(split.train)}/{len(split.validation)}/{len(split.test)}")

model, report = train(split, TrainConfig(optimizer_kind="fps", f=5, seed=0))

print(f"{'epoch':>5} {'val RMSE':>9} {'A^t':>10} {'phi':>9} {'kp':>9}")
for m in report.per_epoch[::25]:
    a_t = "" if m.a_t is None else f"{m.a_t:10.2e}"
    print(f"{m.epoch:5d} {m.validation_rmse:9.4f} {a_t:>10} {m.adapted.phi:9.2e} "
          f"{m.adapted.gains.kp:9.2e}")
print(f"best validation RMSE {report.best_validation_rmse:.4f} at epoch {report.best_epoch}")
print(f"test RMSE of the best snapshot {report.test_rmse:.4f}")
print(f"{report.update_seconds:.3f}s updating, {report.eval_seconds:.3f}s evaluating")
