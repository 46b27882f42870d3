"""Drive the command-line interface: train, evaluate, benchmark.

Equivalent shell commands are printed before each step. Run with
``python demos/05_command_line.py``.
"""
import json
import tempfile
from pathlib import Path

from fpslfa import generate_synthetic, write_dataset
from fpslfa.cli import main

work = Path(tempfile.mkdtemp(prefix="fpslfa-demo-"))
matrix, _ = generate_synthetic(200, 150, 3, 0.1, noise_std=0.1, seed=1)
data = work / "ratings.csv"
write_dataset(matrix, data)

steps = [
    ["train", "--data", str(data), "--format", "csv", "--optimizer", "fps", "--f", "3",
     "--output", str(work / "fps.jsonl")],
    ["evaluate", "--data", str(data), "--format", "csv", "--model", str(work / "fps.model")],
    ["benchmark", "--data", str(data), "--format", "csv", "--f", "3", "--repeats", "2",
     "--optimizers", "sgd,fps"],
]
for argv in steps:
    print("$ fpslfa " + " ".join(argv))
    print("exit code", main(argv))
    print()

records = [json.loads(line) for line in (work / "fps.jsonl").read_text().splitlines()]
print("first epoch record:", records[1])
print("summary:", records[-1])
