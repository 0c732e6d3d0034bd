"""The experiment harness end to end, in a temporary directory.

Generates a small synthetic suite, benchmarks the three methods, runs the
seven-component ablation, compares constructive and destructive bounds,
and sweeps the exchange policy over a fixture where handovers matter.
"""

import tempfile
from pathlib import Path

from drsync import DbmhConfig, GeneratorConfig, save_instance
from drsync.fixtures import exchange_fixture, gap_fixture
from drsync.harness import (
    cmd_ablate,
    cmd_bench,
    cmd_compare_bounds,
    cmd_generate,
    cmd_sweep,
)

work = Path(tempfile.mkdtemp(prefix="drsync-demo-"))
suite = work / "suite"
cmd_generate(str(suite), GeneratorConfig(n_lines=2, rides_per_line=2,
                                         segments_per_ride=2), seed=11, count=4)
save_instance(gap_fixture(2), str(suite / "gap2.json"))
save_instance(exchange_fixture(), str(suite / "exchange.json"))
config = DbmhConfig(seed=0)

print("bench (mip | ch_ls | dbmh):")
cmd_bench(str(suite), str(work / "bench"), config, runs=2)
print((work / "bench" / "bench_aggregate.csv").read_text())

print("ablation variants 0-6:")
cmd_ablate(str(suite), str(work / "ablate"), config, runs=1)
print((work / "ablate" / "ablation_aggregate.csv").read_text())

print("constructive vs destructive bounds:")
cmd_compare_bounds(str(suite), str(work / "bounds"), config)
print((work / "bounds" / "bounds.csv").read_text())

print("exchange-policy sweep:")
cmd_sweep(str(suite), str(work / "sweep"), config, "exchange_policy")
print((work / "sweep" / "sweep_exchange_policy.csv").read_text())

print(f"all outputs under {work}")
