import importlib.util
from pathlib import Path

import pytest

from puzzle_forge.numerics import kernels

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


@pytest.mark.skipif(kernels.numba is None, reason="numba backend not active")
def test_benchmark_backends_agree(capsys):
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    bench = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(bench)
    rows = bench.main(["--size", "60", "--rays", "128", "--repeat", "1"])
    assert [r[0] for r in rows] == ["escape_potential", "newton_bundle"]
    escape, newton = rows
    assert escape[5] < 1e-10 and newton[5] < 1e-12
    assert "speedup" in capsys.readouterr().out
