import importlib.util
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


def test_benchmark_quick_mode(capsys):
    spec = importlib.util.spec_from_file_location("bench_kernels", BENCH)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    rows = mod.main(["--quick", "--repeat", "1"])
    assert [r[0] for r in rows] == ["rbf_row_sums", "build_tree", "forest_apply"]
    assert all(t > 0 for _, a, b in rows for t in (a, b))
