import json

from mdvnizk import bench, kernels


def test_bench_rows_and_agreement():
    rows = bench.run(repeat=1, lanes=64, lam=16)
    assert [r["kernel"] for r in rows] == ["eval_plain", "mpc_eval"]
    for r in rows:
        assert r["numpy_s"] > 0 and r["gates"] > 0
        if kernels.HAVE_NUMBA:
            assert r["agree"] is True
            assert r["numba_s"] > 0


def test_bench_json_output(capsys):
    assert bench.main(["--repeat", "1", "--json"]) == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert len(lines) == 2 and {"kernel", "numpy_s"} <= set(lines[0])
