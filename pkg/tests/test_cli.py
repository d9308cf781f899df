import json
import subprocess
import sys

import numpy as np
import pytest

from ksumindex import deserialize, oracle_query
from ksumindex.cli import main
from ksumindex.inverter import ChainTable
from ksumindex.sumfn import enumerate_sumset, read_instance, write_instance, Instance
from ksumindex.universe import P


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def built(tmp_path, capsys):
    inst_path, idx_path = tmp_path / "i.txt", tmp_path / "i.idx"
    assert run(capsys, "gen", "--n", 16, "--k", 3, "--seed", 3, "--out", inst_path)[0] == 0
    assert run(capsys, "build", inst_path, "--out", idx_path)[0] == 0
    return inst_path, idx_path


def test_gen_small_and_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run(capsys, "gen", "--n", 4, "--k", 3, "--seed", 7, "--out", a)
    run(capsys, "gen", "--n", 4, "--k", 3, "--seed", 7, "--out", b)
    lines = a.read_text().splitlines()
    assert a.read_text() == b.read_text()
    assert lines[0] == f"4 3 {P}"
    assert [len(line.split()) for line in lines[1:]] == [4, 4]


def test_gen_minimal_arity_and_roundtrip(tmp_path, capsys):
    path = tmp_path / "one.txt"
    run(capsys, "gen", "--n", 1, "--k", 2, "--seed", 0, "--out", path)
    inst = read_instance(path)
    assert (inst.n, inst.k) == (1, 2)
    _, out, _ = run(capsys, "gen", "--n", 1, "--k", 2, "--seed", 0)
    assert out == path.read_text()


def test_build_trivial_instance(tmp_path, capsys):
    inst_path, idx_path = tmp_path / "t.txt", tmp_path / "t.idx"
    write_instance(Instance.from_lists([[5], [7]]), inst_path)
    code, out, _ = run(capsys, "build", inst_path, "--out", idx_path, "--delta", 0.5)
    summary = json.loads(out)
    assert code == 0
    assert set(summary) == {"stored_words", "retries", "L", "seconds"}
    assert summary["stored_words"] < 100
    assert run(capsys, "query", idx_path, 12, 13)[1].splitlines() == ["yes 0 0 steps=1", "no steps=2"]


def test_build_same_seed_identical_files(tmp_path, capsys, built):
    inst_path, idx_path = built
    other = tmp_path / "again.idx"
    run(capsys, "build", inst_path, "--out", other)
    assert other.read_bytes() == idx_path.read_bytes()


def test_two_seeds_differ_and_both_verify(tmp_path, capsys):
    inst_path = tmp_path / "big.txt"
    run(capsys, "gen", "--n", 256, "--k", 3, "--seed", 1, "--out", inst_path)
    outs = []
    for seed in (1, 2):
        idx_path = tmp_path / f"s{seed}.idx"
        code, out, _ = run(capsys, "build", inst_path, "--seed", seed, "--out", idx_path)
        assert code == 0
        outs.append(idx_path.read_bytes())
        assert run(capsys, "verify", idx_path, inst_path, "--mode", "sampled:200")[0] == 0
    assert outs[0] != outs[1]


def test_batch_query_matches_oracle(tmp_path, capsys, built):
    inst_path, idx_path = built
    inst = read_instance(inst_path)
    sums = enumerate_sumset(inst).sums.tolist()
    queries = tmp_path / "q.txt"
    queries.write_text("\n".join(map(str, sums)) + "\n")
    oracle = tmp_path / "oracle.txt"
    oracle.write_text("".join("yes\n" if oracle_query(inst, c) else "no\n" for c in sums))
    code, out, _ = run(capsys, "query", idx_path, "--file", queries)
    assert code == 0
    answers = [line.split()[0] for line in out.splitlines()]
    assert answers == oracle.read_text().split() == ["yes"] * len(sums)
    for line, c in zip(out.splitlines(), sums):
        witness = tuple(int(tok) for tok in line.split()[1:3])
        assert sum(int(lst[i]) for lst, i in zip(inst.lists, witness)) % P == c


def test_malformed_query_lines_reported(tmp_path, capsys, built):
    _, idx_path = built
    queries = tmp_path / "bad.txt"
    queries.write_text(f"12\nabc\n\n{P}\n-4\n")
    code, out, err = run(capsys, "query", idx_path, "--file", queries)
    assert code == 2
    assert len(out.splitlines()) == 1
    assert [line.split(":")[1] for line in err.splitlines()] == ["2", "4", "5"]


def test_verify_full_passes(capsys, built):
    inst_path, idx_path = built
    code, out, _ = run(capsys, "verify", idx_path, inst_path)
    assert code == 0 and out.startswith("pass")


def _zero_one_entry(idx):
    """Zero the first endpoint entry whose loss breaks verification."""
    for ell, inv in enumerate(idx.inverters):
        for ti, tb in enumerate(inv.tables):
            for e in range(len(tb)):
                ends, starts = tb.ends.copy(), tb.starts.copy()
                ends[e] = starts[e] = 0
                tables = list(inv.tables)
                tables[ti] = ChainTable(tb.rerandomizer, ends, starts)
                invs = list(idx.inverters)
                invs[ell] = type(inv)(inv.params, tuple(tables), inv.heavy_keys, inv.heavy_vals)
                broken = idx.with_inverters(invs)
                if not broken.verify():
                    return broken
    raise AssertionError("no single entry is load-bearing")


def test_verify_reports_zeroed_entry(tmp_path, capsys, built):
    inst_path, idx_path = built
    broken = _zero_one_entry(deserialize(idx_path.read_bytes()))
    bad_path = tmp_path / "broken.idx"
    bad_path.write_bytes(broken.serialize())
    code, out, _ = run(capsys, "verify", bad_path, inst_path)
    assert code == 1
    missed = [int(line.split("=")[1]) for line in out.splitlines() if line.startswith("missed")]
    assert missed == broken.failures()
    assert out.splitlines()[-1].startswith("fail")


def test_fingerprint_mismatch(tmp_path, capsys, built):
    _, idx_path = built
    other = tmp_path / "other.txt"
    run(capsys, "gen", "--n", 16, "--k", 3, "--seed", 4, "--out", other)
    code, _, err = run(capsys, "verify", idx_path, other)
    assert code == 2 and "fingerprint" in err


@pytest.mark.parametrize("argv", [
    ["verify", "x.idx", "x.txt", "--mode", "sampled:zero"],
    ["gen"],
    ["build", "x.txt", "--delta", "1.5", "--out", "y"],
    ["bench-scaling", "--grid", "4,8,16"],
    ["nosuchcommand"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    if argv[0] == "bench-scaling":
        assert "insufficient points" in err


def test_io_errors(tmp_path, capsys, built):
    inst_path, _ = built
    assert run(capsys, "query", tmp_path / "missing.idx", 5)[0] == 3
    code, _, err = run(capsys, "build", inst_path, "--out", tmp_path / "no" / "dir" / "x.idx")
    assert code == 3 and "no/dir" in err


def test_bad_instance_file(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("2 3 5\n1 2\n3 4\n")
    code, _, err = run(capsys, "build", path, "--out", tmp_path / "x.idx")
    assert code == 2 and "line 1" in err


def test_bench_scaling_writes_csv(tmp_path, capsys):
    out_csv = tmp_path / "s.csv"
    code, out, _ = run(capsys, "bench-scaling", "--grid", "4,8,16,32", "--seeds", "0",
                       "--queries", 10, "--mode", "random", "--out", out_csv)
    summary = json.loads(out)
    assert code == 0
    assert summary["rows"] == 4 and "fitted_space_slope" in summary
    assert len(out_csv.read_text().splitlines()) == 5


def test_module_entry_point(built):
    inst_path, idx_path = built
    proc = subprocess.run([sys.executable, "-m", "ksumindex", "verify", str(idx_path),
                           str(inst_path), "--mode", "sampled:20"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "pass" in proc.stdout


@pytest.fixture(scope="module")
def large_index(tmp_path_factory):
    from ksumindex import preprocess
    from ksumindex.bench import make_instance

    root = tmp_path_factory.mktemp("large")
    inst = make_instance(1024, 3, 0)
    write_instance(inst, root / "i.txt")
    (root / "i.idx").write_bytes(preprocess(inst, 0.75, "random", seed=0).serialize())
    return root / "i.txt", root / "i.idx"


def test_sampled_verify_at_1024_is_quick(capsys, large_index):
    import time

    inst_path, idx_path = large_index
    start = time.perf_counter()
    code, out, _ = run(capsys, "verify", idx_path, inst_path, "--mode", "sampled:1000")
    elapsed = time.perf_counter() - start
    assert code == 0 and out.startswith("pass checked=2000")
    assert elapsed < 30
