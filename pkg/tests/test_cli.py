import json

import pytest

from mbfcost.cli import main
from mbfcost.walk_core import build_table


@pytest.fixture
def run(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)

    def _run(*argv):
        code = main([str(a) for a in argv])
        out = capsys.readouterr()
        return code, out.out, out.err
    return _run


def test_table_build(run, tmp_path):
    code, out, _ = run("table", "build", "--seed", 1, "--len", 1024, "--output", "t.bin")
    assert code == 0 and "bytes=4128" in out
    first = (tmp_path / "t.bin").read_bytes()
    assert len(first) == 4128
    run("table", "build", "--seed", 1, "--len", 1024, "--output", "t2.bin")
    assert (tmp_path / "t2.bin").read_bytes() == first
    assert first[32:36] == build_table(1, 1024).entries[:1].tobytes()


def test_table_build_bad_len(run):
    code, _, err = run("table", "build", "--seed", 1, "--len", 1000, "--output", "t.bin")
    assert code == 2 and "power of two" in err


def test_mbound_round_trip(run, tmp_path):
    run("table", "build", "--seed", 1, "--len", 1024, "--output", "t.bin")
    assert run("challenge", "--e", 8, "--l", 16, "--nonce-seed", 3, "--output", "c.bin")[0] == 0
    assert (tmp_path / "c.bin").read_bytes()[:4] == b"MBP1"
    assert run("generate", "--challenge", "c.bin", "--table", "t.bin", "--output", "p.bin")[0] == 0
    code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table", "t.bin")
    assert code == 0 and out.strip() == "Accept"
    # same nonce seed, same challenge bytes
    run("challenge", "--e", 8, "--l", 16, "--nonce-seed", 3, "--output", "c2.bin")
    assert (tmp_path / "c2.bin").read_bytes() == (tmp_path / "c.bin").read_bytes()


def test_mbound_wrong_table_rejects(run):
    run("table", "build", "--seed", 1, "--len", 1024, "--output", "t.bin")
    run("challenge", "--e", 8, "--l", 16, "--nonce-seed", 3, "--output", "c.bin")
    run("generate", "--challenge", "c.bin", "--table", "t.bin", "--output", "p.bin")
    code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "p.bin",
                       "--table-seed", 2, "--table-len", 1024)
    assert code == 1 and out.strip() == "BadZeros"


def test_mbound_too_large(run, tmp_path):
    run("challenge", "--e", 2, "--l", 4, "--nonce-seed", 1, "--output", "c.bin")
    (tmp_path / "p.bin").write_bytes(b"MBP1" + (16).to_bytes(8, "little"))
    code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table-len", 1024)
    assert code == 1 and out.strip() == "TooLarge"


def range_setup(run, tmp_path):
    run("table", "build", "--seed", 1, "--len", 1024, "--output", "t.bin")
    run("challenge", "--scheme", "range", "--e", 9, "--m", 3, "--l", 4, "--nonce-seed", 5, "--output", "c.bin")
    assert run("generate", "--challenge", "c.bin", "--table", "t.bin", "--output", "p.bin")[0] == 0
    return (tmp_path / "p.bin").read_bytes()


def test_range_round_trip(run, tmp_path):
    data = range_setup(run, tmp_path)
    assert data[:4] == b"RGP1"
    code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table", "t.bin", "--full-audit")
    assert code == 0 and out.strip() == "Accept"
    assert run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table", "t.bin")[0] == 0


def test_range_byte_flip_fuzz(run, tmp_path):
    data = range_setup(run, tmp_path)
    reasons = set()
    for pos in range(4, len(data)):
        bad = bytearray(data)
        bad[pos] ^= 0xFF
        (tmp_path / "f.bin").write_bytes(bytes(bad))
        code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "f.bin", "--table", "t.bin",
                           "--full-audit")
        assert code == 1, pos
        assert out.strip() in {"Malformed", "BogusIndex"}, (pos, out)
        reasons.add(out.strip())
    assert reasons == {"Malformed", "BogusIndex"}


def test_range_empty_proof(run, tmp_path):
    run("challenge", "--scheme", "range", "--e", 9, "--m", 3, "--l", 4, "--nonce-seed", 5, "--output", "c.bin")
    (tmp_path / "p.bin").write_bytes(b"RGP1" + bytes(4))
    code, out, _ = run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table-len", 1024)
    assert code == 1 and out.strip() == "EmptyProof"


def test_parse_errors(run, tmp_path):
    (tmp_path / "junk.bin").write_bytes(b"XXXX1234")
    assert run("generate", "--challenge", "junk.bin", "--table-len", 1024)[0] == 2
    assert run("generate", "--challenge", "missing.bin", "--table-len", 1024)[0] == 2
    (tmp_path / "short.bin").write_bytes(b"MBP1" + bytes(5))
    assert run("generate", "--challenge", "short.bin", "--table-len", 1024)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_scheme_mismatch(run, tmp_path):
    range_setup(run, tmp_path)
    run("challenge", "--e", 4, "--l", 4, "--nonce-seed", 1, "--output", "mc.bin")
    assert run("verify", "--challenge", "mc.bin", "--proof", "p.bin", "--table", "t.bin")[0] == 2


def test_inputs_not_mutated(run, tmp_path):
    data = range_setup(run, tmp_path)
    before = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table", "t.bin")
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == before


def test_table_cache(run, tmp_path, monkeypatch):
    monkeypatch.setenv("MBF_TABLE_CACHE", str(tmp_path / "cache"))
    run("challenge", "--e", 4, "--l", 4, "--nonce-seed", 1, "--output", "c.bin")
    run("generate", "--challenge", "c.bin", "--table-seed", 7, "--table-len", 1024, "--output", "p.bin")
    assert (tmp_path / "cache" / "table-7-1024.bin").exists()
    assert run("verify", "--challenge", "c.bin", "--proof", "p.bin", "--table-seed", 7, "--table-len", 1024)[0] == 0


def test_dist(run, tmp_path):
    code, out, _ = run("dist", "--e", "6,15", "--output-dir", "data")
    assert code == 0
    for e in (6, 15):
        assert len((tmp_path / "data" / f"e{e}" / "tries.dat").read_text().splitlines()) == e + 8
    summary = json.loads((tmp_path / "data" / "e15" / "summary.json").read_text())
    assert summary["quantiles"]["0.5"] == 22713
    assert "note:" in out


def test_plan_range(run):
    code, out, _ = run("plan", "--scheme", "range", "--e", 15, "--m", 4, "--l", 2048)
    rep = json.loads(out)
    p = rep["plans"][0]
    assert code == 0 and p["expected_indices"] == 16
    assert 1.0e-7 <= p["empty_proof_prob"] <= 1.2e-7


def test_plan_mbound_with_equivalents(run):
    code, out, _ = run("plan", "--e", 15, "--l", "2^12", "--m", 4)
    plans = json.loads(out)["plans"]
    assert [p["label"] for p in plans] == ["mbound", "cost-preserving", "published"]
    assert plans[0]["expected_accesses"] == 2 ** 27


def test_adversary_early_abort(run, tmp_path):
    code, out, _ = run("adversary", "early-abort", "--e", 6, "--threshold", 64, "--n", 500,
                       "--table-len", 1024, "--output-dir", "rep")
    rep = json.loads(out)
    assert code == 0
    assert rep["closed_form"]["cost_per_delivered"] == 64
    assert rep["simulated"]["attempts"] == 500
    assert (tmp_path / "rep" / "adversary-early-abort.json").exists()
    # deterministic given the seeds
    assert json.loads(run("adversary", "early-abort", "--e", 6, "--threshold", 64, "--n", 500,
                          "--table-len", 1024)[1]) == rep


def test_adversary_other_strategies(run):
    code, out, _ = run("adversary", "perturb-retry", "--e", 5, "--bound", 4, "--n", 50, "--table-len", 1024)
    assert code == 0 and json.loads(out)["simulated"]["delivered"] == 50
    code, out, _ = run("adversary", "selective-failure", "--e", 5, "--m", 1, "--threshold", 16,
                       "--range-len", 64, "--n", 40, "--table-len", 1024)
    rep = json.loads(out)
    assert code == 0 and rep["range"]["delivered"] == 0 and rep["mbound"]["attempts"] == 40


def test_bench_runs(run):
    code, out, _ = run("bench", "--max-log2", 12, "--accesses", 4096)
    assert code == 0 and out.count("ns/access") == 2
