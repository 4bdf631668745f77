"""Report files: schemas, content fidelity, and byte-level reproducibility."""
import csv
import json
from pathlib import Path

from ledgerbridge.config import default_config
from ledgerbridge.report import (chain_dump_path, write_all, write_chain_dump,
                                 write_latency_csv, write_summary_json,
                                 write_trajectory_csv)
from ledgerbridge.scenario import Scenario


def small_run(seed=42, duration_s=8.0):
    scn = Scenario(default_config(seed=seed, duration_s=duration_s))
    report = scn.run()
    return scn, report


def test_latency_csv_schema_and_rows(tmp_path):
    scn, report = small_run()
    path = tmp_path / "latency.csv"
    write_latency_csv(report, str(path))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["drone_id", "topic", "t0_ns", "t1_ns", "two_way_ms"]
    assert len(rows) == 1 + len(report.samples)
    did, topic, t0, t1, ms = rows[1]
    assert did == "drone0" and topic == "/drone0/odom"
    assert float(ms) == (int(t1) - int(t0)) / 1e6


def test_trajectory_csv_schema_and_cadence(tmp_path):
    scn, report = small_run()
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(report, str(path))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["drone_id", "t_ns", "x", "y", "z"]
    times = [int(r[1]) for r in rows[1:]]
    assert times == sorted(times)
    assert times[1] - times[0] == 10_000_000  # 10 ms dynamics step
    assert len(rows) == 1 + len(report.traces["drone0"])


def test_summary_json_sorted_and_complete(tmp_path):
    scn, report = small_run()
    path = tmp_path / "summary.json"
    write_summary_json(report, str(path))
    text = path.read_text()
    data = json.loads(text)
    assert data == json.loads(json.dumps(report.summary_dict()))
    assert text.endswith("\n")
    assert list(data) == sorted(data)


def test_chain_dump_block_fields_exact(tmp_path):
    scn, report = small_run()
    path = Path(chain_dump_path(str(tmp_path), "teleop"))
    write_chain_dump(scn.ledger, "teleop", str(path))
    lines = path.read_text().splitlines()
    blocks = [json.loads(l) for l in lines]
    assert blocks[0]["number"] == 0
    assert blocks[0]["prev_hash"] == "0" * 64
    assert blocks[0]["txs"] == []
    for b in blocks:
        assert set(b) == {"number", "prev_hash", "data_hash", "cut_reason",
                          "commit_stamp_ns", "txs"}
        for tx in b["txs"]:
            assert set(tx) == {"tx_id", "method", "key", "value_b64",
                               "creator", "client_stamp_ns"}
    assert [b["number"] for b in blocks] == list(range(len(blocks)))
    assert len(blocks) == 1 + report.blocks["teleop"]["count"]


def test_chain_dump_links_hashes(tmp_path):
    scn, _ = small_run()
    path = Path(chain_dump_path(str(tmp_path), "teleop"))
    write_chain_dump(scn.ledger, "teleop", str(path))
    blocks = [json.loads(l) for l in path.read_text().splitlines()]
    tips = {b["number"]: b for b in blocks}
    from ledgerbridge.encoding import canon, digest
    for b in blocks[1:]:
        prev = tips[b["number"] - 1]
        assert b["prev_hash"] == digest(canon([prev["number"], prev["prev_hash"],
                                               prev["data_hash"]]))


def test_write_all_produces_expected_set(tmp_path):
    scn, report = small_run()
    out = tmp_path / "nested" / "out"
    paths = write_all(report, scn.ledger, str(out))
    names = sorted(p.split("/")[-1] for p in paths)
    assert names == ["chain_teleop.jsonl", "latency.csv", "summary.json",
                     "trajectory.csv"]
    for p in paths:
        assert open(p).read()


def test_equal_seeds_write_byte_identical_files(tmp_path):
    outs = []
    for name in ("a", "b"):
        scn, report = small_run(seed=11)
        out = tmp_path / name
        write_all(report, scn.ledger, str(out))
        outs.append(out)
    for fname in ("latency.csv", "trajectory.csv", "chain_teleop.jsonl"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_different_seed_changes_latency_bytes(tmp_path):
    blobs = []
    for seed in (1, 2):
        scn, report = small_run(seed=seed)
        out = tmp_path / str(seed)
        write_all(report, scn.ledger, str(out))
        blobs.append((out / "latency.csv").read_bytes())
    assert blobs[0] != blobs[1]
