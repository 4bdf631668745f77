"""Report writers: latency CSV, trajectory CSV, summary JSON, chain dumps.

All output is a pure function of the RunReport, and every value written is
simulated time or simulation state, so equal seeds yield byte-identical
files. Floats go through repr() via the csv/json modules, which is exact and
stable across runs.
"""
from __future__ import annotations

import csv
import json
import os

from .ledger import Ledger
from .scenario import RunReport

LATENCY_CSV = "latency.csv"
TRAJECTORY_CSV = "trajectory.csv"
SUMMARY_JSON = "summary.json"


def write_latency_csv(report: RunReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["drone_id", "topic", "t0_ns", "t1_ns", "two_way_ms"])
        for s in report.samples:
            w.writerow([s.drone_id, s.topic, s.t0_ns, s.t1_ns, repr(s.two_way_ms)])


def write_trajectory_csv(report: RunReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["drone_id", "t_ns", "x", "y", "z"])
        for did in sorted(report.traces):
            for t_ns, pos, _anchor, _target in report.traces[did]:
                w.writerow([did, t_ns, repr(pos[0]), repr(pos[1]), repr(pos[2])])


def write_summary_json(report: RunReport, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def block_line(block) -> dict:
    return {
        "number": block.number,
        "prev_hash": block.prev_hash,
        "data_hash": block.data_hash,
        "cut_reason": block.cut_reason,
        "commit_stamp_ns": block.commit_stamp,
        "txs": [tx.to_dict() for tx in block.transactions],
    }


def write_chain_dump(ledger: Ledger, channel_id: str, path: str) -> None:
    """One JSON object per line, one line per block, genesis included."""
    with open(path, "w") as fh:
        for block in ledger.blocks_of(channel_id):
            fh.write(json.dumps(block_line(block), sort_keys=True,
                                separators=(",", ":")))
            fh.write("\n")


def chain_dump_path(out_dir: str, channel_id: str) -> str:
    return os.path.join(out_dir, f"chain_{channel_id}.jsonl")


def write_all(report: RunReport, ledger: Ledger, out_dir: str) -> list[str]:
    """Write the full report set into out_dir; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, LATENCY_CSV),
             os.path.join(out_dir, TRAJECTORY_CSV),
             os.path.join(out_dir, SUMMARY_JSON)]
    write_latency_csv(report, paths[0])
    write_trajectory_csv(report, paths[1])
    write_summary_json(report, paths[2])
    for channel_id in ledger.channel_ids():
        path = chain_dump_path(out_dir, channel_id)
        write_chain_dump(ledger, channel_id, path)
        paths.append(path)
    return paths
