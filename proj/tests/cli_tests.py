#!/usr/bin/env python3
"""Behavioral checks for the rabf CLI: exit codes, byte reproducibility,
sweep shapes, and report invariants. Usage: cli_tests.py <path-to-rabf>"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

BIN = sys.argv[1]
FAILURES = []


def run(*args, expect=0):
    proc = subprocess.run([BIN, *args], capture_output=True, text=True)
    if proc.returncode != expect:
        FAILURES.append(f"{args}: exit {proc.returncode}, expected {expect}\n"
                        f"stderr: {proc.stderr[:500]}")
    return proc


def check(cond, label):
    if cond:
        print(f"[PASS] {label}")
    else:
        print(f"[FAIL] {label}")
        FAILURES.append(label)


def parse_csv(text):
    rows = []
    header = None
    for line in text.splitlines():
        if line.startswith("#") or not line:
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append(dict(zip(header, line.split(","))))
    return rows


def main():
    tmp = Path(tempfile.mkdtemp())

    # --- byte reproducibility -------------------------------------------
    args = ["mse-min", "--devices", "200", "--selected", "5", "--antennas", "2,4",
            "--n-m", "1,10", "--trials", "60", "--seed", "7"]
    a = run(*args, "--out", str(tmp / "a.csv"))
    run(*args, "--out", str(tmp / "b.csv"))
    run(*args, "--threads", "1", "--out", str(tmp / "c.csv"))
    bytes_a = (tmp / "a.csv").read_bytes()
    check(bytes_a == (tmp / "b.csv").read_bytes(), "mse-min rerun is byte-identical")
    check(bytes_a == (tmp / "c.csv").read_bytes(),
          "mse-min output is thread-count independent")
    check(a.returncode == 0 and not a.stdout, "mse-min honors --out")

    # --- sweep shape and monotone refinement ----------------------------
    rows = parse_csv(bytes_a.decode())
    check(len(rows) == 4, "mse-min sweep emits one row per (N, n_m) cell")
    check(bytes_a.decode().startswith("# schema: rabf-mse-sweep-v1"),
          "mse-min csv carries its schema header")
    check("# config:" in bytes_a.decode(), "mse-min csv embeds its config")
    for n in ("2", "4"):
        cells = [r for r in rows if r["antennas"] == n]
        means = [float(r["mean_mse_over_sigma2"]) for r in cells]
        check(means[0] >= means[-1], f"n_m refinement improves the mean at N={n}")

    # --- flatness of the mean in N (the gain law is antenna-free) -------
    flat = run("mse-min", "--devices", "1000", "--selected", "10",
               "--antennas", "2,4,6,8", "--n-m", "1", "--trials", "1000",
               "--seed", "3", "--out", str(tmp / "flat.csv"))
    assert flat.returncode == 0
    frows = parse_csv((tmp / "flat.csv").read_text())
    fmeans = [float(r["mean_mse_over_sigma2"]) for r in frows]
    spread = (max(fmeans) - min(fmeans)) / (sum(fmeans) / len(fmeans))
    check(spread < 0.05, f"mean MSE is flat across antenna counts (spread {spread:.3f})")

    # --- max-devices sweep ----------------------------------------------
    run("max-devices", "--devices", "50,100", "--antennas", "4",
        "--x-tilde-db=-6,-2,2,6", "--n-m", "1", "--trials", "100", "--seed", "5",
        "--out", str(tmp / "cnt.csv"))
    crows = parse_csv((tmp / "cnt.csv").read_text())
    check(len(crows) == 8, "max-devices sweep emits one row per (K, cap) cell")
    for k in ("50", "100"):
        means = [float(r["mean_selected"]) for r in crows if r["devices"] == k]
        check(all(a <= b for a, b in zip(means, means[1:])),
              f"mean count grows with the cap at K={k}")
    k50 = [float(r["mean_selected"]) for r in crows if r["devices"] == "50"]
    k100 = [float(r["mean_selected"]) for r in crows if r["devices"] == "100"]
    ratio = k100[-1] / k50[-1]
    check(1.7 < ratio < 2.3, f"mean count scales with K (ratio {ratio:.2f})")

    # --- json format ------------------------------------------------------
    run("max-devices", "--devices", "30", "--x-tilde", "0.5", "--n-m", "1",
        "--trials", "50", "--seed", "5", "--format", "json",
        "--out", str(tmp / "cnt.json"))
    doc = json.loads((tmp / "cnt.json").read_text())
    check(doc["schema"] == "rabf-count-sweep-v1" and len(doc["rows"]) == 1,
          "max-devices json report carries schema and rows")
    check(doc["config"]["devices"] == [30], "json report embeds resolved config")

    # --- verify table1 -----------------------------------------------------
    t1 = run("verify", "table1", "--out", str(tmp / "table1.json"))
    tdoc = json.loads((tmp / "table1.json").read_text())
    check(tdoc["all_pass"] is True, "verify table1 passes")
    cells = tdoc["cells"]
    check(len(cells) == 18, "table1 reports all 18 theoretical cells")
    avg_status = {c["status"] for c in cells if c["metric"] == "average"}
    check(avg_status == {"match"}, "all six averages match")
    consistent = [c for c in cells if c["devices"] == 100000 and c["x_tilde"] == 0.2
                  and c["metric"] in ("min", "max")]
    check(all(c["status"] == "match" for c in consistent),
          "the consistent interval row matches")
    flagged = [c for c in cells if c["status"] == "flagged"]
    check(len(flagged) == 10 and all(c.get("matches_2sigma") for c in flagged),
          "inconsistent interval cells are flagged and traced to 2-sigma")

    # --- verify pmf at reduced scale --------------------------------------
    run("verify", "pmf", "--devices", "100", "--x-tilde", "0.2", "--trials", "2000",
        "--seed", "11", "--out", str(tmp / "pmf.json"))
    pdoc = json.loads((tmp / "pmf.json").read_text())
    check(pdoc["all_pass"] is True, "verify pmf passes at reduced scale")

    # --- verify normal at its defaults ------------------------------------
    run("verify", "normal", "--out", str(tmp / "normal.json"))
    ndoc = json.loads((tmp / "normal.json").read_text())
    dists = [c["distance"] for c in ndoc["checks"]]
    check(ndoc["monotone_decreasing"] is True and len(dists) == 4,
          "verify normal shows the convergence trend at defaults")

    # --- protocol traces ---------------------------------------------------
    run("protocol", "--problem", "mse-min", "--devices", "24", "--antennas", "4",
        "--selected", "6", "--seed", "13", "--out", str(tmp / "proto.jsonl"))
    lines = (tmp / "proto.jsonl").read_text().splitlines()
    check(len(lines) == 1 + 24 + 1 + 1, "mse-min trace has 1+K+1 messages plus summary")
    summary = json.loads(lines[-1])["summary"]
    check(summary["verdict"] == "equivalent", "protocol matches the direct algorithm")
    check(summary["payload_scalars_total"] == 2 * 4 + 24 + 1,
          "mse-min payload accounting is exact")

    run("protocol", "--problem", "max-devices", "--devices", "24", "--antennas", "4",
        "--x-tilde", "0.3", "--seed", "13", "--out", str(tmp / "proto2.jsonl"))
    lines2 = (tmp / "proto2.jsonl").read_text().splitlines()
    summary2 = json.loads(lines2[-1])["summary"]
    check(summary2["feedback_messages"] == 0, "max-devices trace has zero feedback")
    check(summary2["payload_scalars_total"] == 2 * 4 + 1,
          "max-devices payload accounting is exact")
    check(summary2["verdict"] == "equivalent", "max-devices matches the solver")

    # --- config file -------------------------------------------------------
    cfg = tmp / "sweep.cfg"
    cfg.write_text("devices=200\nselected=5\nantennas=2,4\nn-m=1,10\ntrials=60\nseed=7\n")
    run("mse-min", "--config", str(cfg), "--out", str(tmp / "d.csv"))
    check(bytes_a == (tmp / "d.csv").read_bytes(),
          "config file reproduces the flag-based run")

    # --- exit codes --------------------------------------------------------
    run("mse-min", "--devices", "0", "--selected", "1", "--trials", "5", expect=2)
    run("mse-min", "--devices", "10", "--selected", "20", "--trials", "5", expect=2)
    run("bogus-command", expect=2)
    run("verify", "cdf", "--devices", "40", "--selected", "5", "--trials", "400",
        "--ks-threshold", "0.0001", "--out", str(tmp / "fail.json"), expect=3)

    print(f"{len(FAILURES)} failure(s)")
    if FAILURES:
        for f in FAILURES:
            print(" -", f)
        sys.exit(1)


if __name__ == "__main__":
    main()
