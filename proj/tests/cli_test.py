"""End-to-end checks of the wearsense executable.

Usage: cli_test.py <path-to-wearsense> <case> <scratch-dir>
"""

import json
import os
import shutil
import struct
import subprocess
import sys

BIN, CASE, SCRATCH = sys.argv[1], sys.argv[2], sys.argv[3]
SCENARIOS = ["my-seat", "free-seat", "optimized-advertisement", "people-flow", "smart-buildings"]


def run(*args):
    return subprocess.run([BIN, *args], capture_output=True, text=True)


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)


def path(name):
    return os.path.join(SCRATCH, name)


def probe_frame(mac, seq):
    header = bytes([0x40, 0x00, 0x00, 0x00]) + b"\xff" * 6 + mac + b"\xff" * 6
    return header + struct.pack("<H", seq << 4) + bytes([0x00, 0x00, 0x01, 0x04, 0x02, 0x04, 0x0B, 0x16])


def radiotap(rssi):
    return bytes([0x00, 0x00, 0x09, 0x00, 0x20, 0x00, 0x00, 0x00]) + struct.pack("<b", rssi)


def pcap(records, network=127):
    out = struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, network)
    for ts_sec, payload in records:
        out += struct.pack("<IIII", ts_sec, 0, len(payload), len(payload)) + payload
    return out


def write(name, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path(name), mode) as f:
        f.write(data)
    return path(name)


def sensors_file():
    return write("sensors.jsonl", '{"sensor_id": "s1", "zone_id": "hall"}\n')


def three_probe_capture():
    macs = [bytes([0x02, 0, 0, 0, 0, i]) for i in (1, 2, 1)]
    return write("three.pcap", pcap([(i * 30, radiotap(-50) + probe_frame(m, i)) for i, m in enumerate(macs)]))


def read_jsonl(p):
    with open(p) as f:
        return [json.loads(line) for line in f if line.strip()]


def dir_contents(d):
    out = {}
    for name in sorted(os.listdir(d)):
        with open(os.path.join(d, name), "rb") as f:
            out[name] = f.read()
    return out


def case_parse_three_probes():
    out = path("sightings.jsonl")
    r = run("parse", "--in", three_probe_capture(), "--sensors", sensors_file(), "--sensor-id", "s1", "--out", out)
    check(r.returncode == 0, f"exit {r.returncode}: {r.stderr}")
    check("frames=3 sightings=3 dropped=0" in r.stdout, r.stdout)
    rows = read_jsonl(out)
    check(len(rows) == 3, f"{len(rows)} sightings")
    check(rows[0]["device_id"] == "02:00:00:00:00:01" and rows[0]["rssi_dbm"] == -50, rows[0])
    check(rows[1]["ts_micro"] == 30_000_000, rows[1])


def case_parse_hash_ids():
    out = path("hashed.jsonl")
    r = run("parse", "--in", three_probe_capture(), "--sensors", sensors_file(), "--sensor-id", "s1",
            "--hash-ids", "--salt", "00ff10", "--out", out)
    check(r.returncode == 0, r.stderr)
    ids = [row["device_id"] for row in read_jsonl(out)]
    check(all(len(i) == 32 and all(c in "0123456789abcdef" for c in i) for i in ids), ids)
    check(ids[0] == ids[2] and ids[0] != ids[1], ids)


def case_parse_bad_magic():
    out = path("never.jsonl")
    write("never.jsonl", "stale\n")
    r = run("parse", "--in", write("junk.pcap", b"not a capture file at all"), "--sensors", sensors_file(),
            "--sensor-id", "s1", "--out", out)
    check(r.returncode == 1, f"exit {r.returncode}")
    check("BadMagic" in r.stderr, r.stderr)
    check(not os.path.exists(out), "partial output left behind")


def case_parse_truncated():
    data = open(three_probe_capture(), "rb").read()[:-5]
    out = path("cut.jsonl")
    r = run("parse", "--in", write("cut.pcap", data), "--sensors", sensors_file(), "--sensor-id", "s1", "--out", out)
    check(r.returncode == 1, f"exit {r.returncode}")
    check("Truncated" in r.stderr, r.stderr)
    check(not os.path.exists(out), "partial output left behind")


def case_parse_hash_without_salt():
    r = run("parse", "--in", three_probe_capture(), "--sensors", sensors_file(), "--sensor-id", "s1",
            "--hash-ids", "--out", path("x.jsonl"))
    check(r.returncode == 2, f"exit {r.returncode}")


def case_parse_unknown_sensor():
    r = run("parse", "--in", three_probe_capture(), "--sensors", sensors_file(), "--sensor-id", "s9",
            "--out", path("x.jsonl"))
    check(r.returncode == 2, f"exit {r.returncode}")


def case_simulate_deterministic():
    a, b = path("run-a"), path("run-b")
    for d in (a, b):
        r = run("simulate", "--scenario", "people-flow", "--seed", "42", "--out", d)
        check(r.returncode == 0, r.stderr)
    ca, cb = dir_contents(a), dir_contents(b)
    check(ca == cb, "directory contents differ")
    for name in ("sightings.jsonl", "sensors.jsonl", "ground_truth.json", "trace.jsonl", "actions.jsonl",
                 "rules.json", "summary.json"):
        check(name in ca, f"missing {name}")
    check(sum(n.endswith(".pcap") for n in ca) == 4, list(ca))


def case_simulate_my_seat_summary():
    d = path("my-seat")
    r = run("simulate", "--scenario", "my-seat", "--seed", "1", "--out", d)
    check(r.returncode == 0, r.stderr)
    summary = json.load(open(os.path.join(d, "summary.json")))
    check(summary["label"] == "tag:active; interaction:direct; feedback:navigation", summary)
    actions = read_jsonl(os.path.join(d, "actions.jsonl"))
    check(len(actions) == 1 and actions[0]["kind"] == "navigation", actions)


def case_simulate_unknown():
    r = run("simulate", "--scenario", "no-such-place", "--seed", "1", "--out", path("u"))
    check(r.returncode == 2, f"exit {r.returncode}")


def case_run_scenario_all():
    for name in SCENARIOS:
        r = run("run-scenario", "--scenario", name, "--seed", "1")
        check(r.returncode == 0, f"{name}: exit {r.returncode}\n{r.stdout}")
        check("expected:" in r.stdout and "actual:" in r.stdout, r.stdout)


def case_run_scenario_mismatch():
    r = run("run-scenario", "--scenario", "people-flow", "--seed", "1",
            "--expect", "tag:active; interaction:direct; feedback:navigation")
    check(r.returncode == 3, f"exit {r.returncode}")


def case_run_scenario_seed_sweep():
    for seed in range(1, 101):
        r = run("run-scenario", "--scenario", "people-flow", "--seed", str(seed))
        check(r.returncode == 0, f"seed {seed}: {r.stdout}")


def two_device_trace():
    rows = []
    for i in range(10):
        for dev in ("aa:00:00:00:00:01", "aa:00:00:00:00:02"):
            rows.append({"device_id": dev, "sensor_id": "s1", "ts_micro": i * 30_000_000, "rssi_dbm": -50,
                         "kind": "wifi_probe", "attrs": None})
    return write("two.jsonl", "".join(json.dumps(r) + "\n" for r in rows))


def case_analyze_unique():
    r = run("analyze", "--in", two_device_trace(), "--report", "unique", "--from", "0", "--to", "3600")
    check(r.returncode == 0, r.stderr)
    check(r.stdout.strip() == "2", r.stdout)
    r = run("analyze", "--in", two_device_trace(), "--report", "unique", "--from", "0", "--to", "3600",
            "--format", "machine")
    check(json.loads(r.stdout)["count"] == 2, r.stdout)


def case_analyze_flow_single_zone():
    r = run("analyze", "--in", two_device_trace(), "--report", "flow", "--format", "machine")
    check(r.returncode == 0, r.stderr)
    rows = [json.loads(line) for line in r.stdout.splitlines() if line.strip()]
    check(all(row["count"] == 0 for row in rows), rows)


def case_analyze_missing_flags():
    r = run("analyze", "--in", two_device_trace(), "--report", "occupancy")
    check(r.returncode == 2, f"occupancy without zone: exit {r.returncode}")
    r = run("analyze", "--in", two_device_trace(), "--report", "unique")
    check(r.returncode == 2, f"unique without window: exit {r.returncode}")
    r = run("analyze", "--in", two_device_trace(), "--report", "sideways")
    check(r.returncode == 2, f"unknown report: exit {r.returncode}")


def case_analyze_occupancy_and_dwell():
    r = run("analyze", "--in", two_device_trace(), "--report", "occupancy", "--zone", "s1", "--bucket", "60",
            "--format", "machine")
    check(r.returncode == 0, r.stderr)
    rows = [json.loads(line) for line in r.stdout.splitlines()]
    check([row["devices"] for row in rows] == [2, 2, 2, 2, 2], rows)
    r = run("analyze", "--in", two_device_trace(), "--report", "dwell", "--format", "machine")
    row = json.loads(r.stdout)
    check(row["count"] == 2 and row["total_micro"] == 2 * 270_000_000, row)


def case_parse_then_analyze_matches_simulation():
    d = path("pf")
    r = run("simulate", "--scenario", "people-flow", "--seed", "3", "--out", d)
    check(r.returncode == 0, r.stderr)
    sensors = os.path.join(d, "sensors.jsonl")
    merged = []
    for entry in read_jsonl(sensors):
        sid = entry["sensor_id"]
        out = path(f"parsed-{sid}.jsonl")
        r = run("parse", "--in", os.path.join(d, f"capture-{sid}.pcap"), "--sensors", sensors, "--sensor-id", sid,
                "--out", out)
        check(r.returncode == 0, r.stderr)
        merged += open(out).read().splitlines(keepends=True)
    parsed = write("parsed.jsonl", "".join(merged))
    check(sorted(map(json.loads, merged), key=json.dumps) ==
          sorted(read_jsonl(os.path.join(d, "sightings.jsonl")), key=json.dumps), "sightings differ")
    for report in (["--report", "flow"], ["--report", "dwell"], ["--report", "occupancy", "--zone", "fashion"]):
        a = run("analyze", "--in", parsed, "--sensors", sensors, *report, "--format", "machine")
        b = run("analyze", "--in", os.path.join(d, "sightings.jsonl"), "--sensors", sensors, *report,
                "--format", "machine")
        check(a.returncode == 0 and a.stdout == b.stdout, f"{report}: {a.stderr}")


def spec_file(name, phases):
    return write(name, json.dumps({"name": name, "phases": phases}))


def case_classify_smart_buildings():
    f = spec_file("sb.json", [
        {"shares_application_info": False, "interaction": "indirect", "feedback_kinds": ["observation"]},
        {"shares_application_info": False, "interaction": "direct", "feedback_kinds": ["trigger"]},
    ])
    r = run("classify", "--spec", f)
    check(r.returncode == 0, r.stderr)
    check(r.stdout.strip() == "tag:passive; interaction:indirect/direct; feedback:observation/trigger", r.stdout)


def case_classify_violation():
    f = spec_file("bad.json", [{"shares_application_info": False, "interaction": "direct",
                                "feedback_kinds": ["observation"]}])
    r = run("classify", "--spec", f)
    check(r.returncode == 1, f"exit {r.returncode}")
    check("R1" in r.stdout, r.stdout)


def case_classify_empty():
    r = run("classify", "--spec", spec_file("empty.json", []))
    check(r.returncode == 1, f"exit {r.returncode}")


def case_bad_arguments():
    check(run().returncode == 2, "no subcommand")
    check(run("frobnicate").returncode == 2, "unknown subcommand")
    check(run("simulate", "--scenario", "my-seat").returncode == 2, "missing --out")


if __name__ == "__main__":
    if os.path.isdir(SCRATCH):
        shutil.rmtree(SCRATCH)
    os.makedirs(SCRATCH)
    globals()["case_" + CASE]()
    print("ok", CASE)
