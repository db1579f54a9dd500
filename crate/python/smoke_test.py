"""Imports the extension and checks a few reference answers."""

import bspsim

assert bspsim.device_to_dnc(0) == 7
assert bspsim.hop_distance(1, 14) == 8
assert abs(bspsim.p2p_latency_ns((1, 0), (14, 0)) - 1760) / 1760 < 0.10

ids = bspsim.experiment_ids()
assert "p2p-latency-noload-a" in ids and len(ids) == len(set(ids))

m = bspsim.run("p2p-latency-noload-b")
assert m["latency_ns"] == 633.0, m

ok, csv = bspsim.verify(filter="p2p-latency-noload-*")
assert ok and csv.startswith("experiment_id,")

ok, _ = bspsim.verify(filter="p2p-bw-bidir-*", tolerance=0.0)
assert not ok

try:
    bspsim.run("no-such-experiment")
except ValueError:
    pass
else:
    raise AssertionError("unknown id accepted")

print("bspsim smoke test ok:", len(ids), "experiments")
