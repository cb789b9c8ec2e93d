"""The decentralised cycle protocol reproduces the centralised solver exactly.

Ten nodes sit on a ring; node i only knows its own operator, nodes 2..10
each own one auxiliary block.  Per round every node sends exactly two
messages, one to each neighbour.  The simulator shows that the protocol's
owned blocks match the centralised iteration bit for bit, and that the
pipelined schedule (middle nodes start the next round early) changes
nothing.
"""

import numpy as np

from minsplit import (
    gathered_z,
    gen_consensus,
    make_nodes,
    mt_solve,
    round_log_csv,
    run_protocol,
)

n = 10
inst = gen_consensus(n, seed=3)
ops = inst.operators()
lo, hi = inst.median_interval()

nodes = make_nodes(ops, np.zeros((n - 1, 1)))
report, logs = run_protocol(nodes, gamma=0.9, rounds=50000, tol=1e-8)
print(f"protocol converged after {report.iterations} rounds")
print(f"median interval: [{lo:+.6f}, {hi:+.6f}]")
for node in nodes:
    print(f"  node {node.node_id:2d} estimate: {float(node.last_x[0]):+.8f}")

central = mt_solve(ops, gamma=0.9, tol=0.0, max_iter=report.iterations, dim=1)
dev = float(np.max(np.abs(gathered_z(nodes) - central.state.z)))
print(f"\nmax |protocol z - centralised z| after {report.iterations} rounds: {dev}")

counts = {}
for msg in logs[0].messages:
    counts[msg.from_node] = counts.get(msg.from_node, 0) + 1
print(f"messages per node in round 1: {sorted(counts.values())}")

strict = make_nodes(ops, np.zeros((n - 1, 1)))
piped = make_nodes(ops, np.zeros((n - 1, 1)))
run_protocol(strict, 0.9, rounds=200, tol=0.0, mode="strict")
run_protocol(piped, 0.9, rounds=200, tol=0.0, mode="pipelined")
dev = float(np.max(np.abs(gathered_z(strict) - gathered_z(piped))))
print(f"strict vs pipelined schedule after 200 rounds: max deviation {dev}")

round_log_csv(logs[:5], "protocol_rounds.csv")
print("wrote protocol_rounds.csv (first five rounds of message telemetry)")
