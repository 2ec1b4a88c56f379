"""An interactive labeling session, driven here by a scripted client.

The solver blocks on a queue-backed label source; an HTTP API exposes the
queue. This script plays the human: it polls for tasks, answers them from
the hidden truth, and fetches the finished solution. Point a browser at the
printed URL instead (with the frontend bundle built) to label by hand.
"""

import json
import threading
import time
import urllib.request

from pairtriage.model import MATCH, UNMATCH, QualityRequirement
from pairtriage.service import LabelingService, make_server
from pairtriage.solvers import SolverConfig
from pairtriage.synth import SyntheticSpec, generate

workload = generate(SyntheticSpec(n_pairs=600, subset_size=30, tau=12, sigma=0.1, seed=9))
config = SolverConfig(
    requirement=QualityRequirement(0.85, 0.85, 0.9),
    sampling_range=(0.1, 0.3),
    per_subset_samples=10,
    seed=2,
)

service = LabelingService(workload, "hybrid", config)
server = make_server(service, port=0)
base = f"http://127.0.0.1:{server.server_address[1]}"
threading.Thread(target=server.serve_forever, daemon=True).start()
service.start()
print(f"labeling service at {base}")


def call(path, payload=None):
    req = urllib.request.Request(
        base + path,
        data=None if payload is None else json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"} if payload else {},
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


answered = 0
while True:
    progress = call("/api/progress")
    if progress["done"]:
        break
    batch = call("/api/tasks/next?limit=25")
    if not batch["tasks"]:
        time.sleep(0.01)
        continue
    for task in batch["tasks"]:
        idx = workload.index_of(task["pair_id"])
        verdict = MATCH if workload.truths[idx] == 1 else UNMATCH
        call("/api/labels", {"pair_id": task["pair_id"], "label": verdict})
        answered += 1
    if answered % 100 < 25:
        print(f"  answered {answered:4d} (phase: {batch['phase']}, "
              f"bounds: {progress['current_bounds']})")

solution = call("/api/solution")
print(f"\nsolution: bounds {solution['bounds']}, human cost {solution['human_cost']} "
      f"({solution['cost_fraction']:.3f} of the workload)")
service.stop()
server.shutdown()
server.server_close()
