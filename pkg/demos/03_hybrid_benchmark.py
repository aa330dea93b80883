# # Local versus hybrid retrieval
#
# The simulator costs out a batch query that pulls N articles, either with
# bodies served by the local SQL tier or fetched from cloud blob storage.
# The shipped profiles are calibrated to measured batch times.

from hybridcloud.controller import ThresholdPolicy
from hybridcloud.hybridsim import (Controlled, HybridSystem, QueryRequest, run_benchmark,
                                   state_from_log)
from hybridcloud.profiles import load_profile

profile = load_profile("test2")
corpus = profile.corpus()
print(profile.topology)

local = run_benchmark(profile.topology, corpus, "local", profile.batches)
hybrid = run_benchmark(profile.topology, corpus, "hybrid", profile.batches)

print(f"{'N':>5} {'local s':>9} {'hybrid s':>9} {'overhead':>9} {'local rec/s':>12}")
for lr, hr in zip(local, hybrid):
    over = hr.total_time_s / lr.total_time_s - 1
    print(f"{lr.articles_extracted:5d} {lr.total_time_s:9.1f} {hr.total_time_s:9.1f} "
          f"{over:9.2%} {lr.records_per_second:12.5f}")

# The fixed cloud costs (session setup, round trips) are amortized, so the
# overhead shrinks with batch size while throughput falls on both routes.

# A router that offloads when CPU load crosses a watermark, run as an
# event-driven system so each decision sees the load left by earlier work.

router = Controlled(ThresholdPolicy(0.3, 0.6, 1.0, 0.0, 1.0), "cpu_load")
sim = HybridSystem(profile.topology, corpus, router, window_ms=60_000.0)
for k in range(8):
    sim.submit(QueryRequest(k % 10, 20), at_ms=k * 15_000.0)
sim.run(until_ms=90_000.0)
print("state at 90 s:", sim.observe_state())
print("replayed from log:", state_from_log(sim.log, 90_000.0, 60_000.0, 1.0))
sim.run()
print("routes:", [e.route for e in sim.log if e.kind == "start"])
