import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcloud.controller import ThresholdPolicy
from hybridcloud.errors import UnknownAuthorError
from hybridcloud.hybridsim import (AlwaysHybrid, AlwaysLocal, Article, ArticleCorpus, Controlled,
                                   HybridSystem, QueryRequest, Route, SystemState, Topology,
                                   build_corpus, execute_hybrid, execute_local, route,
                                   run_benchmark, run_stream, select_articles, state_from_log,
                                   state_vector)
from hybridcloud.profiles import default_topology, load_profile

TEST2_LOCAL_S = [170.2648023, 383.3185936, 585.8428519, 799.76944, 1056.250566,
                  1347.565385, 1619.206815, 1913.022702, 2224.643836, 2559.199781]
TEST1_LOCAL_S = [110.1231453, 297.6383233, 474.969978, 662.533218]


def one_article_corpus(size_mb):
    return ArticleCorpus((Article(0, size_mb, 0, 0),), rng_seed=0)


# -- corpus --------------------------------------------------------------------

def test_corpus_deterministic():
    assert build_corpus(42, 1) == build_corpus(42, 1)
    assert build_corpus(42, 300) == build_corpus(42, 300)
    assert build_corpus(42, 300) != build_corpus(43, 300)


def test_corpus_size_distribution():
    sizes = build_corpus(7, 10_000).sizes
    # uniform(0.1, 3.0): mean 1.55, sd 0.837, so the CLT band at n=1e4 is ~±0.025
    assert 1.45 <= sizes.mean() <= 1.65
    assert sizes.min() >= 0.1 and sizes.max() <= 3.0


def test_corpus_coauthors_and_round_robin_authors():
    corpus = build_corpus(3, 500, n_authors=10)
    assert {a.coauthor_count for a in corpus.articles} <= set(range(10))
    assert [a.author_id for a in corpus.articles[:12]] == [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1]


def test_select_articles_wraps_and_rejects_unknown_author():
    corpus = build_corpus(1, 20, n_authors=4)
    ids = [a.id for a in select_articles(corpus, QueryRequest(3, 20))]
    assert ids == list(range(3, 20)) + [0, 1, 2]
    with pytest.raises(UnknownAuthorError):
        select_articles(corpus, QueryRequest(9, 1))
    with pytest.raises(ValueError):
        select_articles(corpus, QueryRequest(0, 21))


# -- cost model ----------------------------------------------------------------

def test_zero_topology_costs_nothing():
    corpus = build_corpus(0, 50)
    zero = Topology()
    assert execute_local(zero, corpus, QueryRequest(0, 50)).total_ms == 0.0
    huge = Topology(channel_mbit_per_s=1e300)
    assert execute_hybrid(huge, corpus, QueryRequest(0, 50)).total_ms == pytest.approx(0.0, abs=1e-250)


def test_local_hand_sum():
    topo = Topology(local_cpu_per_article_ms=10, local_io_per_mb_ms=5, service_overhead_ms=1)
    trace = execute_local(topo, one_article_corpus(2.0), QueryRequest(0, 1))
    assert trace.total_ms == 21.0
    assert trace.route is Route.LOCAL and set(trace.steps[0]) == {1, 2, 3, 4}


def test_hybrid_transfer_hand_sum():
    topo = Topology(cloud_request_rtt_ms=50, channel_mbit_per_s=100)
    trace = execute_hybrid(topo, one_article_corpus(2.0), QueryRequest(0, 1))
    # 2 MB = 16 Mbit; 16/100 s = 160 ms, plus the 50 ms round trip
    assert trace.total_ms == pytest.approx(210.0, abs=1e-12)
    assert trace.route is Route.HYBRID and set(trace.steps[0]) == {1, 2, 3, 4, 5}


def test_hybrid_session_paid_once_per_request():
    topo = Topology(cloud_session_ms=100.0)
    corpus = build_corpus(0, 10)
    trace = execute_hybrid(topo, corpus, QueryRequest(0, 5))
    assert trace.step_total(5) == pytest.approx(100.0 + sum(topo.transfer_ms(corpus.articles[i].size_mb)
                                                             for i in range(5)))


topologies = st.builds(
    Topology,
    local_cpu_per_article_ms=st.floats(0, 1000), local_io_per_mb_ms=st.floats(0, 1000),
    cloud_request_rtt_ms=st.floats(0, 1000), channel_mbit_per_s=st.floats(1, 1000),
    service_overhead_ms=st.floats(0, 1000), contention_coeff=st.floats(0, 10),
    cloud_session_ms=st.floats(0, 1e4))

CORPUS = build_corpus(5, 200)


@settings(max_examples=60, deadline=None)
@given(topologies, st.integers(1, 200), st.sampled_from(list(Route)))
def test_conservation(topo, n, rt):
    trace = (execute_local if rt is Route.LOCAL else execute_hybrid)(topo, CORPUS, QueryRequest(0, n))
    assert trace.total_ms == math.fsum(v for s in trace.steps for v in s.values())


@settings(max_examples=60, deadline=None)
@given(topologies, st.integers(1, 200))
def test_hybrid_decomposition(topo, n):
    cloudless = replace(topo, cloud_request_rtt_ms=0.0, cloud_session_ms=0.0, channel_mbit_per_s=1e300)
    req = QueryRequest(0, n)
    local = execute_local(cloudless, CORPUS, req).total_ms
    hybrid = execute_hybrid(cloudless, CORPUS, req).total_ms
    bodies = cloudless.local_io_per_mb_ms * math.fsum(a.size_mb for a in select_articles(CORPUS, req))
    assert abs((hybrid + bodies) - local) <= 1e-9 * max(1.0, local)


@settings(max_examples=40, deadline=None)
@given(topologies, st.integers(1, 199), st.sampled_from(["local_cpu_per_article_ms", "local_io_per_mb_ms",
       "cloud_request_rtt_ms", "service_overhead_ms", "contention_coeff", "cloud_session_ms"]),
       st.floats(0, 100))
def test_monotonicity(topo, n, field, bump):
    bigger = replace(topo, **{field: getattr(topo, field) + bump})
    for fn in (execute_local, execute_hybrid):
        base = fn(topo, CORPUS, QueryRequest(0, n)).total_ms
        assert fn(bigger, CORPUS, QueryRequest(0, n)).total_ms >= base
        assert fn(topo, CORPUS, QueryRequest(0, n + 1)).total_ms >= base


def test_slower_channel_costs_more():
    topo = Topology(channel_mbit_per_s=100)
    slow = replace(topo, channel_mbit_per_s=10)
    assert execute_hybrid(slow, CORPUS, QueryRequest(0, 20)).total_ms > \
        execute_hybrid(topo, CORPUS, QueryRequest(0, 20)).total_ms


def test_zero_contention_is_linear():
    topo = Topology(local_cpu_per_article_ms=7.0, service_overhead_ms=3.0)
    corpus = ArticleCorpus(tuple(Article(i, 1.0, 0, 0) for i in range(1000)), 0)
    rows = run_benchmark(topo, corpus, "local", [100, 200, 500, 1000])
    per = [r.total_time_s / r.articles_extracted for r in rows]
    assert max(per) / min(per) - 1 <= 1e-9


# -- calibrated profiles -------------------------------------------------------

def test_calibrated_local_trend_test2():
    p = load_profile("test2")
    rows = run_benchmark(p.topology, p.corpus(), "local", p.batches)
    for row, measured in zip(rows, TEST2_LOCAL_S):
        assert abs(row.total_time_s / measured - 1) <= 0.15
    totals = [r.total_time_s for r in rows]
    assert all(b > a for a, b in zip(totals, totals[1:]))


def test_calibrated_local_trend_test1():
    p = load_profile("test1")
    rows = run_benchmark(p.topology, p.corpus(), "local", p.batches)
    for row, measured in zip(rows, TEST1_LOCAL_S):
        assert abs(row.total_time_s / measured - 1) <= 0.15


@pytest.mark.parametrize("name", ["test1", "test2"])
def test_overhead_shrinks_with_batch(name):
    p = load_profile(name)
    corpus = p.corpus()
    local = run_benchmark(p.topology, corpus, "local", p.batches)
    hybrid = run_benchmark(p.topology, corpus, "hybrid", p.batches)
    over = [h.total_time_s / l.total_time_s - 1 for l, h in zip(local, hybrid)]
    assert over[0] > over[-1] > 0
    for rows in (local, hybrid):
        rps = [r.records_per_second for r in rows]
        assert all(b < a for a, b in zip(rps, rps[1:]))


def test_default_topology_ratio_at_400():
    topo = default_topology()
    corpus = load_profile("test2").corpus()
    req = QueryRequest(0, 400)
    assert execute_hybrid(topo, corpus, req).total_ms / execute_local(topo, corpus, req).total_ms <= 1.02


def test_benchmark_deterministic():
    p = load_profile("test2")
    a = run_benchmark(p.topology, build_corpus(9, 1000), "hybrid", p.batches)
    b = run_benchmark(p.topology, build_corpus(9, 1000), "hybrid", p.batches)
    assert a == b


# -- routing -------------------------------------------------------------------

POLICY = Controlled(ThresholdPolicy(0.3, 0.7, 1.0, 0.0, 1.0), "cpu_load")


def test_route_constant_policies():
    for s in (SystemState(), SystemState(1.0, 1.0, 5.0)):
        assert route(AlwaysHybrid(), s) is Route.HYBRID
        assert route(AlwaysLocal(), s) is Route.LOCAL


def test_route_controlled():
    assert route(POLICY, SystemState(cpu_load=0.9)) is Route.HYBRID
    assert route(POLICY, SystemState(cpu_load=0.1), previous=Route.HYBRID) is Route.LOCAL
    assert route(POLICY, SystemState(cpu_load=0.5)) is Route.LOCAL
    assert route(POLICY, SystemState(cpu_load=0.5), previous=Route.HYBRID) is Route.HYBRID


def test_route_by_index_and_unknown_policy():
    p = Controlled(ThresholdPolicy(0.3, 0.7, 1.0, 0.0, 1.0), 1)
    assert route(p, SystemState(channel_load=0.8)) is Route.HYBRID
    with pytest.raises(TypeError):
        route(object(), SystemState())


# -- event loop ----------------------------------------------------------------

def test_idle_state():
    sim = HybridSystem(default_topology(), CORPUS, baseline_workers=2.0)
    assert sim.idle
    assert state_vector(sim.observe_state()).tolist() == [0.0, 0.0, 2.0]


def test_saturating_batch_clamps_cpu():
    sim = HybridSystem(default_topology(), CORPUS, AlwaysLocal(), window_ms=5_000.0)
    sim.submit(QueryRequest(0, 100))
    sim.run(until_ms=60_000.0)
    s = sim.observe_state()
    assert s.cpu_load == 1.0 and s.channel_load == 0.0


@pytest.mark.parametrize("policy", [AlwaysLocal(), AlwaysHybrid(), POLICY])
def test_mid_batch_state_matches_log_replay(policy):
    topo = default_topology()
    sim = HybridSystem(topo, CORPUS, policy, window_ms=30_000.0, baseline_workers=1.0)
    for k in range(6):
        sim.submit(QueryRequest(k % 10, 3 + k), at_ms=k * 4_000.0)
    for t in (5_000.0, 17_500.0, 40_000.0, 90_000.0):
        sim.run(until_ms=t)
        live = sim.observe_state()
        replay = state_from_log(sim.log, t, 30_000.0, 1.0)
        np.testing.assert_allclose(state_vector(live), state_vector(replay), rtol=1e-9, atol=1e-12)


def test_event_loop_finishes_and_matches_execute():
    topo = default_topology()
    sim = HybridSystem(topo, CORPUS, AlwaysLocal())
    job = sim.submit(QueryRequest(2, 7))
    sim.run()
    assert sim.idle
    finish = [e.time for e in sim.log if e.kind == "finish" and e.job == job]
    assert finish == [pytest.approx(execute_local(topo, CORPUS, QueryRequest(2, 7)).total_ms)]


def test_controlled_benchmark_runs():
    p = load_profile("test2")
    rows = run_benchmark(p.topology, p.corpus(), POLICY, [100, 200, 300])
    assert [r.articles_extracted for r in rows] == [100, 200, 300]


def test_run_stream_shape():
    traj = run_stream(default_topology(), CORPUS, AlwaysLocal(), [0, 3, 5, 0])
    assert traj.states.shape == (5, 3) and traj.controls[:, 0].tolist() == [0, 3, 5, 0]
    assert np.all(traj.states[:, 0] <= 1.0) and np.all(traj.states[:, 2] >= 1.0)
