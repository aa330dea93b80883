"""Simulation of a local-vs-hybrid article store.

Two retrieval protocols are modelled per article:

local (steps 1-4)
    client -> service (1), service -> SQL server (2), SQL returns metadata and
    the article body (3), service -> client (4).
hybrid (steps 1-5)
    same as local, except step 3 returns only metadata plus blob addresses;
    in step 5 the client fetches the body from cloud storage over the
    client channel.

Costs are additive per article (milliseconds).  Within one request the
``k``-th article (0-based) pays an extra ``contention_coeff * k`` on its
body transfer, which makes totals grow superlinearly with batch size.  The
first cloud fetch of a request also pays ``cloud_session_ms`` for opening the
storage session.

:class:`HybridSystem` adds a single-server FIFO event loop on top of the
per-article cost model so that load measurements (``SystemState``) can be
taken over time and fed to the routing control unit.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import math
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

from .controller import ThresholdPolicy
from .errors import UnknownAuthorError
from .statespace import Trajectory

MBIT_PER_MB = 8.0
SIZE_MIN_MB = 0.1
SIZE_MAX_MB = 3.0
MAX_COAUTHORS = 9


@dataclass(frozen=True)
class Topology:
    local_cpu_per_article_ms: float = 0.0
    local_io_per_mb_ms: float = 0.0
    cloud_request_rtt_ms: float = 0.0
    channel_mbit_per_s: float = 100.0
    service_overhead_ms: float = 0.0
    contention_coeff: float = 0.0
    cloud_session_ms: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or math.isnan(value) or value < 0:
                raise ValueError(f"{f.name} must be a non-negative number, got {value!r}")
        if not self.channel_mbit_per_s > 0:
            raise ValueError("channel_mbit_per_s must be positive")

    def transfer_ms(self, size_mb):
        """Serialization time of ``size_mb`` over the client channel."""
        return size_mb * MBIT_PER_MB / self.channel_mbit_per_s * 1000.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def profile(cls, name="test2"):
        from .profiles import load_profile
        return load_profile(name).topology


class Article(NamedTuple):
    id: int
    size_mb: float
    author_id: int
    coauthor_count: int


@dataclass(frozen=True)
class ArticleCorpus:
    articles: tuple
    rng_seed: int
    n_authors: int = 1

    def __post_init__(self):
        ids = [a.id for a in self.articles]
        if len(set(ids)) != len(ids):
            raise ValueError("article ids must be unique")

    def __len__(self):
        return len(self.articles)

    @property
    def sizes(self):
        return np.array([a.size_mb for a in self.articles])


def build_corpus(seed: int, n_articles: int, n_authors: int = 10) -> ArticleCorpus:
    """Seeded synthetic corpus; main authors are assigned round-robin."""
    if n_articles < 1:
        raise ValueError("n_articles must be >= 1")
    if n_authors < 1:
        raise ValueError("n_authors must be >= 1")
    rng = np.random.default_rng(seed)
    sizes = rng.uniform(SIZE_MIN_MB, SIZE_MAX_MB, n_articles)
    coauthors = rng.integers(0, MAX_COAUTHORS + 1, n_articles)
    articles = tuple(
        Article(i, float(sizes[i]), i % n_authors, int(coauthors[i]))
        for i in range(n_articles)
    )
    return ArticleCorpus(articles, seed, n_authors)


@dataclass(frozen=True)
class QueryRequest:
    author_id: int
    article_count: int
    offset: int = 0

    def __post_init__(self):
        if self.article_count < 1:
            raise ValueError("article_count must be >= 1")
        if self.offset < 0:
            raise ValueError("offset must be >= 0")


def select_articles(corpus: ArticleCorpus, request: QueryRequest):
    # The link table is read starting at the author's first article and wraps
    # around the corpus, so one author id can serve any batch up to len(corpus).
    start = next((i for i, a in enumerate(corpus.articles) if a.author_id == request.author_id), None)
    if start is None:
        raise UnknownAuthorError(request.author_id)
    if request.article_count > len(corpus):
        raise ValueError(f"requested {request.article_count} articles from a corpus of {len(corpus)}")
    n = len(corpus)
    return [corpus.articles[(start + request.offset + k) % n] for k in range(request.article_count)]


class Route(enum.Enum):
    LOCAL = "Local"
    HYBRID = "Hybrid"

    def __str__(self):
        return self.value


LOCAL_STEPS = (1, 2, 3, 4)
HYBRID_STEPS = (1, 2, 3, 4, 5)


def article_steps(topology: Topology, article: Article, k: int, route: Route,
                  session_open: bool = False) -> dict:
    """Step durations (ms) for the ``k``-th article of one request."""
    half = topology.service_overhead_ms * 0.5
    contention = topology.contention_coeff * k
    if route is Route.LOCAL:
        body = topology.local_io_per_mb_ms * article.size_mb + contention
        return {1: half, 2: topology.local_cpu_per_article_ms, 3: body, 4: half}
    fetch = topology.cloud_request_rtt_ms + topology.transfer_ms(article.size_mb) + contention
    if k == 0 and not session_open:
        fetch += topology.cloud_session_ms
    return {1: half, 2: topology.local_cpu_per_article_ms, 3: 0.0, 4: half, 5: fetch}


@dataclass(frozen=True)
class QueryTrace:
    route: Route
    article_ids: tuple
    steps: tuple  # one {step: ms} dict per article
    total_ms: float

    def step_total(self, step):
        return math.fsum(s.get(step, 0.0) for s in self.steps)


def _trace(route, articles, steps):
    total = math.fsum(v for s in steps for v in s.values())
    return QueryTrace(route, tuple(a.id for a in articles), tuple(steps), total)


def execute(topology: Topology, corpus: ArticleCorpus, request: QueryRequest, route: Route,
            session_open: bool = False) -> QueryTrace:
    """Cost out one request on a fixed route.

    ``session_open`` skips the cloud session setup (a client that already
    holds an open storage session).
    """
    articles = select_articles(corpus, request)
    steps = [article_steps(topology, a, k, route, session_open) for k, a in enumerate(articles)]
    return _trace(route, articles, steps)


def execute_local(topology, corpus, request) -> QueryTrace:
    return execute(topology, corpus, request, Route.LOCAL)


def execute_hybrid(topology, corpus, request) -> QueryTrace:
    return execute(topology, corpus, request, Route.HYBRID)


# -- routing control unit -----------------------------------------------------

@dataclass(frozen=True)
class SystemState:
    cpu_load: float = 0.0
    channel_load: float = 0.0
    active_workers: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.cpu_load <= 1.0:
            raise ValueError(f"cpu_load {self.cpu_load} outside [0, 1]")
        if not 0.0 <= self.channel_load <= 1.0:
            raise ValueError(f"channel_load {self.channel_load} outside [0, 1]")
        if self.active_workers < 0:
            raise ValueError("active_workers must be >= 0")


STATE_COMPONENTS = ("cpu_load", "channel_load", "active_workers")


def state_vector(state: SystemState) -> np.ndarray:
    return np.array([state.cpu_load, state.channel_load, state.active_workers])


class AlwaysLocal:
    def __repr__(self):
        return "AlwaysLocal()"


class AlwaysHybrid:
    def __repr__(self):
        return "AlwaysHybrid()"


@dataclass(frozen=True)
class Controlled:
    """Offload to the cloud when a state component rises above the high
    watermark, come back when it drops below the low one."""

    policy: ThresholdPolicy
    component: int | str = "cpu_load"

    @property
    def index(self):
        if isinstance(self.component, str):
            return STATE_COMPONENTS.index(self.component)
        return int(self.component)


def route(policy, state: SystemState, request: QueryRequest | None = None,
          previous: Route | None = None) -> Route:
    """Pick the route for ``request``; ``previous`` is ``None`` on first use."""
    if isinstance(policy, AlwaysLocal):
        return Route.LOCAL
    if isinstance(policy, AlwaysHybrid):
        return Route.HYBRID
    if isinstance(policy, Controlled):
        value = state_vector(state)[policy.index]
        if value > policy.policy.high_watermark:
            return Route.HYBRID
        if value < policy.policy.low_watermark:
            return Route.LOCAL
        return previous if previous is not None else Route.LOCAL
    raise TypeError(f"unknown route policy {policy!r}")


# -- event loop ---------------------------------------------------------------

class Event(NamedTuple):
    time: float
    kind: str  # "arrive", "start", "busy", "finish"
    job: int
    resource: str = ""
    start: float = 0.0
    end: float = 0.0
    route: str = ""


_FINISH, _ARRIVE = 0, 1


def _occupancy_area(changes, lo, hi):
    """Integral over [lo, hi] of a right-continuous step function given as
    time-ordered ``(time, level)`` change points."""
    area = 0.0
    end = hi
    for t0, level in reversed(changes):
        area += level * max(0.0, min(end, hi) - max(t0, lo))
        end = min(end, t0)
        if t0 <= lo:
            break
    return area


def _busy_in_window(intervals, lo, hi):
    busy = 0.0
    for s, e in intervals:
        busy += max(0.0, min(e, hi) - max(s, lo))
    return busy


class HybridSystem:
    """Single-threaded discrete-event model of the service.

    Requests queue FIFO at one service worker; each runs its articles back to
    back following the chosen route.  Steps 1-4 occupy the ``cpu`` resource
    (service + SQL server), step 5 occupies the client ``channel``.  Loads are
    busy fractions over the trailing ``window_ms``; ``active_workers`` is the
    baseline plus the time-averaged number of requests in the system over the
    same window.  The cloud storage session is opened by the first hybrid
    request and then kept for the lifetime of the system.
    """

    def __init__(self, topology: Topology, corpus: ArticleCorpus, policy=None,
                 window_ms: float = 10_000.0, baseline_workers: float = 1.0,
                 route_window_ms: float | None = None):
        self.topology = topology
        self.corpus = corpus
        self.policy = policy if policy is not None else AlwaysLocal()
        self.window_ms = float(window_ms)
        self.route_window_ms = self.window_ms if route_window_ms is None else float(route_window_ms)
        self.baseline_workers = float(baseline_workers)
        self.clock = 0.0
        self.log: list[Event] = []
        self.traces: dict[int, QueryTrace] = {}
        self.requests: dict[int, QueryRequest] = {}
        self._heap = []
        self._seq = itertools.count()
        self._job_ids = itertools.count()
        self._queue = deque()
        self._busy = False
        self._in_system = 0
        self._intervals = {"cpu": [], "channel": []}
        self._occupancy = [(0.0, 0)]  # (time, jobs in system from then on)
        self._last_route = None
        self._session_open = False

    def submit(self, request: QueryRequest, at_ms: float | None = None) -> int:
        at = self.clock if at_ms is None else float(at_ms)
        if at < self.clock:
            raise ValueError("cannot submit in the past")
        job = next(self._job_ids)
        self.requests[job] = request
        heapq.heappush(self._heap, (at, _ARRIVE, next(self._seq), job))
        return job

    @property
    def idle(self):
        return not self._heap and not self._busy

    def run(self, until_ms: float | None = None):
        """Process events up to and including ``until_ms`` (all if None)."""
        while self._heap and (until_ms is None or self._heap[0][0] <= until_ms):
            time, kind, _, job = heapq.heappop(self._heap)
            self.clock = time
            if kind == _ARRIVE:
                self._in_system += 1
                self._occupancy.append((time, self._in_system))
                self.log.append(Event(time, "arrive", job))
                self._queue.append(job)
                if not self._busy:
                    self._start_next()
            else:
                self._in_system -= 1
                self._occupancy.append((time, self._in_system))
                self._busy = False
                self.log.append(Event(time, "finish", job))
                if self._queue:
                    self._start_next()
        if until_ms is not None:
            self.clock = max(self.clock, float(until_ms))

    def _start_next(self):
        job = self._queue.popleft()
        now = self.clock
        seen = self.observe_state(self.route_window_ms)
        chosen = route(self.policy, seen, self.requests[job], self._last_route)
        self._last_route = chosen
        trace = execute(self.topology, self.corpus, self.requests[job], chosen,
                        session_open=self._session_open)
        if chosen is Route.HYBRID:
            self._session_open = True
        self.traces[job] = trace
        self.log.append(Event(now, "start", job, route=chosen.value))
        t = now
        for per_article in trace.steps:
            for step_no in sorted(per_article):
                d = per_article[step_no]
                if d > 0.0:
                    resource = "channel" if step_no == 5 else "cpu"
                    self._intervals[resource].append((t, t + d))
                    self.log.append(Event(now, "busy", job, resource, t, t + d))
                t += d
        self._busy = True
        heapq.heappush(self._heap, (now + trace.total_ms, _FINISH, next(self._seq), job))

    def observe_state(self, window_ms: float | None = None) -> SystemState:
        """Loads over the trailing window ending at the current clock."""
        window = self.window_ms if window_ms is None else float(window_ms)
        hi = self.clock
        lo = hi - window
        loads = {}
        for resource, intervals in self._intervals.items():
            busy = 0.0
            for s, e in reversed(intervals):
                if e <= lo:
                    break
                busy += max(0.0, min(e, hi) - max(s, lo))
            loads[resource] = min(1.0, max(0.0, busy / window))
        occupied = _occupancy_area(self._occupancy, lo, hi) / window
        return SystemState(loads["cpu"], loads["channel"], self.baseline_workers + occupied)


def state_from_log(log: Sequence[Event], at_ms: float, window_ms: float,
                   baseline_workers: float = 1.0) -> SystemState:
    """Recompute the observed state at ``at_ms`` from an event log."""
    lo, hi = at_ms - window_ms, at_ms
    cpu = _busy_in_window([(e.start, e.end) for e in log if e.kind == "busy" and e.resource == "cpu"], lo, hi)
    chan = _busy_in_window([(e.start, e.end) for e in log if e.kind == "busy" and e.resource == "channel"], lo, hi)
    # jobs in system: +1 on arrival, -1 on finish, integrated over the window
    area = 0.0
    for e in log:
        if e.kind in ("arrive", "finish") and e.time < hi:
            span = max(0.0, hi - max(e.time, lo))
            area += span if e.kind == "arrive" else -span
    return SystemState(min(1.0, cpu / window_ms), min(1.0, chan / window_ms),
                       baseline_workers + area / window_ms)


# -- benchmarks ---------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    query_index: int
    articles_extracted: int
    records_per_second: float
    total_time_s: float


def _row(index, trace):
    total_s = trace.total_ms / 1000.0
    n = len(trace.article_ids)
    return BenchRow(index, n, n / total_s if total_s > 0 else math.inf, total_s)


def _as_policy(mode):
    if isinstance(mode, (AlwaysLocal, AlwaysHybrid, Controlled)):
        return mode
    key = mode.value if isinstance(mode, Route) else str(mode)
    key = key.lower()
    if key == "local":
        return AlwaysLocal()
    if key == "hybrid":
        return AlwaysHybrid()
    raise ValueError(f"unknown benchmark mode {mode!r}; pass a Controlled policy for controlled runs")


def run_benchmark(topology: Topology, corpus: ArticleCorpus, mode, batch_sizes: Sequence[int],
                  author_id: int = 0, window_ms: float = 10_000.0):
    """One :class:`BenchRow` per batch size.

    ``mode`` is ``"local"``, ``"hybrid"``, a :class:`Route`, or a route policy
    object.  Fixed routes evaluate each batch independently; a
    :class:`Controlled` policy runs the batches back to back through one
    :class:`HybridSystem` so that each routing decision sees the load left by
    the previous batch.
    """
    if any(int(b) < 1 for b in batch_sizes):
        raise ValueError("batch sizes must be >= 1")
    policy = _as_policy(mode)
    rows = []
    if isinstance(policy, Controlled):
        sim = HybridSystem(topology, corpus, policy, window_ms=window_ms)
        for i, n in enumerate(batch_sizes, start=1):
            job = sim.submit(QueryRequest(author_id, int(n)))
            sim.run()
            rows.append(_row(i, sim.traces[job]))
        return rows
    fixed = Route.LOCAL if isinstance(policy, AlwaysLocal) else Route.HYBRID
    for i, n in enumerate(batch_sizes, start=1):
        rows.append(_row(i, execute(topology, corpus, QueryRequest(author_id, int(n)), fixed)))
    return rows


def run_stream(topology: Topology, corpus: ArticleCorpus, policy, admissions: Sequence[float],
               period_ms: float = 60_000.0, baseline_workers: float = 1.0,
               route_window_ms: float | None = None) -> Trajectory:
    """Drive the service with a per-period admission count and record loads.

    In period ``t`` ``admissions[t]`` single-article requests arrive evenly
    spaced over ``[t*P, (t+1)*P)``; the state is sampled at every period
    boundary with a window of one period.  Returns a trajectory with
    ``x = (cpu_load, channel_load, active_workers)`` and ``u = admissions``.
    """
    sim = HybridSystem(topology, corpus, policy, window_ms=period_ms,
                       baseline_workers=baseline_workers, route_window_ms=route_window_ms)
    states = [state_vector(sim.observe_state())]
    served = 0
    for t, count in enumerate(admissions):
        count = int(count)
        if count < 0:
            raise ValueError("admissions must be non-negative")
        base = t * period_ms
        for j in range(count):
            sim.submit(QueryRequest(corpus.articles[0].author_id, 1, offset=served % len(corpus)),
                       at_ms=base + j * period_ms / count)
            served += 1
        sim.run(until_ms=(t + 1) * period_ms)
        states.append(state_vector(sim.observe_state()))
    controls = np.asarray(admissions, dtype=float).reshape(-1, 1)
    return Trajectory(np.array(states), controls)
