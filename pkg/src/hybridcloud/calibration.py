"""Fit default topology constants to measured batch retrieval times.

Two measurement sets ship with the package ("test1": batches 100-400,
"test2": batches 100-1000).  The fit has two stages:

1. Local route.  For a batch of ``N`` articles with total size ``S(N)`` the
   simulated time is linear in the four constants
   ``N*overhead + N*cpu + S(N)*io + N(N-1)/2*contention``.  They are found by
   bounded least squares on relative errors.  ``overhead`` and ``cpu`` enter
   identically, so a small ridge term (on column-normalised unknowns) picks
   the unique minimum-norm split.  ``io`` is bounded below by the channel
   serialization rate, since local bodies leave the server over the same link.
2. Hybrid route.  The measured hybrid-minus-local gap is
   ``N*rtt + S(N)*(8000/channel - io) + session`` and ``(rtt, session)`` are
   fitted by non-negative least squares on relative errors.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import lsq_linear, nnls

from .hybridsim import ArticleCorpus, Topology, build_corpus

CORPUS_SEED = 2013
CORPUS_SIZE = 1000
RIDGE = 1e-3

# Measured totals (seconds) per batch size.
MEASURED = {
    "test1": {
        "batches": [100, 200, 300, 400],
        "local_s": [110.1231453, 297.6383233, 474.969978, 662.533218],
        "hybrid_s": [121.0354227, 303.2433013, 480.2488007, 669.136332],
    },
    "test2": {
        "batches": [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
        "local_s": [170.2648023, 383.3185936, 585.8428519, 799.76944, 1056.250566,
                    1347.565385, 1619.206815, 1913.022702, 2224.643836, 2559.199781],
        "hybrid_s": [177.0691164, 388.6920493, 590.4366272, 805.6650491, 1062.042418,
                     1353.779514, 1625.511459, 1919.462269, 2231.100424, 2565.93466],
    },
}


def _batch_sizes_mb(corpus: ArticleCorpus, batches):
    # batches are served from the start of the corpus (author 0)
    cum = np.cumsum(corpus.sizes)
    return np.array([cum[n - 1] for n in batches])


def calibrate(name: str, corpus: ArticleCorpus | None = None,
              channel_mbit_per_s: float = 100.0) -> Topology:
    data = MEASURED[name]
    if corpus is None:
        corpus = build_corpus(CORPUS_SEED, CORPUS_SIZE)
    N = np.array(data["batches"], dtype=float)
    local = np.array(data["local_s"]) * 1000.0
    hybrid = np.array(data["hybrid_s"]) * 1000.0
    S = _batch_sizes_mb(corpus, data["batches"])
    wire_ms_per_mb = 8.0 / channel_mbit_per_s * 1000.0

    X = np.column_stack([N, N, S, N * (N - 1) / 2])
    Xw = X / local[:, None]
    scale = np.linalg.norm(Xw, axis=0)
    design = np.vstack([Xw / scale, np.sqrt(RIDGE) * np.eye(4)])
    target = np.concatenate([np.ones_like(local), np.zeros(4)])
    lower = np.array([0.0, 0.0, wire_ms_per_mb, 0.0]) * scale
    sol = lsq_linear(design, target, bounds=(lower, np.inf), method="bvls")
    overhead, cpu, io, contention = sol.x / scale

    gap = hybrid - local - (wire_ms_per_mb - io) * S
    H = np.column_stack([N, np.ones_like(N)]) / local[:, None]
    (rtt, session), _ = nnls(H, gap / local)

    return Topology(
        local_cpu_per_article_ms=float(cpu),
        local_io_per_mb_ms=float(io),
        cloud_request_rtt_ms=float(rtt),
        channel_mbit_per_s=float(channel_mbit_per_s),
        service_overhead_ms=float(overhead),
        contention_coeff=float(contention),
        cloud_session_ms=float(session),
    )


def profile_document(name: str) -> dict:
    topology = calibrate(name)
    return {
        "name": name,
        "topology": topology.to_dict(),
        "corpus": {"seed": CORPUS_SEED, "n_articles": CORPUS_SIZE, "n_authors": 10},
        "batches": MEASURED[name]["batches"],
    }


if __name__ == "__main__":
    import json
    from pathlib import Path

    out = Path(__file__).with_name("profiles")
    for profile in MEASURED:
        (out / f"{profile}.json").write_text(json.dumps(profile_document(profile), indent=2) + "\n")
        print(f"wrote {out / profile}.json")
