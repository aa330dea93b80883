"""Named calibration profiles shipped as JSON files next to this module."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..hybridsim import ArticleCorpus, Topology, build_corpus

PROFILE_NAMES = ("test1", "test2")


@dataclass(frozen=True)
class Profile:
    name: str
    topology: Topology
    corpus_seed: int
    corpus_size: int
    n_authors: int
    batches: tuple

    def corpus(self) -> ArticleCorpus:
        return build_corpus(self.corpus_seed, self.corpus_size, self.n_authors)


def profile_from_dict(doc, name=None):
    from ..formats import topology_from_dict, corpus_params_from_dict
    seed, size, authors = corpus_params_from_dict(doc.get("corpus", {}))
    return Profile(
        name=doc.get("name", name),
        topology=topology_from_dict(doc["topology"]),
        corpus_seed=seed,
        corpus_size=size,
        n_authors=authors,
        batches=tuple(int(b) for b in doc.get("batches", ())),
    )


def load_profile(name: str) -> Profile:
    if name not in PROFILE_NAMES:
        raise KeyError(f"unknown profile {name!r}; choose from {', '.join(PROFILE_NAMES)}")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text()
    return profile_from_dict(json.loads(text), name)


def default_topology() -> Topology:
    return load_profile("test2").topology
