"""Synthetic two-domain corpora with shared text semantics.

Items belong to latent topics; an item's "text" is a bag of topic tokens
drawn from a vocabulary shared across domains, so the text-derived
embedding table is domain-agnostic while item ids are disjoint. Users keep
one topic preference across domains, which is what makes cross-domain
transfer possible at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .data import InteractionDataset, SplitDataset, leave_one_out_split
from .rng import substream
from .tfre import EmbeddingTable


@dataclass
class SynthDomain:
    dataset: InteractionDataset
    split: SplitDataset
    table: EmbeddingTable
    item_topics: Dict[str, int]
    item_tokens: Dict[str, List[str]] = field(default_factory=dict)
    unseen_items: List[str] = field(default_factory=list)
    unseen_topics: Dict[str, int] = field(default_factory=dict)
    semantic: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class SynthWorld:
    """Shared users plus one or more domains built over the same token space."""

    users: List[str]
    user_topics: Dict[str, int]
    domains: Dict[str, SynthDomain]
    user_prefs: Dict[str, np.ndarray] = field(default_factory=dict)


def _token_vectors(n_topics: int, tokens_per_topic: int, f_enc: int, seed: int) -> Dict[str, np.ndarray]:
    """Frozen token -> vector map shared by every domain (the "text encoder")."""
    rng = substream(seed, "corpus", 0)
    vecs: Dict[str, np.ndarray] = {}
    for t in range(n_topics):
        center = rng.normal(0.0, 1.0, size=f_enc)
        for j in range(tokens_per_topic):
            vecs[f"t{t}w{j}"] = center + 0.3 * rng.normal(0.0, 1.0, size=f_enc)
    return vecs


def make_world(
    seed: int,
    domain_tags: List[str],
    n_users: int = 20,
    n_items: int = 50,
    n_topics: int = 2,
    f_enc: int = 8,
    positives_per_user: int = 10,
    tokens_per_item: int = 4,
    tokens_per_topic: int = 12,
    n_unseen_per_topic: int = 10,
    pref_noise: float = 0.4,
    item_jitter: float = 0.3,
    random_table: bool = False,
) -> SynthWorld:
    """Build shared users and per-domain datasets, splits, and tables.

    ``random_table=True`` replaces the text-derived table with seeded random
    vectors of the same dimensions (the no-pretraining ablation).
    """
    users = [f"u{u:03d}" for u in range(n_users)]
    topic_rng = substream(seed, "data", 0)
    user_topics = {u: int(topic_rng.integers(n_topics)) for u in users}
    token_vecs = _token_vectors(n_topics, tokens_per_topic, f_enc, seed)
    topic_centers = {
        t: np.mean([v for k, v in token_vecs.items() if k.startswith(f"t{t}w")], axis=0) for t in range(n_topics)
    }
    # planted per-user preference over the shared semantic space; fixed
    # across domains so the same taste generates both domains' interactions
    user_prefs = {
        u: topic_centers[user_topics[u]] + pref_noise * substream(seed, "data", _h("pref:" + u)).normal(0.0, 1.0, size=f_enc)
        for u in users
    }

    domains: Dict[str, SynthDomain] = {}
    for d_idx, tag in enumerate(domain_tags):
        rng = substream(seed, "data", 1 + d_idx)
        item_ids = [f"{tag}_i{i:03d}" for i in range(n_items)]
        item_topics = {item: i % n_topics for i, item in enumerate(item_ids)}
        item_tokens: Dict[str, List[str]] = {}
        semantic: Dict[str, np.ndarray] = {}
        entries: Dict[str, np.ndarray] = {}
        for item in item_ids:
            t = item_topics[item]
            toks = [f"t{t}w{int(j)}" for j in rng.choice(tokens_per_topic, size=tokens_per_item, replace=False)]
            item_tokens[item] = toks
            vec = np.mean([token_vecs[tk] for tk in toks], axis=0) + item_jitter * rng.normal(0.0, 1.0, size=f_enc)
            semantic[item] = vec
            # interactions always come from the semantic vectors; the
            # random_table flag only degrades what the model gets to see
            entries[item] = rng.normal(0.0, 1.0, size=f_enc) if random_table else vec

        positives: Dict[str, set] = {}
        for u in users:
            scored = sorted(item_ids, key=lambda i: (-float(user_prefs[u] @ semantic[i]), i))
            positives[u] = set(scored[:positives_per_user])

        dataset = InteractionDataset(
            users=list(users), items=list(item_ids), positives=positives, domain_tag=tag
        )
        split = leave_one_out_split(dataset, seed)

        unseen = []
        unseen_topics = {}
        for t in range(n_topics):
            for j in range(n_unseen_per_topic):
                item = f"{tag}_cold_t{t}_{j:02d}"
                toks = [f"t{t}w{int(x)}" for x in rng.choice(tokens_per_topic, size=tokens_per_item, replace=False)]
                item_tokens[item] = toks
                vec = np.mean([token_vecs[tk] for tk in toks], axis=0) + item_jitter * rng.normal(0.0, 1.0, size=f_enc)
                semantic[item] = vec
                entries[item] = rng.normal(0.0, 1.0, size=f_enc) if random_table else vec
                unseen.append(item)
                unseen_topics[item] = t

        table = EmbeddingTable(dim=f_enc, entries=entries)
        domains[tag] = SynthDomain(
            dataset=dataset,
            split=split,
            table=table,
            item_topics=item_topics,
            item_tokens=item_tokens,
            unseen_items=unseen,
            unseen_topics=unseen_topics,
            semantic=semantic,
        )
    return SynthWorld(users=users, user_topics=user_topics, domains=domains, user_prefs=user_prefs)


def _h(s: str) -> int:
    import zlib

    return zlib.crc32(s.encode("utf-8"))
