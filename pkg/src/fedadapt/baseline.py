"""Federated matrix-factorization baseline with ID-keyed item embeddings.

Server-side free embedding per item id, local user embeddings, the same
summed BCE loss and unweighted-mean aggregation as the main model. Items
never seen in training fall back to a small seeded cold-start vector, which
is exactly why this baseline cannot transfer across disjoint id spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .data import InteractionDataset, SplitDataset, sample_negatives
from .errors import ProtocolError
from .linalg import sigmoid
from .metrics import MetricReport, candidate_list, hit_rate_at_k, ndcg_at_k
from .rng import substream


@dataclass
class IdBaseline:
    e: int
    seed: int
    items: Dict[str, np.ndarray] = field(default_factory=dict)
    user_embeddings: Dict[str, np.ndarray] = field(default_factory=dict)

    def item_vec(self, item_id: str) -> np.ndarray:
        vec = self.items.get(item_id)
        if vec is None:
            # cold default for ids never seen in training
            rng = substream(self.seed, "init", _h("cold:" + item_id))
            vec = 0.1 * rng.normal(0.0, 1.0, size=self.e)
        return vec

    def score(self, user_id: str, item_id: str) -> float:
        p = self.user_embeddings[user_id]
        return sigmoid(float(p @ self.item_vec(item_id)))


def train_id_baseline(
    ds: InteractionDataset,
    e: int,
    rounds: int,
    eta_c: float,
    eta_s: float,
    n_negatives: int,
    fraction: float,
    seed: int,
) -> IdBaseline:
    """Federated MF: local p_u steps, server-aggregated item-embedding steps."""
    model = IdBaseline(e=e, seed=seed)
    init_rng = substream(seed, "init", _h("baseline-items"))
    for item in ds.items:
        model.items[item] = 0.1 * init_rng.normal(0.0, 1.0, size=e)
    for user in ds.users:
        urng = substream(seed, "init", _h("baseline-user:" + user))
        model.user_embeddings[user] = 0.1 * urng.normal(0.0, 1.0, size=e)

    all_users = sorted(ds.users)
    for r in range(rounds):
        k = math.ceil(fraction * len(all_users))
        if k >= len(all_users):
            participants = all_users
        else:
            rng = substream(seed, "sampling", _h("baseline"), r)
            idx = rng.choice(len(all_users), size=k, replace=False)
            participants = sorted(all_users[int(i)] for i in idx)
        item_grad_sum: Dict[str, np.ndarray] = {}
        for user in participants:
            p = model.user_embeddings[user]
            batch: List[Tuple[str, int]] = [(i, 1) for i in sorted(ds.positives[user])]
            if n_negatives > 0:
                negs = sample_negatives(ds, user, n_negatives * len(batch), seed, r)
                batch.extend((i, 0) for i in negs)
            d_p = np.zeros(e)
            local_item_grads: Dict[str, np.ndarray] = {}
            for item, y in batch:
                q = model.items[item]
                y_hat = sigmoid(float(p @ q))
                d_score = y_hat - y
                d_p += d_score * q
                local_item_grads.setdefault(item, np.zeros(e))
                local_item_grads[item] += d_score * p
            model.user_embeddings[user] = p - eta_c * d_p
            for item, g in local_item_grads.items():
                item_grad_sum.setdefault(item, np.zeros(e))
                item_grad_sum[item] += g
        n_part = len(participants)
        for item in sorted(item_grad_sum):
            model.items[item] -= eta_s * item_grad_sum[item] / n_part
    return model


def fit_baseline_users(model: IdBaseline, ds: InteractionDataset, epochs: int, eta_c: float, n_negatives: int, seed: int) -> None:
    """Refit local user embeddings against frozen item embeddings."""
    for user in ds.users:
        urng = substream(seed, "init", _h("baseline-refit:" + user))
        p = 0.1 * urng.normal(0.0, 1.0, size=model.e)
        for epoch in range(epochs):
            batch: List[Tuple[str, int]] = [(i, 1) for i in sorted(ds.positives[user])]
            if n_negatives > 0:
                negs = sample_negatives(ds, user, n_negatives * len(batch), seed, 5_000_000 + epoch)
                batch.extend((i, 0) for i in negs)
            d_p = np.zeros(model.e)
            for item, y in batch:
                q = model.item_vec(item)
                y_hat = sigmoid(float(p @ q))
                d_p += (y_hat - y) * q
            p = p - eta_c * d_p
        model.user_embeddings[user] = p


def rank_by_scores(scores: Dict[str, float], heldout: str) -> int:
    """1-based rank of the held-out item; ties break by ascending item id."""
    if heldout not in scores:
        raise ProtocolError(f"held-out item {heldout!r} not among candidates")
    held = scores[heldout]
    rank = 1
    for c, s in scores.items():
        if c == heldout:
            continue
        if s > held or (s == held and c < heldout):
            rank += 1
    return rank


def evaluate_baseline(
    model: IdBaseline, split: SplitDataset, k: int, candidate_size: int, seed: int, domain_tag: str = ""
) -> MetricReport:
    ranks = []
    for user in sorted(split.heldout):
        cands = candidate_list(split, user, candidate_size, seed)
        scores = {c: model.score(user, c) for c in cands}
        ranks.append(rank_by_scores(scores, split.heldout[user]))
    return MetricReport(
        hr=hit_rate_at_k(ranks, k),
        ndcg=ndcg_at_k(ranks, k),
        k=k,
        n_users=len(ranks),
        domain_tag=domain_tag or split.train.domain_tag,
    )


def _h(s: str) -> int:
    import zlib

    return zlib.crc32(s.encode("utf-8"))
