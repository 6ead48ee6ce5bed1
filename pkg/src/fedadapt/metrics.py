"""Ranking metrics and leave-one-out model evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .client import ClientState, evaluate_client
from .data import SplitDataset
from .encoder import AdapterStack
from .errors import DomainError, ProtocolError
from .rng import substream


@dataclass
class MetricReport:
    hr: float
    ndcg: float
    k: int
    n_users: int
    domain_tag: str = ""

    def to_record(self) -> str:
        return f"{self.domain_tag},{self.k},{self.n_users},{self.hr:.17g},{self.ndcg:.17g}"


@dataclass
class TransferReport:
    source: MetricReport
    target: MetricReport

    @property
    def delta_hr(self) -> float:
        return transfer_delta(self.source.hr, self.target.hr)

    @property
    def delta_ndcg(self) -> float:
        return transfer_delta(self.source.ndcg, self.target.ndcg)


def hit_rate_at_k(ranks: Sequence[int], k: int) -> float:
    """Fraction of users whose held-out item ranked within the top k."""
    if not ranks:
        raise ProtocolError("empty rank list")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def ndcg_at_k(ranks: Sequence[int], k: int) -> float:
    """Mean 1/log2(rank + 1) for ranks within top k, zero otherwise."""
    if not ranks:
        raise ProtocolError("empty rank list")
    return sum(1.0 / math.log2(r + 1) for r in ranks if r <= k) / len(ranks)


def transfer_delta(source: float, target: float) -> float:
    """Relative drop (source - target) / source from source to target domain."""
    if source <= 0:
        raise DomainError("source metric must be positive")
    return (source - target) / source


def candidate_list(split: SplitDataset, user: str, candidate_size: int, seed: int) -> List[str]:
    """Held-out item plus sampled non-positives; 0 means full ranking."""
    held = split.heldout[user]
    train_pos = split.train.positives.get(user, set())
    pool = [i for i in split.train.items if i not in train_pos and i != held]
    if candidate_size == 0:
        return [held] + pool
    need = candidate_size - 1
    if need > len(pool):
        raise ProtocolError(f"user {user!r}: only {len(pool)} candidates for size {candidate_size}")
    rng = substream(seed, "eval", _h(user))
    idx = rng.choice(len(pool), size=need, replace=False)
    return [held] + [pool[int(i)] for i in idx]


def evaluate_model(
    clients: Dict[str, ClientState],
    adapter: AdapterStack,
    enc,
    split: SplitDataset,
    k: int = 10,
    candidate_size: int = 100,
    seed: int = 0,
    domain_tag: str = "",
) -> MetricReport:
    """Leave-one-out evaluation over all users with held-out items."""
    ranks = []
    for user in sorted(split.heldout):
        if user not in clients:
            raise ProtocolError(f"no client state for user {user!r}")
        cands = candidate_list(split, user, candidate_size, seed)
        ranks.append(evaluate_client(clients[user], adapter, enc, split.heldout[user], cands))
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
