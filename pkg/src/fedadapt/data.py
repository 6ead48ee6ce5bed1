"""Interaction-log parsing, k-core filtering, splits, and negative sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set

from .errors import InsufficientCandidatesError, ParseError, ProtocolError
from .rng import substream


@dataclass(frozen=True)
class Interaction:
    user_id: str
    item_id: str
    timestamp: Optional[int] = None


@dataclass
class InteractionDataset:
    """Implicit-feedback dataset: per-user positive item sets plus id universes.

    ``users`` and ``items`` are ordered; positives reference only listed ids.
    """

    users: List[str]
    items: List[str]
    positives: Dict[str, Set[str]]
    timestamps: Dict[tuple, int] = field(default_factory=dict)
    domain_tag: str = ""

    def __post_init__(self):
        item_set = set(self.items)
        for user, pos in self.positives.items():
            if user not in set(self.users):
                raise ProtocolError(f"positives reference unknown user {user!r}")
            if not pos:
                raise ProtocolError(f"user {user!r} retained with empty positive set")
            unknown = pos - item_set
            if unknown:
                raise ProtocolError(f"positives reference unknown items {sorted(unknown)[:3]}")

    @property
    def n_interactions(self) -> int:
        return sum(len(p) for p in self.positives.values())


@dataclass
class SplitDataset:
    train: InteractionDataset
    heldout: Dict[str, str]


def parse_interactions(lines: Iterable[str]) -> List[Interaction]:
    """Parse tab-separated `user<TAB>item[<TAB>timestamp]` records.

    Duplicate (user, item) pairs collapse to one record keeping the earliest
    timestamp; output preserves first-occurrence order.
    """
    seen: Dict[tuple, int] = {}
    records: List[Interaction] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
            raise ParseError(f"expected `user<TAB>item[<TAB>timestamp]`, got {line!r}", lineno)
        ts: Optional[int] = None
        if len(parts) == 3:
            try:
                ts = int(parts[2])
            except ValueError:
                raise ParseError(f"bad timestamp {parts[2]!r}", lineno) from None
        key = (parts[0], parts[1])
        if key in seen:
            idx = seen[key]
            old = records[idx]
            if ts is not None and (old.timestamp is None or ts < old.timestamp):
                records[idx] = Interaction(old.user_id, old.item_id, ts)
            continue
        seen[key] = len(records)
        records.append(Interaction(parts[0], parts[1], ts))
    return records


def filter_kcore(
    records: List[Interaction], min_user: int = 20, min_item: int = 30, domain_tag: str = ""
) -> InteractionDataset:
    """Iteratively drop users/items below the thresholds until a fixed point."""
    if min_user < 1 or min_item < 1:
        raise ValueError("thresholds must be >= 1")
    user_items: Dict[str, Set[str]] = {}
    item_users: Dict[str, Set[str]] = {}
    for r in records:
        user_items.setdefault(r.user_id, set()).add(r.item_id)
        item_users.setdefault(r.item_id, set()).add(r.user_id)
    changed = True
    while changed:
        changed = False
        bad_users = [u for u, its in user_items.items() if len(its) < min_user]
        for u in bad_users:
            for i in user_items.pop(u):
                item_users[i].discard(u)
            changed = True
        bad_items = [i for i, us in item_users.items() if len(us) < min_item]
        for i in bad_items:
            for u in item_users.pop(i):
                user_items[u].discard(i)
            changed = True
        empty_users = [u for u, its in user_items.items() if not its]
        for u in empty_users:
            del user_items[u]
            changed = True

    users = sorted(user_items)
    items = sorted(item_users)
    positives = {u: set(its) for u, its in user_items.items()}
    timestamps = {
        (r.user_id, r.item_id): r.timestamp
        for r in records
        if r.timestamp is not None and r.user_id in positives and r.item_id in positives[r.user_id]
    }
    return InteractionDataset(users=users, items=items, positives=positives, timestamps=timestamps, domain_tag=domain_tag)


def dataset_from_records(records: List[Interaction], domain_tag: str = "") -> InteractionDataset:
    """Dataset without any filtering (thresholds of 1)."""
    return filter_kcore(records, min_user=1, min_item=1, domain_tag=domain_tag)


def leave_one_out_split(ds: InteractionDataset, seed: int) -> SplitDataset:
    """Hold out one positive per user: latest timestamp if present, else seeded uniform."""
    heldout: Dict[str, str] = {}
    train_pos: Dict[str, Set[str]] = {}
    for user in ds.users:
        pos = ds.positives[user]
        if len(pos) < 2:
            raise ProtocolError(f"user {user!r} has fewer than 2 positives; cannot split")
        stamped = [(it, ds.timestamps.get((user, it))) for it in sorted(pos)]
        with_ts = [p for p in stamped if p[1] is not None]
        if len(with_ts) == len(stamped):
            held = max(with_ts, key=lambda p: (p[1], p[0]))[0]
        else:
            rng = substream(seed, "split", _stable_hash(user))
            ordered = sorted(pos)
            held = ordered[int(rng.integers(len(ordered)))]
        heldout[user] = held
        train_pos[user] = pos - {held}
    train = InteractionDataset(
        users=list(ds.users),
        items=list(ds.items),
        positives=train_pos,
        timestamps=dict(ds.timestamps),
        domain_tag=ds.domain_tag,
    )
    return SplitDataset(train=train, heldout=heldout)


def sample_negatives(ds: InteractionDataset, user_id: str, n: int, seed: int, nonce: int = 0) -> List[str]:
    """Uniform sample without replacement from the user's non-positive items."""
    if n == 0:
        return []
    pos = ds.positives.get(user_id, set())
    candidates = [i for i in ds.items if i not in pos]
    if len(candidates) < n:
        raise InsufficientCandidatesError(
            f"user {user_id!r}: requested {n} negatives, only {len(candidates)} candidates"
        )
    rng = substream(seed, "negatives", _stable_hash(user_id), nonce)
    idx = rng.choice(len(candidates), size=n, replace=False)
    return [candidates[int(i)] for i in idx]


def _stable_hash(s: str) -> int:
    import zlib

    return zlib.crc32(s.encode("utf-8"))
