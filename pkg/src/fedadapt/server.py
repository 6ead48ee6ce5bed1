"""Server-side orchestration: sampling, aggregation, DP, leakage bounds.

Aggregation is the unweighted mean of participant gradients followed by one
server-side step. Client work inside a round may run on a thread pool; the
reduction always happens in ascending client order so results are bitwise
identical regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .client import AuditHook, ClientState, ClientUpdate, local_round
from .encoder import AdapterStack
from .errors import DomainError, ProtocolError, ShapeError
from .rng import substream


@dataclass
class DpConfig:
    clip: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.clip <= 0:
            raise DomainError("clip must be positive")
        if self.sigma < 0:
            raise DomainError("sigma must be nonnegative")

    @property
    def enabled(self) -> bool:
        return self.sigma > 0


@dataclass
class ServerState:
    adapter: AdapterStack
    eta_s: float = 0.1
    fraction: float = 1.0
    seed: int = 0
    round_index: int = 0
    dp: Optional[DpConfig] = None

    def __post_init__(self):
        if self.eta_s < 0:
            raise DomainError("eta_s must be nonnegative")
        if not (0.0 < self.fraction <= 1.0):
            raise DomainError("fraction must be in (0, 1]")


@dataclass
class RoundReport:
    round_index: int
    participants: List[str]
    mean_loss: float
    grad_norm: float
    dp_applied: bool

    def to_record(self) -> str:
        ids = "|".join(self.participants)
        return f"{self.round_index},{ids},{self.mean_loss:.17g},{self.grad_norm:.17g},{int(self.dp_applied)}"


def sample_clients(state: ServerState, client_ids: Sequence[str], round_index: int) -> List[str]:
    """Uniform sample without replacement of ceil(fraction * n) clients."""
    n = len(client_ids)
    if n < 1:
        raise ProtocolError("no clients to sample from")
    k = math.ceil(state.fraction * n)
    ordered = sorted(client_ids)
    if k >= n:
        return ordered
    rng = substream(state.seed, "sampling", round_index)
    idx = rng.choice(n, size=k, replace=False)
    return sorted(ordered[int(i)] for i in idx)


def aggregate_and_update(state: ServerState, updates: Sequence[ClientUpdate]) -> np.ndarray:
    """theta <- theta - eta_s * mean(gradients); returns the mean gradient."""
    if not updates:
        raise ProtocolError("cannot aggregate an empty update list")
    expected = state.adapter.param_count()
    mean = np.zeros(expected)
    for u in updates:
        if u.gradient.shape != (expected,):
            raise ShapeError(f"update length {u.gradient.shape} != adapter param count {expected}")
        mean += u.gradient
    mean /= len(updates)
    new_flat = state.adapter.flatten() - state.eta_s * mean
    state.adapter = state.adapter.unflatten_like(new_flat)
    return mean


def apply_dp(update: ClientUpdate, clip: float, sigma: float, rng: np.random.Generator) -> ClientUpdate:
    """Clip to L2 norm <= clip, then add N(0, (sigma*clip)^2) per coordinate."""
    if clip <= 0:
        raise DomainError("clip must be positive")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    g = update.gradient
    norm = float(np.linalg.norm(g))
    if norm > clip:
        g = g * (clip / norm)
    if sigma > 0:
        g = g + rng.normal(0.0, sigma * clip, size=g.shape)
    return ClientUpdate(g, update.sample_count)


def mi_bound_quantized(f: int, d: int, C: float, delta_q: float) -> float:
    """Leakage bound in bits for value range [-C, C] at resolution delta_q."""
    if f < 1 or d < 1:
        raise DomainError("dimensions must be positive")
    if C <= 0:
        raise DomainError("C must be positive")
    if not (0 < delta_q <= 2 * C):
        raise DomainError(f"resolution must be in (0, 2C]; got {delta_q}")
    return f * d * math.log2(2 * C / delta_q)


def mi_bound_dp(epsilon: float, delta: float) -> float:
    """Leakage bound under an (epsilon, delta)-DP release: epsilon^2 + delta."""
    if epsilon < 0 or delta < 0:
        raise DomainError("epsilon and delta must be nonnegative")
    return epsilon**2 + delta


@dataclass
class TrainConfig:
    rounds: int = 30
    n_negatives: int = 4
    eta_c: float = 0.05
    local_steps: int = 3
    threads: int = 1
    co_train_head: bool = False


def run_training(
    server: ServerState,
    clients: Dict[str, ClientState],
    enc,
    cfg: TrainConfig,
    audit: Optional[AuditHook] = None,
) -> Tuple[ServerState, List[RoundReport]]:
    """Federated loop: sample -> local rounds -> optional DP -> aggregate."""
    if cfg.rounds < 1:
        raise ProtocolError("rounds must be >= 1")
    reports: List[RoundReport] = []
    all_ids = sorted(clients)
    for _ in range(cfg.rounds):
        r = server.round_index
        participants = sample_clients(server, all_ids, r)
        snapshot = server.adapter.copy()

        def work(uid: str, r=r, snapshot=snapshot):
            return local_round(
                clients[uid],
                snapshot,
                enc,
                cfg.n_negatives,
                cfg.eta_c,
                round_nonce=r,
                local_steps=cfg.local_steps,
                co_train_head=cfg.co_train_head,
                audit=audit,
            )

        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(work, participants))
        else:
            results = [work(uid) for uid in participants]
        updates = [u for u, _ in results]
        losses = [l for _, l in results]
        dp_applied = server.dp is not None and server.dp.enabled
        if server.dp is not None:
            dp_rng = substream(server.seed, "dp", r)
            updates = [apply_dp(u, server.dp.clip, server.dp.sigma, dp_rng) for u in updates]
        mean_grad = aggregate_and_update(server, updates)
        reports.append(
            RoundReport(
                round_index=r,
                participants=participants,
                mean_loss=float(np.mean(losses)) if losses else 0.0,
                grad_norm=float(np.linalg.norm(mean_grad)),
                dp_applied=dp_applied,
            )
        )
        server.round_index += 1
    return server, reports
