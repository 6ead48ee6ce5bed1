"""Client-side simulation: local BCE training, adapter gradients, personalization.

Raw interactions and the user embedding never leave a ``ClientState``; the
only values crossing the client boundary are flattened adapter gradients
(``ClientUpdate``) and evaluation ranks. An optional audit hook receives the
exact serialized payload of every upload so tests can verify that contract.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .data import InteractionDataset, sample_negatives
from .encoder import (
    AdapterParams,
    AdapterStack,
    HeadParams,
    block_backward,
    block_forward_cached,
    encode_item,
    predict,
)
from .errors import DivergenceError, ProtocolError
from .linalg import sigmoid

AuditHook = Callable[[str, bytes], None]


@dataclass
class ClientState:
    """One user's private state plus a view of the item universe for sampling."""

    user_id: str
    p_u: np.ndarray
    positives: List[str]
    dataset: InteractionDataset
    head: Optional[HeadParams] = None
    seed: int = 0

    def copy(self) -> "ClientState":
        return ClientState(
            user_id=self.user_id,
            p_u=self.p_u.copy(),
            positives=list(self.positives),
            dataset=self.dataset,
            head=self.head.copy() if self.head is not None else None,
            seed=self.seed,
        )


@dataclass
class ClientUpdate:
    """The only payload a client uploads: flat adapter gradient + batch size."""

    gradient: np.ndarray
    sample_count: int

    def to_bytes(self) -> bytes:
        return struct.pack("<I", self.sample_count) + self.gradient.astype("<f8").tobytes()


def make_head_identity(e: int, shift: float = 4.0) -> HeadParams:
    """Head initialized to the identity on inputs with entries > -shift.

    The bottleneck block cannot express the identity exactly for arbitrary
    inputs, so the ReLU is biased into its linear region.
    """
    return HeadParams(
        W_down=np.eye(e),
        b_down=np.full(e, shift),
        W_up=np.eye(e),
        b_up=np.full(e, -shift),
    )


def _forward_example(state, adapter: AdapterStack, enc, item_id: str):
    """Score one item, caching every activation for the backward pass."""
    x = encode_item(enc, item_id)
    caches = []
    out = x
    for block in adapter.blocks:
        out, cache = block_forward_cached(block, out)
        caches.append(cache)
    g_out = out
    if state.head is not None:
        q, head_cache = block_forward_cached(state.head, g_out)
    else:
        q, head_cache = g_out, None
    score = float(state.p_u @ q)
    y_hat = sigmoid(score)
    return {"x": x, "caches": caches, "g_out": g_out, "q": q, "head_cache": head_cache, "score": score, "y_hat": y_hat}


def local_loss(state: ClientState, adapter: AdapterStack, enc, batch: Sequence[Tuple[str, int]]) -> float:
    """Binary cross-entropy summed over the batch (not averaged)."""
    total = 0.0
    for item_id, y in batch:
        if y not in (0, 1):
            raise ProtocolError(f"label must be 0 or 1, got {y!r}")
        score = _forward_example(state, adapter, enc, item_id)["score"]
        total += _bce_from_score(score, y)
    return float(total)


def _bce_from_score(score: float, y: int) -> float:
    # -[y log(sigmoid(s)) + (1-y) log(1-sigmoid(s))] in softplus form,
    # finite even where sigmoid saturates in float64
    return float(np.logaddexp(0.0, -score if y == 1 else score))


def local_gradients(state: ClientState, adapter: AdapterStack, enc, batch: Sequence[Tuple[str, int]]):
    """Analytic gradients of the summed BCE w.r.t. p_u, adapter, and head."""
    d_p = np.zeros_like(state.p_u)
    d_adapter = [AdapterParams(*[np.zeros_like(a) for a in (b.W_down, b.b_down, b.W_up, b.b_up)]) for b in adapter.blocks]
    d_head = (
        AdapterParams(*[np.zeros_like(a) for a in (state.head.W_down, state.head.b_down, state.head.W_up, state.head.b_up)])
        if state.head is not None
        else None
    )
    loss = 0.0
    for item_id, y in batch:
        fwd = _forward_example(state, adapter, enc, item_id)
        y_hat = fwd["y_hat"]
        loss += _bce_from_score(fwd["score"], y)
        d_score = y_hat - y  # d(BCE)/d(score) for the sigmoid link
        d_p += d_score * fwd["q"]
        d_q = d_score * state.p_u
        if state.head is not None:
            d_gout, hg = block_backward(state.head, fwd["head_cache"], d_q)
            for a, da in zip(
                (d_head.W_down, d_head.b_down, d_head.W_up, d_head.b_up), (hg.W_down, hg.b_down, hg.W_up, hg.b_up)
            ):
                a += da
        else:
            d_gout = d_q
        d_cur = d_gout
        for block, cache, acc in zip(reversed(adapter.blocks), reversed(fwd["caches"]), reversed(d_adapter)):
            d_cur, bg = block_backward(block, cache, d_cur)
            for a, da in zip((acc.W_down, acc.b_down, acc.W_up, acc.b_up), (bg.W_down, bg.b_down, bg.W_up, bg.b_up)):
                a += da
    return float(loss), d_p, d_adapter, d_head


def build_batch(state: ClientState, n_negatives: int, nonce: int) -> List[Tuple[str, int]]:
    """Positives with label 1 plus N freshly sampled negatives per positive."""
    batch: List[Tuple[str, int]] = [(i, 1) for i in sorted(state.positives)]
    if n_negatives > 0:
        negs = sample_negatives(state.dataset, state.user_id, n_negatives * len(state.positives), state.seed, nonce)
        batch.extend((i, 0) for i in negs)
    return batch


def local_round(
    state: ClientState,
    adapter: AdapterStack,
    enc,
    n_negatives: int,
    eta_c: float,
    round_nonce: int = 0,
    local_steps: int = 1,
    co_train_head: bool = False,
    audit: Optional[AuditHook] = None,
) -> Tuple[ClientUpdate, float]:
    """One federated round on this client.

    Runs ``local_steps`` SGD steps on p_u against the adapter snapshot, then
    returns the flattened adapter gradient from the last step plus the local
    loss. The frozen backbone contributes no gradient and none is
    materialized.
    """
    batch = build_batch(state, n_negatives, round_nonce)
    if not batch:
        update = ClientUpdate(np.zeros(adapter.param_count()), 0)
    else:
        first_loss = None
        for _ in range(max(1, local_steps)):
            loss, d_p, d_adapter, d_head = local_gradients(state, adapter, enc, batch)
            if first_loss is None:
                first_loss = loss  # round loss reported at the round's entry state
            if eta_c > 0:
                state.p_u = state.p_u - eta_c * d_p
                if co_train_head and state.head is not None and d_head is not None:
                    _step_block(state.head, d_head, eta_c)
        loss = first_loss
        flat = np.concatenate([g.flatten() for g in d_adapter])
        update = ClientUpdate(flat, len(batch))
    if audit is not None:
        audit(state.user_id, update.to_bytes())
    if not batch:
        return update, 0.0
    return update, loss


def _step_block(block: AdapterParams, grads: AdapterParams, lr: float) -> None:
    block.W_down -= lr * grads.W_down
    block.b_down -= lr * grads.b_down
    block.W_up -= lr * grads.W_up
    block.b_up -= lr * grads.b_up


def pap_train(
    state: ClientState,
    adapter: AdapterStack,
    enc,
    epochs: int,
    eta_c: float,
    n_negatives: int = 4,
    update_p: bool = True,
) -> ClientState:
    """Post-adaptation personalization: local SGD on the head (and p_u).

    The adapter and frozen encoder are never modified; nothing is uploaded.
    """
    state = state.copy()
    if epochs == 0:
        return state
    if state.head is None:
        state.head = make_head_identity(state.p_u.shape[0])
    for epoch in range(epochs):
        batch = build_batch(state, n_negatives, nonce=1_000_000 + epoch)
        loss, d_p, _, d_head = local_gradients(state, adapter, enc, batch)
        if not np.isfinite(loss):
            raise DivergenceError("personalization loss is not finite", epoch)
        _step_block(state.head, d_head, eta_c)
        if update_p:
            state.p_u = state.p_u - eta_c * d_p
    return state


def evaluate_client(
    state: ClientState, adapter: AdapterStack, enc, heldout: str, candidates: Sequence[str]
) -> int:
    """1-based rank of the held-out item among the candidates.

    Ties break by ascending item id so evaluation is deterministic.
    """
    if heldout not in candidates:
        raise ProtocolError(f"held-out item {heldout!r} not among candidates")
    scores = {c: _forward_example(state, adapter, enc, c)["y_hat"] for c in candidates}
    held_score = scores[heldout]
    rank = 1
    for c, s in scores.items():
        if c == heldout:
            continue
        if s > held_score or (s == held_score and c < heldout):
            rank += 1
    return rank
