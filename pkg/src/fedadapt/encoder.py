"""Item representation stack: frozen encoder, bottleneck adapter, local head.

The adapter is a two-layer bottleneck MLP (down-project, ReLU, up-project).
Deeper adapter stacks chain additional blocks of the same shape family. The
local head reuses the block structure acting e -> e; a ``None`` head means
the identity (personalization disabled).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import MissingItemError, ShapeError
from .linalg import sigmoid
from .tfre import EmbeddingTable


@dataclass
class AdapterParams:
    """One bottleneck block: in_dim -> d -> out_dim with ReLU in between."""

    W_down: np.ndarray  # (in_dim, d)
    b_down: np.ndarray  # (d,)
    W_up: np.ndarray  # (d, out_dim)
    b_up: np.ndarray  # (out_dim,)

    def __post_init__(self):
        if self.W_down.ndim != 2 or self.W_up.ndim != 2:
            raise ShapeError("weight matrices must be 2-d")
        in_dim, d = self.W_down.shape
        d2, out_dim = self.W_up.shape
        if d != d2 or self.b_down.shape != (d,) or self.b_up.shape != (out_dim,):
            raise ShapeError("inconsistent block shapes")
        if d < 1:
            raise ShapeError("bottleneck dimension must be >= 1")
        if d > in_dim:
            raise ShapeError(f"bottleneck d={d} exceeds input dim {in_dim}")

    @property
    def in_dim(self) -> int:
        return self.W_down.shape[0]

    @property
    def bottleneck(self) -> int:
        return self.W_down.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W_up.shape[1]

    def param_count(self) -> int:
        in_dim, d, out_dim = self.in_dim, self.bottleneck, self.out_dim
        return in_dim * d + d + d * out_dim + out_dim

    def copy(self) -> "AdapterParams":
        return AdapterParams(self.W_down.copy(), self.b_down.copy(), self.W_up.copy(), self.b_up.copy())

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.W_down.ravel(), self.b_down, self.W_up.ravel(), self.b_up])

    @staticmethod
    def unflatten(flat: np.ndarray, in_dim: int, d: int, out_dim: int) -> "AdapterParams":
        expected = in_dim * d + d + d * out_dim + out_dim
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (expected,):
            raise ShapeError(f"expected {expected} scalars, got {flat.shape}")
        o = 0
        W_down = flat[o : o + in_dim * d].reshape(in_dim, d); o += in_dim * d
        b_down = flat[o : o + d].copy(); o += d
        W_up = flat[o : o + d * out_dim].reshape(d, out_dim); o += d * out_dim
        b_up = flat[o:].copy()
        return AdapterParams(W_down.copy(), b_down, W_up, b_up)

    @staticmethod
    def init(in_dim: int, d: int, out_dim: int, rng: np.random.Generator, scale: float = 0.2) -> "AdapterParams":
        return AdapterParams(
            W_down=rng.normal(0.0, scale, size=(in_dim, d)),
            b_down=np.zeros(d),
            W_up=rng.normal(0.0, scale, size=(d, out_dim)),
            b_up=np.zeros(out_dim),
        )


# A head has the same structure as an adapter block, acting e -> e.
HeadParams = AdapterParams


def block_forward(block: AdapterParams, x: np.ndarray) -> np.ndarray:
    if x.shape != (block.in_dim,):
        raise ShapeError(f"input dim {x.shape} does not match block in_dim {block.in_dim}")
    hidden = np.maximum(block.W_down.T @ x + block.b_down, 0.0)
    return block.W_up.T @ hidden + block.b_up


def block_forward_cached(block: AdapterParams, x: np.ndarray) -> Tuple[np.ndarray, dict]:
    """Forward pass keeping activations needed for the backward pass."""
    if x.shape != (block.in_dim,):
        raise ShapeError(f"input dim {x.shape} does not match block in_dim {block.in_dim}")
    pre = block.W_down.T @ x + block.b_down
    hidden = np.maximum(pre, 0.0)
    out = block.W_up.T @ hidden + block.b_up
    return out, {"x": x, "pre": pre, "hidden": hidden}


def block_backward(block: AdapterParams, cache: dict, d_out: np.ndarray) -> Tuple[np.ndarray, AdapterParams]:
    """Backprop one block: returns (d_input, parameter gradients)."""
    hidden, pre, x = cache["hidden"], cache["pre"], cache["x"]
    dW_up = np.outer(hidden, d_out)
    db_up = d_out.copy()
    d_hidden = block.W_up @ d_out
    d_pre = d_hidden * (pre > 0.0)
    dW_down = np.outer(x, d_pre)
    db_down = d_pre.copy()
    d_x = block.W_down @ d_pre
    return d_x, AdapterParams(dW_down, db_down, dW_up, db_up)


@dataclass
class AdapterStack:
    """Chain of bottleneck blocks: f_enc -> e, then e -> e for extra layers."""

    blocks: List[AdapterParams]

    def __post_init__(self):
        if not self.blocks:
            raise ShapeError("adapter stack needs at least one block")
        for prev, nxt in zip(self.blocks, self.blocks[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeError("adapter blocks do not chain")

    @property
    def in_dim(self) -> int:
        return self.blocks[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.blocks[-1].out_dim

    def param_count(self) -> int:
        return sum(b.param_count() for b in self.blocks)

    def copy(self) -> "AdapterStack":
        return AdapterStack([b.copy() for b in self.blocks])

    def flatten(self) -> np.ndarray:
        return np.concatenate([b.flatten() for b in self.blocks])

    def unflatten_like(self, flat: np.ndarray) -> "AdapterStack":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.param_count(),):
            raise ShapeError(f"expected {self.param_count()} scalars, got {flat.shape}")
        blocks = []
        o = 0
        for b in self.blocks:
            n = b.param_count()
            blocks.append(AdapterParams.unflatten(flat[o : o + n], b.in_dim, b.bottleneck, b.out_dim))
            o += n
        return AdapterStack(blocks)

    @staticmethod
    def init(f_enc: int, d: int, e: int, layers: int, rng: np.random.Generator, scale: float = 0.2) -> "AdapterStack":
        if layers < 1:
            raise ShapeError("adapter needs at least one layer")
        blocks = [AdapterParams.init(f_enc, d, e, rng, scale)]
        for _ in range(layers - 1):
            blocks.append(AdapterParams.init(e, min(d, e), e, rng, scale))
        return AdapterStack(blocks)


def adapter_forward(adapter: AdapterStack | AdapterParams, x: np.ndarray) -> np.ndarray:
    """Map a frozen-encoder vector through the trainable adapter."""
    if isinstance(adapter, AdapterParams):
        return block_forward(adapter, x)
    out = x
    for b in adapter.blocks:
        out = block_forward(b, out)
    return out


def head_forward(head: Optional[HeadParams], g_out: np.ndarray) -> np.ndarray:
    """Local head; ``None`` means personalization disabled (identity)."""
    if head is None:
        return g_out
    return block_forward(head, g_out)


def predict(p_u: np.ndarray, q_i: np.ndarray) -> float:
    """Preference score: sigmoid of the inner product, strictly in (0, 1)."""
    if p_u.shape != q_i.shape:
        raise ShapeError(f"user dim {p_u.shape} vs item dim {q_i.shape}")
    return sigmoid(float(p_u @ q_i))


def adapter_param_count(adapter: AdapterStack | AdapterParams) -> int:
    return adapter.param_count()


class TableEncoder:
    """Frozen encoder backed by a precomputed embedding table."""

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.out_dim = table.dim

    def encode_item(self, item_id: str) -> np.ndarray:
        return self.table.lookup(item_id)

    def known_items(self) -> Sequence[str]:
        return list(self.table.entries)


class ToyTextEncoder:
    """Frozen encoder running a toy transformer over item token sequences.

    Pools by taking the mean over final-layer token states. The manifest maps
    item_id -> token id sequence; the model weights never change.
    """

    def __init__(self, model, manifest: dict):
        self.model = model
        self.manifest = dict(manifest)
        self.out_dim = model.model_dim

    def encode_item(self, item_id: str) -> np.ndarray:
        if item_id not in self.manifest:
            raise MissingItemError(f"item {item_id!r} not in token manifest")
        tokens = self.manifest[item_id]
        states = self.model.forward(tokens)["layer_states"][-1]
        return states.mean(axis=0)

    def known_items(self) -> Sequence[str]:
        return list(self.manifest)


def encode_item(enc, item_id: str) -> np.ndarray:
    return enc.encode_item(item_id)


def item_embedding(enc, adapter: AdapterStack, head: Optional[HeadParams], item_id: str) -> np.ndarray:
    """Full item pipeline: frozen encode -> adapter -> (optional) head."""
    return head_forward(head, adapter_forward(adapter, encode_item(enc, item_id)))
