"""Small multi-head-attention transformer with hand-derived backprop.

Architecture (kept deliberately simple, no layer norm):

    X0 = Emb[tokens]                               embedding layer
    per layer: X <- X + MHA(X); X <- X + FFN(X)    residual sublayers

Attention per head: A = softmax(Q K^T / sqrt(dk)), output A V; heads are
slices of the model dimension. The forward pass caches everything needed to
push gradients of losses defined on the embedding output and on the
attention matrices back to every parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .errors import ShapeError
from .linalg import softmax_rows


@dataclass
class LayerParams:
    Wq: np.ndarray
    Wk: np.ndarray
    Wv: np.ndarray
    Wo: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def arrays(self) -> List[np.ndarray]:
        return [self.Wq, self.Wk, self.Wv, self.Wo, self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "LayerParams":
        return LayerParams(*[a.copy() for a in self.arrays()])

    @staticmethod
    def zeros_like(other: "LayerParams") -> "LayerParams":
        return LayerParams(*[np.zeros_like(a) for a in other.arrays()])


@dataclass
class ToyTransformer:
    """Token-level transformer; ``model_dim`` must divide evenly by ``n_heads``."""

    vocab_size: int
    model_dim: int
    n_heads: int
    embedding: np.ndarray  # (vocab_size, model_dim)
    layers: List[LayerParams] = field(default_factory=list)

    def __post_init__(self):
        if self.model_dim % self.n_heads != 0:
            raise ShapeError(f"model_dim {self.model_dim} not divisible by {self.n_heads} heads")
        if self.embedding.shape != (self.vocab_size, self.model_dim):
            raise ShapeError("embedding table shape mismatch")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.n_heads

    def copy(self) -> "ToyTransformer":
        return ToyTransformer(
            self.vocab_size, self.model_dim, self.n_heads, self.embedding.copy(), [l.copy() for l in self.layers]
        )

    def to_bytes(self) -> bytes:
        chunks = [self.embedding.tobytes()]
        for layer in self.layers:
            chunks.extend(a.tobytes() for a in layer.arrays())
        return b"".join(chunks)

    @staticmethod
    def init(
        vocab_size: int,
        model_dim: int,
        n_heads: int,
        n_layers: int,
        ff_dim: int,
        rng: np.random.Generator,
        scale: float = 0.3,
    ) -> "ToyTransformer":
        emb = rng.normal(0.0, 1.0, size=(vocab_size, model_dim))
        layers = []
        for _ in range(n_layers):
            layers.append(
                LayerParams(
                    Wq=rng.normal(0.0, scale, size=(model_dim, model_dim)),
                    Wk=rng.normal(0.0, scale, size=(model_dim, model_dim)),
                    Wv=rng.normal(0.0, scale, size=(model_dim, model_dim)),
                    Wo=rng.normal(0.0, scale, size=(model_dim, model_dim)),
                    W1=rng.normal(0.0, scale, size=(model_dim, ff_dim)),
                    b1=np.zeros(ff_dim),
                    W2=rng.normal(0.0, scale, size=(ff_dim, model_dim)),
                    b2=np.zeros(model_dim),
                )
            )
        return ToyTransformer(vocab_size, model_dim, n_heads, emb, layers)

    # ---------------------------------------------------------------- forward

    def forward(self, tokens: Sequence[int]) -> Dict:
        """Run the stack; returns embedding output, per-layer attention, caches."""
        if len(tokens) < 1:
            raise ShapeError("token sequence must be non-empty")
        tokens = np.asarray(tokens, dtype=np.intp)
        if tokens.min() < 0 or tokens.max() >= self.vocab_size:
            raise ShapeError("token id outside vocabulary")
        L, f, h, dk = len(tokens), self.model_dim, self.n_heads, self.head_dim
        X = self.embedding[tokens]  # (L, f)
        layer_states = [X]
        attention: List[np.ndarray] = []
        caches: List[Dict] = []
        for layer in self.layers:
            Q = (X @ layer.Wq).reshape(L, h, dk)
            K = (X @ layer.Wk).reshape(L, h, dk)
            V = (X @ layer.Wv).reshape(L, h, dk)
            # (h, L, L) attention per head
            S = np.einsum("qhd,khd->hqk", Q, K) / np.sqrt(dk)
            A = softmax_rows(S)
            H = np.einsum("hqk,khd->qhd", A, V).reshape(L, f)
            attn_out = H @ layer.Wo
            Xa = X + attn_out
            ff_pre = Xa @ layer.W1 + layer.b1
            ff_h = np.maximum(ff_pre, 0.0)
            F = ff_h @ layer.W2 + layer.b2
            X_next = Xa + F
            caches.append({"X": X, "Q": Q, "K": K, "V": V, "A": A, "H": H, "Xa": Xa, "ff_pre": ff_pre, "ff_h": ff_h})
            attention.append(A)
            layer_states.append(X_next)
            X = X_next
        return {
            "tokens": tokens,
            "embedding_out": layer_states[0],
            "layer_states": layer_states,
            "attention": attention,
            "caches": caches,
        }

    # --------------------------------------------------------------- backward

    def backward(
        self,
        fwd: Dict,
        d_attention: Sequence[np.ndarray | None],
        d_embedding_out: np.ndarray | None,
    ) -> Dict:
        """Backprop loss gradients given directly on attention matrices and
        on the embedding-layer output.

        ``d_attention[z]`` is the (h, L, L) gradient injected at layer z+1's
        attention matrices (or None); ``d_embedding_out`` is the (L, f)
        gradient at X0. Returns per-layer parameter grads and the embedding
        table gradient.
        """
        tokens = fwd["tokens"]
        L, f, h, dk = len(tokens), self.model_dim, self.n_heads, self.head_dim
        scale = 1.0 / np.sqrt(dk)
        d_layers = [LayerParams.zeros_like(layer) for layer in self.layers]
        dX = np.zeros((L, f))
        for z in reversed(range(self.n_layers)):
            layer, grads, cache = self.layers[z], d_layers[z], fwd["caches"][z]
            # FFN sublayer: X_next = Xa + relu(Xa W1 + b1) W2 + b2
            dF = dX
            grads.W2 += cache["ff_h"].T @ dF
            grads.b2 += dF.sum(axis=0)
            d_ffpre = (dF @ layer.W2.T) * (cache["ff_pre"] > 0.0)
            grads.W1 += cache["Xa"].T @ d_ffpre
            grads.b1 += d_ffpre.sum(axis=0)
            dXa = dX + d_ffpre @ layer.W1.T
            # attention sublayer: Xa = X + (heads concat) Wo
            grads.Wo += cache["H"].T @ dXa
            dH = (dXa @ layer.Wo.T).reshape(L, h, dk)
            A, Q, K, V = cache["A"], cache["Q"], cache["K"], cache["V"]
            dA = np.einsum("qhd,khd->hqk", dH, V)
            if d_attention[z] is not None:
                dA = dA + d_attention[z]
            dV = np.einsum("hqk,qhd->khd", A, dH)
            # softmax backward per row
            dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True))
            dQ = np.einsum("hqk,khd->qhd", dS, K) * scale
            dK = np.einsum("hqk,qhd->khd", dS, Q) * scale
            X = cache["X"]
            dQf, dKf, dVf = dQ.reshape(L, f), dK.reshape(L, f), dV.reshape(L, f)
            grads.Wq += X.T @ dQf
            grads.Wk += X.T @ dKf
            grads.Wv += X.T @ dVf
            dX = dXa + dQf @ layer.Wq.T + dKf @ layer.Wk.T + dVf @ layer.Wv.T
        if d_embedding_out is not None:
            dX = dX + d_embedding_out
        d_emb = np.zeros_like(self.embedding)
        np.add.at(d_emb, tokens, dX)
        return {"layers": d_layers, "embedding": d_emb}

    def apply_gradients(self, grads: Dict, lr: float) -> None:
        self.embedding -= lr * grads["embedding"]
        for layer, g in zip(self.layers, grads["layers"]):
            for a, da in zip(layer.arrays(), g.arrays()):
                a -= lr * da
