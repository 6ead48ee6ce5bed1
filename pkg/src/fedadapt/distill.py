"""Hierarchical distillation of a deep toy transformer into a shallow one.

Pairs the student embedding layer with the teacher embedding layer through a
learnable projection, and each student attention layer z with teacher layer
3z (configurable multiplier). Losses are mean squared errors over matrix
entries; training is full-batch gradient descent on the student and the
projection while the teacher stays frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DivergenceError, ShapeError
from .toytf import ToyTransformer


@dataclass
class HkdConfig:
    layer_multiplier: int = 3
    attn_weight: float = 1.0
    embed_weight: float = 1.0
    epochs: int = 200
    lr: float = 4.0


def layer_map(z: int, teacher_layers: int, multiplier: int = 3) -> int:
    """Student layer z distills from teacher layer multiplier*z (0 = embedding)."""
    target = multiplier * z
    if z < 0 or target > teacher_layers:
        raise ConfigError(f"layer map {multiplier}*{z}={target} out of range for {teacher_layers}-layer teacher")
    return target


def attention_matrices(model: ToyTransformer, tokens: Sequence[int]) -> List[np.ndarray]:
    """Per-layer (heads, L, L) row-stochastic attention matrices."""
    return model.forward(tokens)["attention"]


def attn_loss(student_A: np.ndarray, teacher_A: np.ndarray) -> float:
    """Mean squared difference of attention matrices, averaged over heads."""
    student_A = np.asarray(student_A, dtype=np.float64)
    teacher_A = np.asarray(teacher_A, dtype=np.float64)
    if student_A.shape != teacher_A.shape:
        raise ShapeError(f"attention shapes differ: {student_A.shape} vs {teacher_A.shape}")
    h = student_A.shape[0]
    diff = student_A - teacher_A
    # (1/h) sum over heads of the per-head mean over L^2 entries
    return float((diff**2).sum() / (h * diff.shape[1] * diff.shape[2]))


def embed_loss(E_stu: np.ndarray, W: np.ndarray, E_tea: np.ndarray) -> float:
    """MSE between projected student embeddings and teacher embeddings."""
    if E_stu.shape[1] != W.shape[0] or W.shape[1] != E_tea.shape[1] or E_stu.shape[0] != E_tea.shape[0]:
        raise ShapeError(f"shapes do not conform: {E_stu.shape} x {W.shape} vs {E_tea.shape}")
    diff = E_stu @ W - E_tea
    return float((diff**2).mean())


def hkd_loss(
    student: ToyTransformer,
    teacher: ToyTransformer,
    W: np.ndarray,
    tokens: Sequence[int],
    cfg: HkdConfig,
) -> float:
    """Sum over student layers: embedding loss at z=0, attention loss above."""
    s_fwd = student.forward(tokens)
    t_fwd = teacher.forward(tokens)
    return _hkd_from_forwards(s_fwd, t_fwd, W, teacher.n_layers, student.n_layers, cfg)[0]


def _hkd_from_forwards(s_fwd, t_fwd, W, teacher_layers, student_layers, cfg) -> Tuple[float, List]:
    terms = []
    total = cfg.embed_weight * embed_loss(s_fwd["embedding_out"], W, t_fwd["embedding_out"])
    terms.append(total)
    for z in range(1, student_layers + 1):
        t_layer = layer_map(z, teacher_layers, cfg.layer_multiplier)
        term = cfg.attn_weight * attn_loss(s_fwd["attention"][z - 1], t_fwd["attention"][t_layer - 1])
        terms.append(term)
        total += term
    return total, terms


def hkd_loss_and_grads(
    student: ToyTransformer,
    teacher: ToyTransformer,
    W: np.ndarray,
    tokens: Sequence[int],
    cfg: HkdConfig,
) -> Tuple[float, Dict, np.ndarray]:
    """Loss plus gradients w.r.t. all student parameters and the projection."""
    s_fwd = student.forward(tokens)
    t_fwd = teacher.forward(tokens)
    loss, _ = _hkd_from_forwards(s_fwd, t_fwd, W, teacher.n_layers, student.n_layers, cfg)

    E_stu, E_tea = s_fwd["embedding_out"], t_fwd["embedding_out"]
    L, f_tea = E_tea.shape
    resid = E_stu @ W - E_tea
    dW = cfg.embed_weight * 2.0 / (L * f_tea) * (E_stu.T @ resid)
    d_embedding_out = cfg.embed_weight * 2.0 / (L * f_tea) * (resid @ W.T)

    d_attention: List[np.ndarray | None] = [None] * student.n_layers
    for z in range(1, student.n_layers + 1):
        t_layer = layer_map(z, teacher.n_layers, cfg.layer_multiplier)
        A_s = s_fwd["attention"][z - 1]
        A_t = t_fwd["attention"][t_layer - 1]
        h = A_s.shape[0]
        d_attention[z - 1] = cfg.attn_weight * 2.0 / (h * A_s.shape[1] * A_s.shape[2]) * (A_s - A_t)

    student_grads = student.backward(s_fwd, d_attention, d_embedding_out)
    return loss, student_grads, dW


def distill_train(
    teacher: ToyTransformer,
    student: ToyTransformer,
    W: np.ndarray,
    corpus: Sequence[Sequence[int]],
    cfg: HkdConfig,
) -> Tuple[ToyTransformer, np.ndarray, List[float]]:
    """Full-batch gradient descent against the distillation loss.

    Returns the trained student, projection, and per-epoch mean loss trace.
    The teacher is never touched.
    """
    if not corpus:
        raise ConfigError("corpus must be non-empty")
    student = student.copy()
    W = np.array(W, dtype=np.float64)
    trace: List[float] = []
    n = len(corpus)
    for epoch in range(cfg.epochs):
        total = 0.0
        acc_layers = None
        acc_emb = np.zeros_like(student.embedding)
        acc_W = np.zeros_like(W)
        # ascending corpus order keeps the accumulation deterministic
        for tokens in corpus:
            loss, grads, dW = hkd_loss_and_grads(student, teacher, W, tokens, cfg)
            total += loss
            acc_emb += grads["embedding"]
            acc_W += dW
            if acc_layers is None:
                acc_layers = grads["layers"]
            else:
                for acc, g in zip(acc_layers, grads["layers"]):
                    for a, da in zip(acc.arrays(), g.arrays()):
                        a += da
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise DivergenceError("distillation loss is not finite", epoch)
        trace.append(mean_loss)
        student.apply_gradients({"layers": acc_layers, "embedding": acc_emb}, cfg.lr / n)
        W -= (cfg.lr / n) * acc_W
    return student, W, trace


def build_vocab(lines: Sequence[str]) -> Dict[str, int]:
    """Whitespace-token vocabulary in first-occurrence order."""
    vocab: Dict[str, int] = {}
    for line in lines:
        for tok in line.split():
            if tok not in vocab:
                vocab[tok] = len(vocab)
    return vocab


def tokenize_corpus(lines: Sequence[str]) -> Tuple[List[List[int]], Dict[str, int]]:
    """Corpus file lines -> token id sequences plus the vocabulary map."""
    vocab = build_vocab(lines)
    seqs = [[vocab[t] for t in line.split()] for line in lines if line.split()]
    return seqs, vocab
