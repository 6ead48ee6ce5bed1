"""Numerical check that personalized adapters beat a single shared one.

Synthetic linear instances: a ground-truth global transform with orthonormal
columns and per-client local transforms B_u = B_mean + tau * noise. The
personalized objective is driven to (near) zero by joint gradient descent;
the shared objective has an exact closed-form residual that grows with tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import DivergenceError, ProtocolError
from .rng import substream


@dataclass
class LinearInstance:
    A_star: np.ndarray  # (L, f), orthonormal columns
    B_stars: List[np.ndarray]  # n matrices (f, d)
    tau: float


def make_instance(L: int, f: int, d: int, n: int, tau: float, seed: int) -> LinearInstance:
    if not (L >= f >= d >= 1) or n < 1:
        raise ProtocolError(f"need L >= f >= d >= 1 and n >= 1, got L={L} f={f} d={d} n={n}")
    for attempt in range(10):
        rng = substream(seed, "init", attempt)
        raw = rng.normal(0.0, 1.0, size=(L, f))
        q, _ = np.linalg.qr(raw)
        A_star = q[:, :f]
        if np.linalg.matrix_rank(A_star) == f:
            break
    else:
        raise ProtocolError("could not build a full-rank base transform in 10 attempts")
    B_mean = rng.normal(0.0, 1.0, size=(f, d))
    B_stars = [B_mean + tau * rng.normal(0.0, 1.0, size=(f, d)) for _ in range(n)]
    return LinearInstance(A_star=A_star, B_stars=B_stars, tau=tau)


def objective_personalized(inst: LinearInstance, A: np.ndarray, Bs: List[np.ndarray]) -> float:
    n = len(inst.B_stars)
    return sum(np.sum((A @ B - inst.A_star @ Bstar) ** 2) for B, Bstar in zip(Bs, inst.B_stars)) / n


def fit_personalized(inst: LinearInstance, iters: int = 5000, lr: float = 0.12, seed: int = 0) -> float:
    """Joint gradient descent over the global transform and all local ones."""
    if iters < 1:
        raise ProtocolError("iters must be >= 1")
    L, f = inst.A_star.shape
    d = inst.B_stars[0].shape[1]
    n = len(inst.B_stars)
    rng = substream(seed, "init", 999)
    A = rng.normal(0.0, 0.3, size=(L, f))
    Bs = [rng.normal(0.0, 0.3, size=(f, d)) for _ in range(n)]
    targets = [inst.A_star @ Bstar for Bstar in inst.B_stars]
    prev = objective_personalized(inst, A, Bs)
    for _ in range(iters):
        resids = [A @ B - T for B, T in zip(Bs, targets)]
        dA = sum(2.0 * R @ B.T for R, B in zip(resids, Bs)) / n
        dBs = [2.0 * A.T @ R / n for R in resids]
        A = A - lr * dA
        Bs = [B - lr * dB for B, dB in zip(Bs, dBs)]
        cur = objective_personalized(inst, A, Bs)
        if not np.isfinite(cur) or cur > prev * 10 + 1e3:
            raise DivergenceError("personalized fit diverged; reduce the step size", 0)
        prev = cur
    return float(prev)


def fit_shared(inst: LinearInstance) -> float:
    """Exact minimum of the shared objective.

    With orthonormal ground-truth columns, the best shared product equals the
    projection of the mean target, leaving the spread of the per-client
    transforms around their mean as the residual.
    """
    n = len(inst.B_stars)
    if n == 1:
        return 0.0
    B_mean = sum(inst.B_stars) / n
    return float(sum(np.sum((Bstar - B_mean) ** 2) for Bstar in inst.B_stars) / n)


def fit_shared_iterative(inst: LinearInstance, iters: int = 3000, lr: float = 0.1, seed: int = 0) -> float:
    """Gradient solve of the shared objective, used to cross-check fit_shared."""
    L, f = inst.A_star.shape
    d = inst.B_stars[0].shape[1]
    n = len(inst.B_stars)
    rng = substream(seed, "init", 777)
    A = rng.normal(0.0, 0.3, size=(L, f))
    B = rng.normal(0.0, 0.3, size=(f, d))
    targets = [inst.A_star @ Bstar for Bstar in inst.B_stars]
    for _ in range(iters):
        resids = [A @ B - T for T in targets]
        dA = sum(2.0 * R @ B.T for R in resids) / n
        dB = sum(2.0 * A.T @ R for R in resids) / n
        A = A - lr * dA
        B = B - lr * dB
    return float(sum(np.sum((A @ B - T) ** 2) for T in targets) / n)


def heterogeneity_sweep(
    L: int, f: int, d: int, n: int, taus: List[float], seed: int, iters: int = 5000, lr: float = 0.12
) -> List[Tuple[float, float, float]]:
    """Rows of (tau, personalized terminal loss, shared closed-form residual)."""
    if not taus:
        raise ProtocolError("tau list must be non-empty")
    rows = []
    for tau in taus:
        inst = make_instance(L, f, d, n, tau, seed)
        personalized = fit_personalized(inst, iters=iters, lr=lr, seed=seed)
        shared = fit_shared(inst)
        rows.append((tau, personalized, shared))
    return rows
