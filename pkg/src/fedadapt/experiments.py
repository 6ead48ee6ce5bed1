"""End-to-end experiment protocols built from the lower-level modules.

Each protocol is deterministic given its config and returns plain report
dataclasses; the CLI is a thin wrapper that serializes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .baseline import IdBaseline, evaluate_baseline, fit_baseline_users, rank_by_scores, train_id_baseline
from .client import ClientState, build_batch, local_gradients, pap_train
from .data import SplitDataset
from .encoder import AdapterStack, TableEncoder, item_embedding
from .errors import MissingItemError, ProtocolError
from .linalg import sigmoid
from .metrics import MetricReport, TransferReport, evaluate_model, hit_rate_at_k, ndcg_at_k
from .rng import substream
from .server import DpConfig, RoundReport, ServerState, TrainConfig, run_training
from .synth import SynthDomain, SynthWorld


@dataclass
class PipelineConfig:
    """Hyperparameters for one federated run (and its evaluation)."""

    seed: int = 0
    e: int = 8
    f_enc: int = 8
    d: int = 4
    adapter_layers: int = 1
    rounds: int = 30
    fraction: float = 1.0
    eta_c: float = 0.05
    eta_s: float = 0.01
    n_negatives: int = 4
    local_steps: int = 3
    pap_epochs: int = 30
    pap_eta: float = 0.002
    baseline_eta_s: float = 0.5
    use_pap: bool = True
    use_fat: bool = True
    target_fit_epochs: int = 10
    k: int = 10
    candidate_size: int = 0
    threads: int = 1
    dp: Optional[DpConfig] = None


def make_clients(split: SplitDataset, cfg: PipelineConfig) -> Dict[str, ClientState]:
    clients: Dict[str, ClientState] = {}
    for user in split.train.users:
        rng = substream(cfg.seed, "init", _h("user:" + user))
        clients[user] = ClientState(
            user_id=user,
            p_u=0.1 * rng.normal(0.0, 1.0, size=cfg.e),
            positives=sorted(split.train.positives[user]),
            dataset=split.train,
            seed=cfg.seed,
        )
    return clients


def init_adapter(cfg: PipelineConfig) -> AdapterStack:
    rng = substream(cfg.seed, "init", _h("adapter"))
    return AdapterStack.init(cfg.f_enc, cfg.d, cfg.e, cfg.adapter_layers, rng)


@dataclass
class TrainedModel:
    adapter: AdapterStack
    clients: Dict[str, ClientState]
    encoder: TableEncoder
    reports: List[RoundReport] = field(default_factory=list)


def train_domain(domain: SynthDomain, cfg: PipelineConfig, audit=None) -> TrainedModel:
    """Federated adapter tuning on one domain, then optional personalization."""
    enc = TableEncoder(domain.table)
    clients = make_clients(domain.split, cfg)
    adapter = init_adapter(cfg)
    reports: List[RoundReport] = []
    if cfg.use_fat and cfg.rounds > 0:
        server = ServerState(adapter=adapter, eta_s=cfg.eta_s, fraction=cfg.fraction, seed=cfg.seed, dp=cfg.dp)
        tc = TrainConfig(
            rounds=cfg.rounds,
            n_negatives=cfg.n_negatives,
            eta_c=cfg.eta_c,
            local_steps=cfg.local_steps,
            threads=cfg.threads,
        )
        server, reports = run_training(server, clients, enc, tc, audit=audit)
        adapter = server.adapter
    if cfg.use_pap and cfg.pap_epochs > 0:
        for user in sorted(clients):
            clients[user] = pap_train(clients[user], adapter, enc, cfg.pap_epochs, cfg.pap_eta, cfg.n_negatives)
    return TrainedModel(adapter=adapter, clients=clients, encoder=enc, reports=reports)


def fit_user_embeddings(
    clients: Dict[str, ClientState], adapter: AdapterStack, enc, epochs: int, eta_c: float, n_negatives: int
) -> None:
    """Local p_u-only fitting against a frozen adapter (no head, no upload)."""
    for user in sorted(clients):
        state = clients[user]
        for epoch in range(epochs):
            batch = build_batch(state, n_negatives, nonce=2_000_000 + epoch)
            _, d_p, _, _ = local_gradients(state, adapter, enc, batch)
            state.p_u = state.p_u - eta_c * d_p


def adapt_to_domain(adapter: AdapterStack, domain: SynthDomain, cfg: PipelineConfig) -> TrainedModel:
    """Target-side protocol: freeze encoder+adapter, refit p_u (and heads)."""
    enc = TableEncoder(domain.table)
    clients = make_clients(domain.split, cfg)
    fit_user_embeddings(clients, adapter, enc, cfg.target_fit_epochs, cfg.eta_c, cfg.n_negatives)
    if cfg.use_pap and cfg.pap_epochs > 0:
        for user in sorted(clients):
            clients[user] = pap_train(clients[user], adapter, enc, cfg.pap_epochs, cfg.pap_eta, cfg.n_negatives)
    return TrainedModel(adapter=adapter, clients=clients, encoder=enc)


def run_transfer(world: SynthWorld, source_tag: str, target_tag: str, cfg: PipelineConfig) -> TransferReport:
    """Train on the source domain, adapt locally on the target, report both."""
    source = world.domains[source_tag]
    target = world.domains[target_tag]
    trained = train_domain(source, cfg)
    src_report = evaluate_model(
        trained.clients, trained.adapter, trained.encoder, source.split, cfg.k, cfg.candidate_size, cfg.seed, source_tag
    )
    adapted = adapt_to_domain(trained.adapter, target, cfg)
    tgt_report = evaluate_model(
        adapted.clients, adapted.adapter, adapted.encoder, target.split, cfg.k, cfg.candidate_size, cfg.seed, target_tag
    )
    return TransferReport(source=src_report, target=tgt_report)


def run_baseline_transfer(world: SynthWorld, source_tag: str, target_tag: str, cfg: PipelineConfig) -> TransferReport:
    """Same protocol for the ID baseline; target items fall back to cold init."""
    source = world.domains[source_tag]
    target = world.domains[target_tag]
    model = train_id_baseline(
        source.split.train, cfg.e, cfg.rounds, cfg.eta_c, cfg.baseline_eta_s, cfg.n_negatives, cfg.fraction, cfg.seed
    )
    src_report = evaluate_baseline(model, source.split, cfg.k, cfg.candidate_size, cfg.seed, source_tag)
    fit_baseline_users(model, target.split.train, cfg.target_fit_epochs, cfg.eta_c, cfg.n_negatives, cfg.seed)
    tgt_report = evaluate_baseline(model, target.split, cfg.k, cfg.candidate_size, cfg.seed, target_tag)
    return TransferReport(source=src_report, target=tgt_report)


def _cold_heldout(domain: SynthDomain, world: SynthWorld, user: str, seed: int) -> str:
    topic = world.user_topics[user]
    topical = [i for i in domain.unseen_items if domain.unseen_topics[i] == topic]
    if not topical:
        raise ProtocolError(f"no unseen items for topic {topic}")
    rng = substream(seed, "eval", _h("cold:" + user))
    return topical[int(rng.integers(len(topical)))]


def cold_start_eval_text(model: TrainedModel, domain: SynthDomain, world: SynthWorld, cfg: PipelineConfig) -> MetricReport:
    """Rank a held-out unseen item against all unseen items, text pipeline."""
    for item in domain.unseen_items:
        if item not in domain.table:
            raise MissingItemError(f"unseen item {item!r} lacks an embedding")
    ranks = []
    for user in sorted(model.clients):
        held = _cold_heldout(domain, world, user, cfg.seed)
        state = model.clients[user]
        scores = {}
        for item in domain.unseen_items:
            q = item_embedding(model.encoder, model.adapter, state.head, item)
            scores[item] = sigmoid(float(state.p_u @ q))
        ranks.append(rank_by_scores(scores, held))
    return MetricReport(
        hr=hit_rate_at_k(ranks, cfg.k), ndcg=ndcg_at_k(ranks, cfg.k), k=cfg.k, n_users=len(ranks),
        domain_tag=domain.dataset.domain_tag + ":cold",
    )


def cold_start_eval_baseline(model: IdBaseline, domain: SynthDomain, world: SynthWorld, cfg: PipelineConfig) -> MetricReport:
    ranks = []
    for user in sorted(model.user_embeddings):
        held = _cold_heldout(domain, world, user, cfg.seed)
        scores = {item: model.score(user, item) for item in domain.unseen_items}
        ranks.append(rank_by_scores(scores, held))
    return MetricReport(
        hr=hit_rate_at_k(ranks, cfg.k), ndcg=ndcg_at_k(ranks, cfg.k), k=cfg.k, n_users=len(ranks),
        domain_tag=domain.dataset.domain_tag + ":cold-id",
    )


def run_cold_start(world: SynthWorld, source_tag: str, target_tag: str, cfg: PipelineConfig) -> Tuple[MetricReport, MetricReport]:
    """Cold-start comparison on the target domain's unseen items."""
    source = world.domains[source_tag]
    target = world.domains[target_tag]
    trained = train_domain(source, cfg)
    adapted = adapt_to_domain(trained.adapter, target, cfg)
    text_report = cold_start_eval_text(adapted, target, world, cfg)
    base = train_id_baseline(
        source.split.train, cfg.e, cfg.rounds, cfg.eta_c, cfg.baseline_eta_s, cfg.n_negatives, cfg.fraction, cfg.seed
    )
    fit_baseline_users(base, target.split.train, cfg.target_fit_epochs, cfg.eta_c, cfg.n_negatives, cfg.seed)
    base_report = cold_start_eval_baseline(base, target, world, cfg)
    return text_report, base_report


def run_dp_sweep(world: SynthWorld, tag: str, sigmas: List[float], cfg: PipelineConfig) -> List[Tuple[float, MetricReport]]:
    """Train once per noise level; clip stays fixed, sigma varies."""
    out = []
    for sigma in sigmas:
        dp = DpConfig(clip=cfg.dp.clip if cfg.dp else 1.0, sigma=sigma)
        c = replace(cfg, dp=dp)
        trained = train_domain(world.domains[tag], c)
        report = evaluate_model(
            trained.clients, trained.adapter, trained.encoder, world.domains[tag].split, c.k, c.candidate_size, c.seed, tag
        )
        out.append((sigma, report))
    return out


def _h(s: str) -> int:
    import zlib

    return zlib.crc32(s.encode("utf-8"))
