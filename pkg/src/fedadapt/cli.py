"""Command-line entry point: reproducible experiments with on-disk artifacts.

Every subcommand echoes its effective config into the output directory and
writes line-delimited record streams whose bytes depend only on the config
and seed. Exit codes: 0 success, 2 usage/config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import ExperimentConfig, parse_config, serialize_config
from .data import filter_kcore, leave_one_out_split, parse_interactions
from .distill import HkdConfig, distill_train, tokenize_corpus
from .errors import ConfigError, FedAdaptError
from .experiments import (
    PipelineConfig,
    run_baseline_transfer,
    run_cold_start,
    run_dp_sweep,
    run_transfer,
    train_domain,
)
from .metrics import evaluate_model
from .server import DpConfig
from .synth import make_world
from .theory import heterogeneity_sweep
from .toytf import ToyTransformer


def _pipeline_config(cfg: ExperimentConfig) -> PipelineConfig:
    dp = DpConfig(clip=cfg.dp_clip, sigma=cfg.dp_sigma) if cfg.dp_sigma > 0 else None
    return PipelineConfig(
        seed=cfg.seed,
        e=cfg.e,
        f_enc=cfg.f_enc,
        d=cfg.d,
        adapter_layers=cfg.adapter_layers,
        rounds=cfg.rounds,
        fraction=cfg.fraction,
        eta_c=cfg.eta_c,
        eta_s=cfg.eta_s,
        n_negatives=cfg.n_negatives,
        local_steps=cfg.local_steps,
        pap_epochs=cfg.pap_epochs,
        pap_eta=cfg.pap_eta,
        baseline_eta_s=cfg.baseline_eta_s,
        use_pap=cfg.use_pap,
        use_fat=cfg.use_fat,
        target_fit_epochs=cfg.target_fit_epochs,
        k=cfg.k,
        candidate_size=cfg.candidate_size,
        threads=cfg.threads,
        dp=dp,
    )


def _load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for key in ("seed", "rounds", "threads"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "disable_pt", False):
        overrides["use_pt"] = False
    if getattr(args, "disable_fat", False):
        overrides["use_fat"] = False
    if getattr(args, "disable_pap", False):
        overrides["use_pap"] = False
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, lines: List[str]) -> None:
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _echo_config(cfg: ExperimentConfig, out: Path) -> None:
    (out / "config.echo").write_text(serialize_config(cfg), encoding="utf-8")


def _metric_record(tag: str, report) -> str:
    return f"{tag},{report.domain_tag},{report.k},{report.n_users},{report.hr:.17g},{report.ndcg:.17g}"


def _world(cfg: ExperimentConfig, tags: List[str]):
    return make_world(
        seed=cfg.seed,
        domain_tags=tags,
        n_users=cfg.n_users,
        n_items=cfg.n_items,
        f_enc=cfg.f_enc,
        random_table=not cfg.use_pt,
    )


def cmd_ingest(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    records = parse_interactions(Path(args.input).read_text(encoding="utf-8").splitlines())
    ds = filter_kcore(records, cfg.min_user_core, cfg.min_item_core)
    split = leave_one_out_split(ds, cfg.seed)
    lines = [f"train,{u},{i}" for u in sorted(split.train.users) for i in sorted(split.train.positives[u])]
    lines += [f"heldout,{u},{split.heldout[u]}" for u in sorted(split.heldout)]
    _write(out / "split.txt", lines)
    print(f"ingested {len(ds.users)} users, {len(ds.items)} items -> {out / 'split.txt'}")
    return 0


def cmd_distill(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    rng = np.random.default_rng(cfg.seed)
    corpus = [f"doc{i} tok{int(rng.integers(20))} tok{int(rng.integers(20))} tok{int(rng.integers(20))}" for i in range(50)]
    seqs, vocab = tokenize_corpus(corpus)
    teacher = ToyTransformer.init(len(vocab), 8, 2, 6, 16, np.random.default_rng(cfg.seed))
    student = ToyTransformer.init(len(vocab), 8, 2, 2, 16, np.random.default_rng(cfg.seed + 1))
    W = 0.3 * np.random.default_rng(cfg.seed + 2).normal(size=(8, 8))
    student, W, trace = distill_train(teacher, student, W, seqs, HkdConfig())
    _write(out / "distill_trace.txt", [f"{i},{loss:.17g}" for i, loss in enumerate(trace)])
    (out / "student.bin").write_bytes(student.to_bytes())
    print(f"distilled: loss {trace[0]:.4g} -> {trace[-1]:.4g}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    if cfg.rounds < 1:
        raise ConfigError("rounds must be >= 1 for training")
    out = _outdir(args)
    _echo_config(cfg, out)
    world = _world(cfg, ["main"])
    pcfg = _pipeline_config(cfg)
    trained = train_domain(world.domains["main"], pcfg)
    _write(out / "rounds.txt", [r.to_record() for r in trained.reports])
    (out / "adapter.bin").write_bytes(trained.adapter.flatten().astype("<f8").tobytes())
    report = evaluate_model(
        trained.clients, trained.adapter, trained.encoder, world.domains["main"].split,
        pcfg.k, pcfg.candidate_size, pcfg.seed, "main",
    )
    _write(out / "metrics.txt", [_metric_record("train", report)])
    print(f"trained {cfg.rounds} rounds; HR@{cfg.k}={report.hr:.4f} NDCG@{cfg.k}={report.ndcg:.4f}")
    return 0


def cmd_transfer(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    world = _world(cfg, ["src", "tgt"])
    pcfg = _pipeline_config(cfg)
    tr = run_transfer(world, "src", "tgt", pcfg)
    br = run_baseline_transfer(world, "src", "tgt", pcfg)
    lines = [
        _metric_record("text-source", tr.source),
        _metric_record("text-target", tr.target),
        f"text-delta,{tr.delta_hr:.17g},{tr.delta_ndcg:.17g}",
        _metric_record("id-source", br.source),
        _metric_record("id-target", br.target),
        f"id-delta,{br.delta_hr:.17g},{br.delta_ndcg:.17g}",
    ]
    _write(out / "transfer.txt", lines)
    print(f"transfer: text delta={tr.delta_hr:.4f}, id-baseline delta={br.delta_hr:.4f}")
    return 0


def cmd_coldstart(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    world = _world(cfg, ["src", "tgt"])
    text, base = run_cold_start(world, "src", "tgt", _pipeline_config(cfg))
    _write(out / "coldstart.txt", [_metric_record("text", text), _metric_record("id", base)])
    print(f"cold start: text HR@{cfg.k}={text.hr:.4f}, id HR@{cfg.k}={base.hr:.4f}")
    return 0


def cmd_dp_sweep(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    if any(s < 0 for s in sigmas):
        raise ConfigError("sigmas must be nonnegative")
    world = _world(cfg, ["main"])
    rows = run_dp_sweep(world, "main", sigmas, _pipeline_config(cfg))
    _write(out / "dp_sweep.txt", [f"{sigma:.17g},{rep.hr:.17g},{rep.ndcg:.17g}" for sigma, rep in rows])
    print("dp sweep: " + ", ".join(f"sigma={s:g}: HR={r.hr:.4f}" for s, r in rows))
    return 0


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    lines = []
    for label, flags in [
        ("full", {}),
        ("no-pt", {"use_pt": False}),
        ("no-fat", {"use_fat": False}),
        ("no-pap", {"use_pap": False}),
    ]:
        variant = replace(cfg, **flags)
        world = _world(variant, ["src", "tgt"])
        tr = run_transfer(world, "src", "tgt", _pipeline_config(variant))
        lines.append(_metric_record(f"{label}-source", tr.source))
        lines.append(_metric_record(f"{label}-target", tr.target))
    _write(out / "ablate.txt", lines)
    print(f"ablation grid written to {out / 'ablate.txt'}")
    return 0


def cmd_theory(args) -> int:
    cfg = _load_config(args)
    out = _outdir(args)
    _echo_config(cfg, out)
    rows = heterogeneity_sweep(8, 4, 2, 6, [0.0, 0.5, 1.0, 2.0], cfg.seed)
    _write(out / "theory.txt", [f"{tau:.17g},{pers:.17g},{shared:.17g}" for tau, pers, shared in rows])
    print("theory sweep: " + ", ".join(f"tau={t:g}: {p:.2e}/{s:.4g}" for t, p, s in rows))
    return 0


def cmd_report(args) -> int:
    path = Path(args.records)
    if not path.exists():
        raise ConfigError(f"records file not found: {path}")
    rows = [line.split(",") for line in path.read_text(encoding="utf-8").splitlines() if line]
    if not rows:
        print("(empty record stream)")
        return 0
    widths = [max(len(r[c]) if c < len(r) else 0 for r in rows) for c in range(max(map(len, rows)))]
    for r in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedadapt", description="Federated text-adapter recommendation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="worker threads (results are thread-count invariant)")
        if out:
            p.add_argument("--out", default="out", help="output directory for artifacts")

    p = sub.add_parser("ingest", help="parse, k-core filter, and split an interaction file")
    common(p)
    p.add_argument("--input", required=True, help="tab-separated user/item/timestamp file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("distill", help="toy 6-layer to 2-layer distillation run")
    common(p)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("train", help="federated adapter training on the synthetic workload")
    common(p)
    p.add_argument("--rounds", type=int, help="override round count")
    p.add_argument("--disable-pt", action="store_true", help="random embedding table instead of text-derived")
    p.add_argument("--disable-fat", action="store_true", help="skip federated adapter tuning")
    p.add_argument("--disable-pap", action="store_true", help="skip local personalization")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", help="source-to-target transfer vs the ID baseline")
    common(p)
    p.add_argument("--disable-pt", action="store_true")
    p.add_argument("--disable-fat", action="store_true")
    p.add_argument("--disable-pap", action="store_true")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("coldstart", help="unseen-item evaluation vs the ID baseline")
    common(p)
    p.set_defaults(func=cmd_coldstart)

    p = sub.add_parser("dp-sweep", help="noise-level sweep with fixed clipping")
    common(p)
    p.add_argument("--sigmas", default="0,0.1,0.2,0.3", help="comma-separated noise multipliers")
    p.set_defaults(func=cmd_dp_sweep)

    p = sub.add_parser("ablate", help="component toggle grid (pre-training / tuning / personalization)")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("theory", help="personalized-vs-shared linear fit sweep")
    common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("report", help="render a record stream as an aligned table")
    p.add_argument("records", help="record file written by another subcommand")
    p.set_defaults(func=cmd_report)

    return parser


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FedAdaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
