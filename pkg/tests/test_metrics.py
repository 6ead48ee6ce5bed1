"""Ranking metrics against brute-force full-sort oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedadapt.baseline import rank_by_scores
from fedadapt.data import Interaction, dataset_from_records, leave_one_out_split
from fedadapt.errors import DomainError, ProtocolError
from fedadapt.metrics import candidate_list, hit_rate_at_k, ndcg_at_k, transfer_delta


def _oracle_rank(scores, heldout):
    """Independent oracle: full stable sort by (-score, item id)."""
    ordered = sorted(scores, key=lambda c: (-scores[c], c))
    return ordered.index(heldout) + 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**31 - 1), st.integers(1, 10))
def test_rank_matches_full_sort_oracle(n_items, seed, k):
    rng = np.random.default_rng(seed)
    # quantized scores force frequent ties
    scores = {f"i{j:03d}": float(np.round(rng.uniform(), 1)) for j in range(n_items)}
    held = f"i{int(rng.integers(n_items)):03d}"
    assert rank_by_scores(scores, held) == _oracle_rank(scores, held)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=40), st.integers(1, 20))
def test_hr_ndcg_match_oracle(ranks, k):
    hr_oracle = sum(1 for r in ranks if r <= k) / len(ranks)
    ndcg_oracle = sum(1.0 / math.log2(r + 1.0) if r <= k else 0.0 for r in ranks) / len(ranks)
    assert hit_rate_at_k(ranks, k) == pytest.approx(hr_oracle)
    assert ndcg_at_k(ranks, k) == pytest.approx(ndcg_oracle)


def test_hr_ndcg_known_values():
    ranks = [1, 2, 11]
    assert hit_rate_at_k(ranks, 10) == pytest.approx(2 / 3)
    assert ndcg_at_k(ranks, 10) == pytest.approx((1.0 + 1.0 / math.log2(3)) / 3)
    assert ndcg_at_k([1], 1) == 1.0


def test_hr_ndcg_reject_empty():
    with pytest.raises(ProtocolError):
        hit_rate_at_k([], 10)
    with pytest.raises(ProtocolError):
        ndcg_at_k([], 10)


def test_transfer_delta_arithmetic():
    assert transfer_delta(0.2386, 0.2335) == pytest.approx((0.2386 - 0.2335) / 0.2386)
    assert transfer_delta(0.5, 0.5) == 0.0
    assert transfer_delta(0.4, 0.5) < 0  # improvement shows as negative drop
    with pytest.raises(DomainError):
        transfer_delta(0.0, 0.1)


def _split(n_users=3, n_items=12):
    recs = [Interaction(f"u{a}", f"i{b:02d}", b) for a in range(n_users) for b in range(n_items)]
    ds = dataset_from_records(recs)
    return leave_one_out_split(ds, seed=0)


def test_candidate_list_full_ranking():
    split = _split()
    cands = candidate_list(split, "u0", candidate_size=0, seed=0)
    held = split.heldout["u0"]
    assert cands[0] == held
    assert held not in cands[1:]
    # train positives excluded, everything else present exactly once
    assert set(cands) == (set(split.train.items) - split.train.positives["u0"]) | {held}
    assert len(cands) == len(set(cands))


def test_candidate_list_sampled_size():
    recs = [Interaction("u", f"i{b:02d}", b) for b in range(3)]
    recs += [Interaction("v", f"i{b:02d}", b) for b in range(30)]
    split = leave_one_out_split(dataset_from_records(recs), 0)
    cands = candidate_list(split, "u", candidate_size=5, seed=1)
    assert len(cands) == 5
    assert cands[0] == split.heldout["u"]
    again = candidate_list(split, "u", candidate_size=5, seed=1)
    assert cands == again


def test_candidate_list_too_large():
    split = _split(n_items=4)
    with pytest.raises(ProtocolError):
        candidate_list(split, "u0", candidate_size=100, seed=0)
