"""Client-side behavior: loss arithmetic, local rounds, privacy boundary."""

import numpy as np
import pytest

from fedadapt.client import (
    ClientState,
    build_batch,
    evaluate_client,
    local_loss,
    local_round,
    make_head_identity,
    pap_train,
)
from fedadapt.data import Interaction, dataset_from_records
from fedadapt.encoder import AdapterStack, TableEncoder, adapter_forward
from fedadapt.errors import ProtocolError
from fedadapt.linalg import sigmoid
from fedadapt.tfre import EmbeddingTable


def _setup(seed=0, n_items=6, f_enc=3, e=2):
    rng = np.random.default_rng(seed)
    items = {f"item-{j:03d}": rng.normal(size=f_enc) for j in range(n_items)}
    enc = TableEncoder(EmbeddingTable(dim=f_enc, entries=items))
    ds = dataset_from_records([Interaction("u", i, None) for i in items])
    ds.positives["u"] = {"item-000", "item-001"}
    adapter = AdapterStack.init(f_enc, 2, e, 1, rng)
    state = ClientState(user_id="u", p_u=rng.normal(size=e), positives=["item-000", "item-001"], dataset=ds, seed=seed)
    return state, adapter, enc


def test_local_loss_is_summed_bce():
    state, adapter, enc = _setup()
    batch = [("item-000", 1), ("item-001", 0)]
    expected = 0.0
    for item, y in batch:
        q = adapter_forward(adapter, enc.encode_item(item))
        y_hat = sigmoid(float(state.p_u @ q))
        expected += -(y * np.log(y_hat) + (1 - y) * np.log(1 - y_hat))
    assert local_loss(state, adapter, enc, batch) == pytest.approx(expected, rel=1e-12)


def test_local_loss_finite_under_saturation():
    state, adapter, enc = _setup()
    state.p_u = np.full_like(state.p_u, 1e4)
    loss = local_loss(state, adapter, enc, [("item-000", 1), ("item-001", 0)])
    assert np.isfinite(loss)


def test_local_loss_rejects_bad_label():
    state, adapter, enc = _setup()
    with pytest.raises(ProtocolError):
        local_loss(state, adapter, enc, [("item-000", 2)])


def test_build_batch_composition():
    state, _, _ = _setup()
    batch = build_batch(state, n_negatives=2, nonce=0)
    positives = [i for i, y in batch if y == 1]
    negatives = [i for i, y in batch if y == 0]
    assert positives == ["item-000", "item-001"]
    assert len(negatives) == 4
    assert not set(negatives) & set(positives)


def test_local_round_updates_only_user_embedding():
    state, adapter, enc = _setup()
    state.head = make_head_identity(state.p_u.size)
    before_adapter = adapter.flatten().copy()
    before_head = state.head.flatten().copy()
    before_p = state.p_u.copy()
    update, loss = local_round(state, adapter, enc, n_negatives=2, eta_c=0.1)
    assert not np.array_equal(state.p_u, before_p)
    np.testing.assert_array_equal(adapter.flatten(), before_adapter)
    np.testing.assert_array_equal(state.head.flatten(), before_head)
    assert update.gradient.shape == (adapter.param_count(),)
    assert update.sample_count == 2 + 4
    assert np.isfinite(loss)


def test_local_round_zero_rate_keeps_user_embedding():
    state, adapter, enc = _setup()
    before_p = state.p_u.copy()
    local_round(state, adapter, enc, n_negatives=2, eta_c=0.0)
    np.testing.assert_array_equal(state.p_u, before_p)


def test_local_round_reports_entry_loss():
    # the reported loss is measured before any local step of this round
    state, adapter, enc = _setup()
    entry = local_loss(state, adapter, enc, build_batch(state, 2, nonce=5))
    _, loss = local_round(state, adapter, enc, n_negatives=2, eta_c=0.1, round_nonce=5, local_steps=3)
    assert loss == pytest.approx(entry)


def test_upload_payload_contains_no_private_bytes():
    state, adapter, enc = _setup()
    state.head = make_head_identity(state.p_u.size)
    payloads = []
    local_round(state, adapter, enc, 2, 0.1, audit=lambda uid, raw: payloads.append(raw))
    assert len(payloads) == 1
    raw = payloads[0]
    for item in state.dataset.items:
        assert item.encode("utf-8") not in raw
    assert state.user_id.encode("utf-8") not in raw
    assert state.p_u.astype("<f8").tobytes() not in raw
    for scalar in state.p_u:
        assert np.float64(scalar).tobytes() not in raw
    # payload is exactly batch size + flattened adapter gradient
    assert len(raw) == 4 + 8 * adapter.param_count()


def test_pap_train_never_touches_shared_state():
    state, adapter, enc = _setup()
    before = adapter.flatten().copy()
    out = pap_train(state, adapter, enc, epochs=3, eta_c=0.01, n_negatives=2)
    np.testing.assert_array_equal(adapter.flatten(), before)
    assert out is not state  # original state object untouched
    assert out.head is not None
    assert state.head is None


def test_pap_train_zero_epochs_is_copy():
    state, adapter, enc = _setup()
    out = pap_train(state, adapter, enc, epochs=0, eta_c=0.01)
    np.testing.assert_array_equal(out.p_u, state.p_u)
    assert out.head is None


def test_pap_train_reduces_local_loss():
    state, adapter, enc = _setup(seed=2)
    # full labelled item set: the population the sampled batches draw from
    full = [(i, int(i in state.dataset.positives["u"])) for i in sorted(state.dataset.items)]
    before = local_loss(state, adapter, enc, full)
    out = pap_train(state, adapter, enc, epochs=20, eta_c=0.002, n_negatives=2)
    after = local_loss(out, adapter, enc, full)
    assert after < before


def test_evaluate_client_rank_and_ties():
    state, adapter, enc = _setup()
    candidates = sorted(state.dataset.items)
    rank = evaluate_client(state, adapter, enc, "item-003", candidates)
    scores = {c: sigmoid(float(state.p_u @ adapter_forward(adapter, enc.encode_item(c)))) for c in candidates}
    expected = 1 + sum(
        1 for c in candidates if c != "item-003" and (scores[c] > scores["item-003"] or (scores[c] == scores["item-003"] and c < "item-003"))
    )
    assert rank == expected
    with pytest.raises(ProtocolError):
        evaluate_client(state, adapter, enc, "missing", candidates)
