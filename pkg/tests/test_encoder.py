"""Adapter blocks, stacks, heads, and frozen encoders."""

import numpy as np
import pytest

from fedadapt.encoder import (
    AdapterParams,
    AdapterStack,
    TableEncoder,
    ToyTextEncoder,
    adapter_forward,
    block_forward,
    block_forward_cached,
    head_forward,
    item_embedding,
    predict,
)
from fedadapt.client import make_head_identity
from fedadapt.errors import MissingItemError, ShapeError
from fedadapt.tfre import EmbeddingTable
from fedadapt.toytf import ToyTransformer


def _block(in_dim=5, d=3, out_dim=4, seed=0):
    return AdapterParams.init(in_dim, d, out_dim, np.random.default_rng(seed))


def test_block_forward_matches_manual():
    block = AdapterParams(
        W_down=np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
        b_down=np.array([0.0, -1.0]),
        W_up=np.array([[1.0], [2.0]]),
        b_up=np.array([0.5]),
    )
    x = np.array([1.0, -2.0, 3.0])
    # pre = W_down^T x + b_down = [4, 0]; relu -> [4, 0]; out = 4*1 + 0*2 + 0.5
    np.testing.assert_allclose(block_forward(block, x), [4.5])


def test_block_forward_relu_clamps():
    block = AdapterParams(
        W_down=np.array([[1.0]]), b_down=np.array([-10.0]), W_up=np.array([[1.0]]), b_up=np.array([0.0])
    )
    np.testing.assert_allclose(block_forward(block, np.array([2.0])), [0.0])


def test_block_rejects_wrong_input_dim():
    with pytest.raises(ShapeError):
        block_forward(_block(), np.zeros(7))


def test_param_count_matches_flatten():
    block = _block(5, 3, 4)
    assert block.param_count() == block.flatten().size == 5 * 3 + 3 + 3 * 4 + 4


def test_block_flatten_round_trip():
    block = _block()
    again = AdapterParams.unflatten(block.flatten(), 5, 3, 4)
    np.testing.assert_array_equal(again.flatten(), block.flatten())


def test_stack_chains_dimensions():
    stack = AdapterStack.init(f_enc=6, d=3, e=4, layers=2, rng=np.random.default_rng(0))
    assert stack.in_dim == 6 and stack.out_dim == 4
    out = adapter_forward(stack, np.zeros(6))
    assert out.shape == (4,)


def test_stack_flatten_round_trip():
    stack = AdapterStack.init(6, 3, 4, 2, np.random.default_rng(1))
    flat = stack.flatten()
    again = stack.unflatten_like(flat)
    np.testing.assert_array_equal(again.flatten(), flat)
    with pytest.raises(ShapeError):
        stack.unflatten_like(flat[:-1])


def test_stack_rejects_mismatched_blocks():
    with pytest.raises(ShapeError):
        AdapterStack([_block(5, 3, 4), _block(5, 3, 4)])  # 4 -> 5 gap


def test_cached_forward_agrees_with_plain():
    block = _block(seed=3)
    x = np.random.default_rng(4).normal(size=5)
    out, cache = block_forward_cached(block, x)
    np.testing.assert_array_equal(out, block_forward(block, x))
    assert cache["x"] is x


def test_head_none_is_identity():
    v = np.array([1.0, -2.0])
    np.testing.assert_array_equal(head_forward(None, v), v)


def test_identity_head_is_identity_in_linear_region():
    head = make_head_identity(4, shift=4.0)
    v = np.array([0.5, -1.0, 2.0, -3.9])
    np.testing.assert_allclose(head_forward(head, v), v, atol=1e-12)


def test_predict_is_sigmoid_of_inner_product():
    assert predict(np.array([1.0, 1.0]), np.array([0.0, 0.0])) == 0.5
    assert 0.0 < predict(np.array([10.0]), np.array([-10.0])) < 0.5
    with pytest.raises(ShapeError):
        predict(np.zeros(2), np.zeros(3))


def test_table_encoder_lookup():
    table = EmbeddingTable(dim=2, entries={"a": np.array([1.0, 2.0])})
    enc = TableEncoder(table)
    assert enc.out_dim == 2
    np.testing.assert_array_equal(enc.encode_item("a"), [1.0, 2.0])
    with pytest.raises(MissingItemError):
        enc.encode_item("b")


def test_toy_text_encoder_deterministic_and_frozen():
    model = ToyTransformer.init(10, 4, 2, 2, 8, np.random.default_rng(0))
    before = model.to_bytes()
    enc = ToyTextEncoder(model, {"a": [1, 2, 3], "b": [1, 2, 3], "c": [4]})
    va1, va2 = enc.encode_item("a"), enc.encode_item("a")
    np.testing.assert_array_equal(va1, va2)
    # identical token sequences give identical vectors
    np.testing.assert_array_equal(va1, enc.encode_item("b"))
    assert not np.array_equal(va1, enc.encode_item("c"))
    assert model.to_bytes() == before
    with pytest.raises(MissingItemError):
        enc.encode_item("zz")


def test_item_embedding_pipeline_composition():
    table = EmbeddingTable(dim=3, entries={"a": np.array([1.0, 0.0, -1.0])})
    enc = TableEncoder(table)
    stack = AdapterStack.init(3, 2, 2, 1, np.random.default_rng(5))
    head = make_head_identity(2)
    via_pipeline = item_embedding(enc, stack, head, "a")
    manual = head_forward(head, adapter_forward(stack, enc.encode_item("a")))
    np.testing.assert_array_equal(via_pipeline, manual)
