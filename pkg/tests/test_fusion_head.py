import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from screen_rating.config import FusionConfig
from screen_rating.errors import DimensionError
from screen_rating.fusion_head import FusionHead, fuse, fusion_forward, predict_rating
from screen_rating.gradient_check import grad_check
from screen_rating.metrics import evaluate
from screen_rating.tensor import Tensor


def vec(values):
    return Tensor(np.array(values, dtype=np.float64))


def test_fuse_identical_inputs_zero_the_difference_block():
    np.testing.assert_array_equal(fuse(vec([1, 0]), vec([1, 0])).data, [1, 0, 1, 0, 1, 0, 0, 0])


def test_fuse_hand_example():
    out = fuse(vec([2, -1]), vec([0.5, 3])).data
    np.testing.assert_array_equal(out, [2, -1, 0.5, 3, 1, -3, 1.5, 4])


def test_fuse_width_mismatch_names_both_widths():
    with pytest.raises(DimensionError, match="3.*2"):
        fuse(vec([1, 2, 3]), vec([1, 2]))


pairs = st.integers(1, 16).flatmap(
    lambda d: st.tuples(arrays(np.float64, d, elements=st.floats(-100, 100)),
                        arrays(np.float64, d, elements=st.floats(-100, 100))))


@settings(max_examples=100)
@given(pairs)
def test_fuse_norm_identity_and_symmetry(pair):
    v, t = pair
    d = v.size
    u = fuse(Tensor(v), Tensor(t)).data
    assert u.size == 4 * d
    expected = v @ v + t @ t + (v * t) @ (v * t) + (v - t) @ (v - t)
    assert abs(u @ u - expected) <= 1e-10 * max(1.0, expected)
    swapped = fuse(Tensor(t), Tensor(v)).data
    np.testing.assert_array_equal(swapped[2 * d:], u[2 * d:])
    np.testing.assert_array_equal(swapped[:d], u[d:2 * d])


@pytest.fixture
def head(rng):
    return FusionHead(FusionConfig(embed_dim=4, hidden_dim=6, dropout=0.5), rng)


def test_zero_input_with_zero_bias_gives_zero_hidden(head):
    h = fusion_forward(Tensor(np.zeros(16)), head)
    np.testing.assert_array_equal(h.data, np.zeros(6))


def test_fusion_forward_rejects_wrong_width(head):
    with pytest.raises(DimensionError):
        head.fusion_forward(Tensor(np.zeros(12)))


def test_zero_hidden_predicts_output_bias(head):
    head.output.bias.data[...] = 3.25
    assert predict_rating(Tensor(np.zeros(6)), head).item() == 3.25


def test_eval_mode_is_deterministic(head, rng):
    h = Tensor(rng.standard_normal(6))
    assert head.predict_rating(h).item() == head.predict_rating(h).item()


def test_train_mode_dropout_is_seeded(head, rng):
    h = Tensor(rng.standard_normal((8, 6)))
    a = head.predict_rating(h, train_mode=True, rng=np.random.default_rng(9))
    b = head.predict_rating(h, train_mode=True, rng=np.random.default_rng(9))
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, head.predict_rating(h).data)


def test_batched_head_output_shape(head, rng):
    out = head(Tensor(rng.standard_normal((5, 4))), Tensor(rng.standard_normal((5, 4))))
    assert out.shape == (5,)


def test_end_to_end_gradient(head, rng):
    t = Tensor(rng.standard_normal(4))
    v = Tensor(rng.standard_normal(4))
    assert grad_check(lambda x: head(x, t), Tensor(rng.standard_normal(4))) < 1e-4
    assert grad_check(lambda x: head(v, x), Tensor(rng.standard_normal(4))) < 1e-4
    assert grad_check(lambda w: head(v, t), head.hidden.weight, max_coords=30) < 1e-4


def test_degenerate_identity_head_scores_no_better_than_the_mean(rng):
    head = FusionHead(FusionConfig(embed_dim=4, hidden_dim=6, activation="Identity"), rng)
    head.hidden.weight.data[...] = 0.0
    v = Tensor(rng.standard_normal((20, 4)))
    t = Tensor(rng.standard_normal((20, 4)))
    predictions = head(v, t).data
    assert np.ptp(predictions) == 0.0
    report = evaluate(rng.uniform(1, 5, 20), predictions)
    assert report.r2 <= 0.0
