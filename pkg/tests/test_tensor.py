import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from screen_rating.errors import ContractError, DimensionError, NonFiniteError
from screen_rating.gradient_check import grad_check
from screen_rating.tensor import (Tensor, abs_, avg_pool2d, concat, conv2d, count_macs,
                                  depthwise_conv2d, dropout, embedding, exp, finite_checks,
                                  gather_last, global_avg_pool, layer_norm, log, log_softmax,
                                  matmul, mean, mul, no_grad, pointwise_conv2d, sigmoid,
                                  softmax, sqrt, sub, sum_, tanh)


def test_matmul_identity():
    out = matmul(Tensor([[1.0, 0.0], [0.0, 1.0]]), Tensor([[3.0, 4.0], [5.0, 6.0]]))
    np.testing.assert_array_equal(out.data, [[3.0, 4.0], [5.0, 6.0]])


def test_matmul_row_by_column():
    out = matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
    np.testing.assert_array_equal(out.data, [[11.0]])


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_matmul_gradient_is_ones_times_b_transposed(rng):
    a = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((3, 4)))
    sum_(matmul(a, b)).backward()
    np.testing.assert_allclose(a.grad, np.ones((2, 4)) @ b.data.T, atol=1e-12)
    assert grad_check(lambda x: sum_(matmul(x, b)), a) < 1e-9


def test_broadcast_add_gradient_sums_over_batch():
    x = Tensor(np.ones((3, 2)), requires_grad=True)
    bias = Tensor(np.zeros(2), requires_grad=True)
    sum_(x + bias).backward()
    np.testing.assert_array_equal(bias.grad, [3.0, 3.0])


def test_shared_node_accumulates_gradient():
    x = Tensor(2.0, requires_grad=True)
    y = mul(x, x)
    (y + y).backward()
    assert x.grad == pytest.approx(8.0)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        mul(x, 2.0).backward()


def test_no_grad_builds_no_graph():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = mul(x, 3.0)
    assert not y.requires_grad


def test_finite_checks_raise_on_nan():
    with finite_checks():
        with pytest.raises(NonFiniteError):
            log(Tensor([-1.0]))


def test_layer_norm_hand_example():
    out = layer_norm(Tensor([1.0, 2.0, 3.0]), Tensor(np.ones(3)), Tensor(np.zeros(3)), eps=0.0)
    np.testing.assert_allclose(out.data, [-1.224745, 0.0, 1.224745], atol=1e-6)


def test_layer_norm_constant_input_returns_bias():
    bias = Tensor([0.1, 0.2, 0.3])
    out = layer_norm(Tensor([5.0, 5.0, 5.0]), Tensor(np.ones(3)), bias)
    np.testing.assert_allclose(out.data, bias.data)


def test_layer_norm_zero_length_axis():
    with pytest.raises(DimensionError):
        layer_norm(Tensor(np.zeros((2, 0))), Tensor(np.zeros(0)), Tensor(np.zeros(0)))


@settings(max_examples=25)
@given(arrays(np.float64, (3, 5), elements=st.floats(-20, 20)),
       st.floats(0.1, 10.0))
def test_softmax_rows_sum_to_one(logits, temperature):
    probs = softmax(Tensor(logits), axis=-1, temperature=temperature)
    np.testing.assert_allclose(probs.data.sum(axis=-1), 1.0, atol=1e-9)


@pytest.mark.parametrize("temperature", [0.5, 1.0, 4.0])
def test_softmax_equal_logits_is_uniform(temperature):
    probs = softmax(Tensor(np.full((2, 4), 3.0)), temperature=temperature)
    np.testing.assert_allclose(probs.data, 0.25)


def test_softmax_rejects_non_positive_temperature():
    with pytest.raises(ContractError):
        softmax(Tensor([1.0, 2.0]), temperature=0.0)


def test_dropout_eval_mode_is_identity(rng):
    x = Tensor(rng.standard_normal(100))
    assert dropout(x, 0.5, rng, training=False) is x


def test_dropout_kept_fraction(rng):
    n, p = 20_000, 0.3
    out = dropout(Tensor(np.ones(n)), p, rng, training=True)
    kept = np.count_nonzero(out.data) / n
    assert abs(kept - (1 - p)) <= 3 * np.sqrt(p * (1 - p) / n)
    np.testing.assert_allclose(out.data[out.data > 0], 1.0 / (1 - p))


def test_dropout_training_needs_generator():
    with pytest.raises(ContractError):
        dropout(Tensor(np.ones(3)), 0.5, None, training=True)


def test_concat_and_mean_shapes():
    a, b = Tensor(np.ones((2, 3))), Tensor(np.zeros((2, 1)))
    assert concat([a, b], axis=-1).shape == (2, 4)
    assert mean(a, axis=0).shape == (3,)
    with pytest.raises(DimensionError):
        concat([a, Tensor(np.ones((3, 1)))], axis=-1)


def test_embedding_rejects_out_of_range_ids():
    table = Tensor(np.zeros((4, 2)))
    with pytest.raises(DimensionError):
        embedding(table, np.array([[0, 4]]))


def test_conv_output_shapes():
    x = Tensor(np.zeros((2, 3, 8, 8)))
    assert conv2d(x, Tensor(np.zeros((5, 3, 3, 3))), stride=2, padding=1).shape == (2, 5, 4, 4)
    assert depthwise_conv2d(x, Tensor(np.zeros((3, 1, 3, 3))), padding=1).shape == (2, 3, 8, 8)
    assert pointwise_conv2d(x, Tensor(np.zeros((7, 3)))).shape == (2, 7, 8, 8)
    assert avg_pool2d(x, 2).shape == (2, 3, 4, 4)
    assert global_avg_pool(x).shape == (2, 3)


def test_conv2d_matches_direct_loop(rng):
    x = rng.standard_normal((1, 2, 5, 5))
    w = rng.standard_normal((3, 2, 3, 3))
    out = conv2d(Tensor(x), Tensor(w)).data
    expected = np.zeros((1, 3, 3, 3))
    for n in range(3):
        for i in range(3):
            for j in range(3):
                expected[0, n, i, j] = np.sum(x[0, :, i:i + 3, j:j + 3] * w[n])
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_conv_kernels_report_macs():
    x = Tensor(np.zeros((1, 16, 8, 8)))
    with count_macs() as counter:
        conv2d(x, Tensor(np.zeros((32, 16, 3, 3))), padding=1)
    assert counter.total == 294912
    with count_macs() as counter:
        depthwise_conv2d(x, Tensor(np.zeros((16, 1, 3, 3))), padding=1)
        pointwise_conv2d(x, Tensor(np.zeros((32, 16))))
    assert counter.by_kind["depthwise"] == 9216
    assert counter.by_kind["pointwise"] == 32768


UNARY_OPS = [
    ("abs", abs_, lambda r: r.uniform(0.2, 2.0, 6) * r.choice([-1, 1], 6)),
    ("exp", exp, lambda r: r.uniform(-2, 2, 6)),
    ("log", log, lambda r: r.uniform(0.5, 3, 6)),
    ("sqrt", sqrt, lambda r: r.uniform(0.5, 3, 6)),
    ("tanh", tanh, lambda r: r.uniform(-2, 2, 6)),
    ("sigmoid", sigmoid, lambda r: r.uniform(-4, 4, 6)),
]


@pytest.mark.parametrize("name,op,sample", UNARY_OPS, ids=[u[0] for u in UNARY_OPS])
def test_unary_gradients(name, op, sample):
    r = np.random.default_rng(3)
    for _ in range(10):
        assert grad_check(lambda x: sum_(mul(op(x), x)), Tensor(sample(r))) < 1e-4


def test_structural_gradients(rng):
    weights = Tensor(rng.standard_normal((2, 3, 4)))
    index = rng.integers(0, 4, size=(2, 3))
    checks = [
        lambda x: sum_(mul(softmax(x, temperature=2.0), weights)),
        lambda x: sum_(mul(log_softmax(x, temperature=0.7), weights)),
        lambda x: sum_(mul(concat([x, mul(x, x)], axis=0), concat([weights, weights], axis=0))),
        lambda x: sum_(mul(mean(x, axis=1, keepdims=True), x)),
        lambda x: sum_(gather_last(mul(x, x), index)),
        lambda x: sum_(mul(x[:, 1:, :], weights[:, 1:, :])),
        lambda x: sum_(mul(sub(x, 1.0) / (mul(x, x) + 1.0), weights)),
    ]
    for f in checks:
        assert grad_check(f, Tensor(rng.standard_normal((2, 3, 4)))) < 1e-4


def test_layer_norm_gradients(rng):
    gain = Tensor(rng.uniform(0.5, 1.5, 5), requires_grad=True)
    bias = Tensor(rng.standard_normal(5), requires_grad=True)
    weights = Tensor(rng.standard_normal((3, 5)))
    x = Tensor(rng.standard_normal((3, 5)))
    assert grad_check(lambda t: sum_(mul(layer_norm(t, gain, bias), weights)), x) < 1e-4
    assert grad_check(lambda g: sum_(mul(layer_norm(x, g, bias), weights)), gain) < 1e-4
    ones, zeros = Tensor(np.ones(5)), Tensor(np.zeros(5))
    assert grad_check(lambda t: sum_(mul(layer_norm(t, ones, zeros), weights)), x) < 1e-4


def test_convolution_gradients(rng):
    x = Tensor(rng.standard_normal((2, 3, 6, 6)))
    w_std = Tensor(rng.standard_normal((4, 3, 3, 3)))
    w_dw = Tensor(rng.standard_normal((3, 1, 3, 3)))
    w_pw = Tensor(rng.standard_normal((4, 3)))
    probe = Tensor(rng.standard_normal((2, 4, 3, 3)))
    assert grad_check(lambda t: sum_(mul(conv2d(t, w_std, stride=2, padding=1), probe)), x) < 1e-4
    assert grad_check(lambda w: sum_(mul(conv2d(x, w, stride=2, padding=1), probe)), w_std) < 1e-4
    probe_dw = Tensor(rng.standard_normal((2, 3, 3, 3)))
    assert grad_check(
        lambda t: sum_(mul(depthwise_conv2d(t, w_dw, stride=2, padding=1), probe_dw)), x) < 1e-4
    assert grad_check(
        lambda w: sum_(mul(depthwise_conv2d(x, w, stride=2, padding=1), probe_dw)), w_dw) < 1e-4
    probe_pw = Tensor(rng.standard_normal((2, 4, 6, 6)))
    assert grad_check(lambda w: sum_(mul(pointwise_conv2d(x, w), probe_pw)), w_pw) < 1e-4
    probe_pool = Tensor(rng.standard_normal((2, 3, 3, 3)))
    assert grad_check(lambda t: sum_(mul(avg_pool2d(t, 2), probe_pool)), x) < 1e-4
