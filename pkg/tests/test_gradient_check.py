import numpy as np
import pytest

from screen_rating.errors import ContractError
from screen_rating.gradient_check import grad_check, numerical_gradient
from screen_rating.nn import LayerNorm, Linear
from screen_rating.tensor import Tensor, mul, sum_


def test_linear_function_is_exact(rng):
    w = Tensor(rng.standard_normal(6))
    assert grad_check(lambda x: sum_(mul(x, w)), Tensor(rng.standard_normal(6))) < 1e-9


def test_layer_norm_sum(rng):
    norm = LayerNorm(8)
    probe = Tensor(rng.standard_normal(8))
    assert grad_check(lambda x: sum_(mul(norm(x), probe)), Tensor(rng.standard_normal(8))) < 1e-4


def test_non_scalar_output_is_rejected():
    with pytest.raises(ContractError):
        grad_check(lambda x: mul(x, 2.0), Tensor(np.ones(3)))


def test_float32_input_is_rejected():
    with pytest.raises(ContractError):
        grad_check(lambda x: sum_(x), Tensor(np.ones(3, dtype=np.float32)))


def test_numerical_gradient_restores_input(rng):
    data = rng.standard_normal(5)
    x = Tensor(data.copy())
    numerical_gradient(lambda t: sum_(mul(t, t)), x)
    np.testing.assert_array_equal(x.data, data)


def test_coordinate_subset_checks_weights_in_place(rng):
    layer = Linear(10, 4, rng)
    x = Tensor(rng.standard_normal((3, 10)))
    error = grad_check(lambda w: sum_(mul(layer(x), layer(x))), layer.weight, max_coords=7)
    assert error < 1e-4
