import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screen_rating.activations import ActivationKind, activate
from screen_rating.errors import ConfigurationError
from screen_rating.gradient_check import grad_check
from screen_rating.tensor import Tensor, sum_

SMOOTH = [ActivationKind.SWISH, ActivationKind.MISH, ActivationKind.GELU, ActivationKind.GOLU]


def test_swish_values():
    assert activate(Tensor(0.0), "Swish").item() == 0.0
    assert activate(Tensor(1.0), ActivationKind.SWISH).item() == pytest.approx(0.731059, abs=1e-6)


def test_golu_at_zero():
    assert activate(Tensor(0.0), "GoLU").item() == 0.0


@given(st.floats(-1e6, 1e6))
def test_identity_returns_input(x):
    t = Tensor(x)
    assert activate(t, "identity") is t


@pytest.mark.parametrize("kind", SMOOTH, ids=[k.value for k in SMOOTH])
def test_smooth_activations_vanish_at_zero_and_approach_identity(kind):
    assert activate(Tensor(0.0), kind).item() == 0.0
    assert activate(Tensor(50.0), kind).item() / 50.0 == pytest.approx(1.0, abs=1e-6)


def test_golu_large_negative_inputs_stay_finite():
    out = activate(Tensor(np.array([-800.0, -50.0])), "GoLU")
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, 0.0, atol=1e-12)


def test_parse_is_case_insensitive():
    assert ActivationKind.parse("gelu") is ActivationKind.GELU
    assert ActivationKind.parse(ActivationKind.MISH) is ActivationKind.MISH


def test_unknown_activation():
    with pytest.raises(ConfigurationError, match="ReLU7"):
        activate(Tensor(1.0), "ReLU7")


@pytest.mark.parametrize("kind", list(ActivationKind), ids=[k.value for k in ActivationKind])
def test_activation_gradients(kind):
    rng = np.random.default_rng(11)
    for _ in range(10):
        # keep HSwish samples away from its kinks at +-3
        x = rng.uniform(-2.0, 2.0, 8)
        assert grad_check(lambda t: sum_(activate(t, kind)), Tensor(x)) < 1e-5
