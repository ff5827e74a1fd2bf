import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from screen_rating.config import DistillWeights
from screen_rating.distillation import (DistillationDemo, cosine_loss, distill_ce_loss,
                                        mlm_loss, triple_loss)
from screen_rating.errors import ConfigurationError
from screen_rating.gradient_check import grad_check
from screen_rating.tensor import Tensor, log_softmax


def test_triple_loss_weights():
    w = DistillWeights()
    assert float(triple_loss(0.0, 0.0, 0.0, w).data) == 0.0
    assert float(triple_loss(1.0, 1.0, 1.0, w).data) == 8.0


def test_mlm_loss_perfect_prediction():
    log_probs = Tensor(np.log(np.array([[[1e-300, 1.0, 1e-300], [1.0, 1e-300, 1e-300]]])))
    loss = mlm_loss(log_probs, np.array([[1, 0]]), np.array([[True, True]]))
    assert float(loss) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("vocab", [2, 7, 50])
def test_mlm_loss_uniform_prediction(vocab):
    log_probs = log_softmax(Tensor(np.zeros((2, 3, vocab))))
    masked = np.array([[True, False, True], [False, True, False]])
    loss = mlm_loss(log_probs, np.zeros((2, 3), dtype=int), masked)
    assert abs(float(loss) - math.log(vocab)) < 1e-9


def test_mlm_loss_empty_mask_is_flagged():
    loss = mlm_loss(log_softmax(Tensor(np.zeros((1, 2, 4)))), np.zeros((1, 2)),
                    np.zeros((1, 2), dtype=bool))
    assert float(loss) == 0.0
    assert loss.degenerate


def test_distill_ce_uniform_two_classes():
    loss = distill_ce_loss(Tensor(np.zeros((1, 2))), Tensor(np.full((1, 2), 3.0)), 2.0)
    assert float(loss) == pytest.approx(math.log(2), abs=1e-6)


@pytest.mark.parametrize("temperature", [0.0, -1.0])
def test_distill_ce_rejects_bad_temperature(temperature):
    with pytest.raises(ConfigurationError):
        distill_ce_loss(Tensor(np.zeros(2)), Tensor(np.zeros(2)), temperature)


def test_distill_ce_minimum_is_at_the_teacher(rng):
    teacher = rng.standard_normal((1, 3))
    at_match = float(distill_ce_loss(Tensor(teacher), Tensor(teacher.copy()), 2.0))
    p = np.exp(teacher / 2.0) / np.exp(teacher / 2.0).sum()
    assert at_match == pytest.approx(-(p * np.log(p)).sum(), abs=1e-12)
    for _ in range(100):
        student = teacher + rng.normal(0.0, 1.0, teacher.shape)
        assert float(distill_ce_loss(Tensor(teacher), Tensor(student), 2.0)) >= at_match - 1e-12


def test_cosine_loss_identities(rng):
    h = rng.standard_normal((3, 5))
    assert float(cosine_loss(Tensor(h), Tensor(h))) == pytest.approx(0.0, abs=1e-12)
    assert float(cosine_loss(Tensor(h), Tensor(-h))) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=50)
@given(arrays(np.float64, 6, elements=st.floats(-10, 10)).filter(lambda a: np.linalg.norm(a) > 1e-3),
       arrays(np.float64, 6, elements=st.floats(-10, 10)).filter(lambda a: np.linalg.norm(a) > 1e-3),
       st.floats(1e-3, 1e3))
def test_cosine_loss_is_scale_invariant(a, b, scale):
    base = float(cosine_loss(Tensor(a), Tensor(b)))
    assert abs(float(cosine_loss(Tensor(a * scale), Tensor(b))) - base) <= 1e-12


def test_cosine_loss_zero_vector_is_degenerate():
    loss = cosine_loss(Tensor(np.zeros(4)), Tensor(np.ones(4)))
    assert loss.degenerate
    assert float(loss) == pytest.approx(1.0)


def test_loss_gradients(rng):
    teacher = Tensor(rng.standard_normal((2, 5)))
    target = Tensor(rng.standard_normal((2, 5)))
    targets = rng.integers(0, 5, size=2)
    assert grad_check(lambda s: distill_ce_loss(teacher, s, 2.0).value,
                      Tensor(rng.standard_normal((2, 5)))) < 1e-4
    assert grad_check(lambda s: cosine_loss(s, target).value,
                      Tensor(rng.standard_normal((2, 5)))) < 1e-4
    assert grad_check(lambda s: mlm_loss(log_softmax(s), targets, np.array([True, True])).value,
                      Tensor(rng.standard_normal((2, 5)))) < 1e-4


def test_demo_is_reproducible():
    first = DistillationDemo(seed=3).run(steps=15, batch_size=4)
    second = DistillationDemo(seed=3).run(steps=15, batch_size=4)
    assert [s.as_row() for s in first.curve] == [s.as_row() for s in second.curve]
    assert len(first.curve) == 15
    for step in first.curve:
        assert step.mlm > 0 and step.ce > 0 and step.cos >= 0
        assert step.total == pytest.approx(2.0 * step.mlm + 5.0 * step.ce + step.cos, rel=1e-6)
