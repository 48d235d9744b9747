import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavbeam.lrnet.gradcheck import grad_check, naive_numeric_gradients, numeric_gradients, relative_errors
from uavbeam.lrnet.model import backward, forward, init_model, zero_model
from uavbeam.numerics import RandomSource, uniform_array


def _example(seed, L=3, batch=None):
    rng = RandomSource(seed)
    shape = (L, 2) if batch is None else (batch, L, 2)
    x = uniform_array(rng, -1, 1, int(np.prod(shape))).reshape(shape)
    x = x - x[..., -1:, :]
    y = uniform_array(rng, -1, 1, 2 if batch is None else 2 * batch).reshape(shape[:-2] + (2,))
    return x, y


def test_zero_model_zero_window():
    m = zero_model(3, 4, 5)
    assert grad_check(m, (np.zeros((3, 2)), np.zeros(2))) == 0.0


@given(st.integers(0, 2 ** 32))
@settings(max_examples=10, deadline=None)
def test_random_small_models(seed):
    m = init_model(seed, 3, 4, 5)
    assert grad_check(m, _example(seed + 1)) < 1e-6


def test_batched_example():
    m = init_model(3, 4, 3, 2)
    assert grad_check(m, _example(9, L=4, batch=5)) < 1e-6


def test_exact_differences_agree_with_naive():
    m = init_model(2, 3, 4, 5)
    x, y = _example(4)
    exact = numeric_gradients(m, x, y)
    naive = naive_numeric_gradients(m, x, y)
    for name in exact:
        assert np.allclose(exact[name], naive[name], rtol=1e-5, atol=1e-9)


def test_corrupted_gradient_detected():
    m = init_model(5, 3, 4, 5)
    x, y = _example(6)
    _, cache = forward(m, x)
    analytic = backward(m, cache, y)
    numeric = numeric_gradients(m, x, y)
    analytic["layer1.w_hidden"][2, 1] *= 2.0
    assert max(relative_errors(analytic, numeric).values()) > 1e-2


def test_invalid_epsilon():
    with pytest.raises(ValueError):
        grad_check(init_model(0, 3, 4, 5), _example(0), epsilon=0.0)
