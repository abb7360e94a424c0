import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chaosrl.netcore import (
    HALF_OPEN,
    ActorChNN,
    ActorInitConfig,
    CriticNet,
    actor_step,
    critic_eval,
    critic_grad,
    init_actor,
    init_critic,
    shifted_sigmoid,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def zero_actor(n_in=144, n_h=100, n_out=2):
    return ActorChNN(np.zeros((n_h, n_in)), np.zeros((n_out, n_h)), np.zeros((n_h, n_h)))


def test_shifted_sigmoid_matches_logistic():
    u = np.linspace(-30, 30, 601)
    np.testing.assert_allclose(shifted_sigmoid(u), 1 / (1 + np.exp(-u)) - 0.5, atol=1e-15)
    assert shifted_sigmoid(0.0) == 0.0


@given(arrays(float, 50, elements=finite))
def test_shifted_sigmoid_open_range(u):
    y = shifted_sigmoid(u)
    assert np.all(y > -0.5) and np.all(y < 0.5)


def test_init_is_deterministic():
    a, b = init_actor(1), init_actor(1)
    for name in ("w_in", "w_out", "w_fb"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.w_fb, init_actor(2).w_fb)
    assert np.all(a.hidden == 0)


def test_feedback_std():
    a = init_actor(3, ActorInitConfig(g_fb=6.0))
    assert abs(a.w_fb.std() - 0.6) < 0.06


def test_uniform_ranges():
    a = init_actor(4, ActorInitConfig(in_range=0.1, out_range=0.2))
    assert np.abs(a.w_in).max() <= 0.1 and np.abs(a.w_in).max() > 0.09
    assert np.abs(a.w_out).max() <= 0.2


def test_zero_gain_gives_zero_feedback():
    assert np.all(init_actor(1, ActorInitConfig(g_fb=0.0)).w_fb == 0)


@pytest.mark.parametrize("bad", [dict(g_fb=-1.0), dict(g_fb=math.nan), dict(in_range=-0.1),
                                 dict(n_hidden=0), dict(use_bias=True)])
def test_invalid_init_rejected(bad):
    with pytest.raises(ValueError):
        init_actor(1, ActorInitConfig(**bad))


def test_zero_weights_give_zero_output():
    a = zero_actor()
    y = actor_step(a, np.full(144, 0.3))
    assert np.array_equal(y, [0.0, 0.0]) and np.all(a.hidden == 0)


def test_single_neuron_definition():
    a = ActorChNN(np.array([[1.0]]), np.array([[0.0]]), np.array([[0.0]]))
    for u in (-3.0, -0.2, 0.0, 1.7):
        a.reset_state()
        actor_step(a, [u])
        assert a.hidden[0] == pytest.approx(1 / (1 + math.exp(-u)) - 0.5, abs=1e-15)
        assert a.hidden_potential[0] == u


def test_step_formula():
    gen = np.random.default_rng(0)
    a = ActorChNN(gen.normal(size=(5, 4)), gen.normal(size=(3, 5)), gen.normal(size=(5, 5)))
    a.hidden = gen.uniform(-0.4, 0.4, 5)
    prev = a.hidden.copy()
    x = gen.uniform(0, 0.5, 4)
    y = actor_step(a, x)
    u = a.w_in @ x + a.w_fb @ prev
    h = 1 / (1 + np.exp(-u)) - 0.5
    np.testing.assert_allclose(a.hidden, h, atol=1e-15)
    np.testing.assert_allclose(y, 1 / (1 + np.exp(-(a.w_out @ h))) - 0.5, atol=1e-15)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        actor_step(init_actor(1), np.zeros(143))
    with pytest.raises(ValueError):
        critic_eval(init_critic(1), np.zeros(10))
    with pytest.raises(ValueError):
        ActorChNN(np.zeros((3, 4)), np.zeros((2, 5)), np.zeros((3, 3)))


@given(st.integers(0, 2**31), st.floats(0.1, 1e3))
def test_activations_stay_open(seed, scale):
    gen = np.random.default_rng(seed)
    a = ActorChNN(scale * gen.normal(size=(6, 4)), scale * gen.normal(size=(2, 6)),
                  scale * gen.normal(size=(6, 6)))
    for _ in range(20):
        y = actor_step(a, gen.uniform(-1, 1, 4) * scale)
        assert np.all(np.abs(a.hidden) <= HALF_OPEN) and np.all(np.abs(y) <= HALF_OPEN)


def test_step_deterministic():
    a = init_actor(5)
    b = a.copy()
    x = np.random.default_rng(1).uniform(0, 0.5, 144)
    for _ in range(50):
        assert np.array_equal(actor_step(a, x), actor_step(b, x))
    assert np.array_equal(a.hidden, b.hidden)


def test_zero_input_does_not_converge():
    a = init_actor(1)
    a.hidden = np.random.default_rng(0).uniform(-0.5, 0.5, 100)
    prev = a.hidden.copy()
    moving = 0
    for t in range(1000):
        actor_step(a, np.zeros(144))
        if t >= 500:
            moving += np.linalg.norm(a.hidden - prev) > 1e-6
        prev = a.hidden.copy()
    assert moving > 0.95 * 500


def test_zero_input_expansion_positive():
    # independent of the analysis module: mean log growth of tiny offsets
    a = init_actor(2)
    gen = np.random.default_rng(7)
    logs = []
    for _ in range(100):
        h = gen.uniform(-0.5, 0.5, 100)
        d = gen.normal(size=100)
        d *= 1e-7 / np.linalg.norm(d)
        f = lambda s: shifted_sigmoid(a.w_fb @ s)
        logs.append(math.log(np.linalg.norm(f(h + d) - f(h)) / 1e-7))
    assert np.mean(logs) > 0


def test_critic_trivial_values():
    assert critic_eval(CriticNet(np.zeros((10, 144)), np.zeros(10)), np.ones(144)) == 0.0
    assert critic_eval(CriticNet(np.zeros((10, 144)), np.ones(10)), np.ones(144)) == 0.0


def test_critic_gradient_finite_differences():
    gen = np.random.default_rng(11)
    for _ in range(20):
        c = CriticNet(gen.uniform(-0.5, 0.5, (10, 144)), gen.uniform(-0.5, 0.5, 10))
        x = gen.uniform(0, 0.5, 144)
        _, g_in, g_out = critic_grad(c, x)
        for w, g in ((c.w_in, g_in), (c.w_out, g_out)):
            for idx in [tuple(gen.integers(0, s) for s in w.shape) for _ in range(5)]:
                old = w[idx]
                w[idx] = old + 1e-5
                vp = critic_eval(c, x)
                w[idx] = old - 1e-5
                vm = critic_eval(c, x)
                w[idx] = old
                num = (vp - vm) / 2e-5
                assert abs(num - g[idx]) <= 1e-5 * max(abs(num), abs(g[idx]), 1e-3)
