import math
import unittest

import numpy as np

from berthing.exceptions import EmptyBufferError, NonFiniteError
from berthing.utils.replay import RingBuffer, Transition, stack_batch
from berthing.utils.neural_core import forward
from berthing.utils.vessel_env import PSI, U, angle_difference, propagate
from berthing.utils.world_model import (
    OracleModel, fit_model, init_dyn_model, model_loss, pack_model, predict_next, refit_from_buffers,
    training_arrays, unpack_model,
)


def real_transitions(rng, n):
    """Transitions of the true dynamics from states scattered over the water area."""
    items = []
    for _ in range(n):
        s = np.array([rng.uniform(0, 0.5), rng.uniform(0, 0.2), rng.uniform(-0.05, 0.05),
                      rng.uniform(1, 9), rng.uniform(1, 5), rng.uniform(0, 2 * math.pi)])
        a = rng.uniform(-1, 1, 2)
        items.append(Transition(s, a, 0.0, propagate(s, a)))
    return items


class OracleModelTests(unittest.TestCase):

    def test_matches_dynamics(self):
        rng = np.random.default_rng(0)
        states = np.array([t.s for t in real_transitions(rng, 5)])
        actions = rng.uniform(-1, 1, (5, 2))
        np.testing.assert_array_equal(predict_next(OracleModel(), states, actions), propagate(states, actions))

    def test_non_finite_input(self):
        with self.assertRaises(NonFiniteError):
            predict_next(OracleModel(), np.full(6, np.nan), np.zeros(2))


class DynModelTests(unittest.TestCase):

    def test_heading_delta_is_wrapped(self):
        s = np.array([0.1, 0.0, 0.05, 5.0, 3.0, 2 * math.pi - 0.02])
        s_next = s.copy()
        s_next[PSI] = 0.03
        inputs, targets = training_arrays(stack_batch([Transition(s, np.zeros(2), 0.0, s_next)]))
        self.assertEqual(inputs.shape, (1, 8))
        self.assertAlmostEqual(targets[0, PSI], 0.05, places=12)

    def test_prediction_heading_in_range(self):
        model = init_dyn_model(np.random.default_rng(1), hidden=(16, 16))
        rng = np.random.default_rng(2)
        states = np.array([t.s for t in real_transitions(rng, 20)])
        pred = predict_next(model, states, rng.uniform(-1, 1, (20, 2)))
        self.assertEqual(pred.shape, (20, 6))
        self.assertTrue(np.all((pred[:, PSI] >= 0) & (pred[:, PSI] < 2 * math.pi)))

    def test_overfits_a_small_batch(self):
        rng = np.random.default_rng(3)
        batch = stack_batch(real_transitions(rng, 20))
        model = init_dyn_model(np.random.default_rng(4), lr=1e-3)
        initial = fit_model(model, batch, steps=0)
        fit_model(model, batch, steps=8000, refresh_stats=False)
        model.lr = 1e-4
        final = fit_model(model, batch, steps=4000, refresh_stats=False)
        self.assertLess(final, 1e-4)
        self.assertLess(final, initial)

    def test_normalization_round_trip(self):
        rng = np.random.default_rng(10)
        model = init_dyn_model(rng, hidden=(8,))
        fit_model(model, real_transitions(rng, 30), steps=0)
        inputs, targets = training_arrays(stack_batch(real_transitions(rng, 10)))
        np.testing.assert_allclose(model.denormalize(model.normalize_delta(targets)), targets, rtol=0, atol=1e-12)
        np.testing.assert_allclose(model.normalize(inputs) * model.in_scale + model.in_mean, inputs,
                                   rtol=0, atol=1e-12)

    def test_prediction_is_state_plus_network_delta(self):
        rng = np.random.default_rng(11)
        model = init_dyn_model(rng, hidden=(16, 16))
        fit_model(model, real_transitions(rng, 24), steps=20)
        states = np.array([t.s for t in real_transitions(rng, 6)])
        actions = rng.uniform(-1, 1, (6, 2))
        delta = model.denormalize(forward(model.net, model.normalize(np.concatenate([states, actions], axis=1))))
        step = predict_next(model, states, actions) - states
        np.testing.assert_allclose(step[:, :PSI], delta[:, :PSI], rtol=0, atol=1e-12)
        np.testing.assert_allclose(angle_difference(step[:, PSI] - delta[:, PSI]), 0.0, atol=1e-12)

    def test_zero_network_predicts_no_change(self):
        rng = np.random.default_rng(12)
        model = init_dyn_model(rng, hidden=(8,))
        for p in model.net.parameters():
            p[...] = 0.0
        states = np.array([t.s for t in real_transitions(rng, 5)])
        np.testing.assert_allclose(predict_next(model, states, rng.uniform(-1, 1, (5, 2))), states, rtol=0, atol=1e-12)

    def test_constant_columns_keep_unit_scale(self):
        rng = np.random.default_rng(5)
        items = []
        for _ in range(10):
            s = np.array([0.0, 0.0, 0.0, rng.uniform(1, 9), rng.uniform(1, 5), 1.0])
            items.append(Transition(s, np.zeros(2), 0.0, propagate(s, np.zeros(2))))
        model = init_dyn_model(np.random.default_rng(6), hidden=(8,))
        fit_model(model, items, steps=1)
        self.assertEqual(model.in_scale[U], 1.0)
        self.assertEqual(model.out_scale[U], 1.0)

    def test_empty_batch(self):
        with self.assertRaises(EmptyBufferError):
            fit_model(init_dyn_model(np.random.default_rng(0), hidden=(8,)), [], steps=1)


class RefitTests(unittest.TestCase):

    def test_oracle_and_empty_buffers_are_skipped(self):
        rng = np.random.default_rng(0)
        buf = RingBuffer(capacity=10)
        buf.push(real_transitions(rng, 1)[0])
        self.assertIsNone(refit_from_buffers(OracleModel(), [buf], rng))
        model = init_dyn_model(rng, hidden=(8,))
        self.assertIsNone(refit_from_buffers(model, [RingBuffer(capacity=10)], rng))

    def test_refit_reduces_loss_over_union(self):
        rng = np.random.default_rng(7)
        rb_a, rb_b = RingBuffer(capacity=100), RingBuffer(capacity=100)
        for i, t in enumerate(real_transitions(rng, 40)):
            (rb_a if i % 2 else rb_b).push(t)
        model = init_dyn_model(np.random.default_rng(8))
        union = stack_batch(rb_a.items() + rb_b.items())
        before = fit_model(model, union, steps=0)
        after = refit_from_buffers(model, [rb_a, rb_b], rng, steps=200, batch_size=16)
        inputs, targets = training_arrays(union)
        self.assertAlmostEqual(after, model_loss(model, inputs, targets), places=12)
        self.assertLess(after, before)

    def test_pack_round_trip(self):
        rng = np.random.default_rng(9)
        model = init_dyn_model(rng, hidden=(10, 10))
        fit_model(model, real_transitions(rng, 16), steps=5)
        restored = unpack_model(pack_model(model))
        states = np.array([t.s for t in real_transitions(rng, 4)])
        actions = rng.uniform(-1, 1, (4, 2))
        np.testing.assert_array_equal(restored.predict(states, actions), model.predict(states, actions))
        self.assertEqual(restored.adam.t, 5)
        self.assertEqual(restored.lr, model.lr)
