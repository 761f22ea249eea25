import unittest

import numpy as np

from berthing.exceptions import NonFiniteError
from berthing.utils.agents_baseline import (
    BaselineLearner, DdpgAgent, GaussianPolicy, Td3Agent, action_gradients, act, baseline_episode,
    ddpg_targets, ddpg_update, fit_critic, init_actor, init_critic, make_ddpg, make_td3, q_values,
    td3_targets, td3_update, td_targets,
)
from berthing.utils.neural_core import init_adam, zeros_like_mlp
from berthing.utils.replay import RingBuffer, Transition, stack_batch
from berthing.utils.seeding import RunStreams
from berthing.utils.vessel_env import BerthingEnv, BerthingTask, TerminationReason


class FixedNoise:
    """Generator stand-in returning a fixed noise draw."""

    def __init__(self, z):
        self.z = np.asarray(z, dtype=float)

    def standard_normal(self, size=None):
        return self.z.copy()


def constant_actor(value):
    actor = zeros_like_mlp(init_actor(np.random.default_rng(0)))
    actor.biases[-1][:] = np.arctanh(value)
    return actor


def random_batch(rng, n=16, terminal_every=5):
    items = []
    for i in range(n):
        s = np.concatenate([rng.uniform(0, 1, 3), rng.uniform(1, 9, 3)])
        items.append(Transition(s, rng.uniform(-1, 1, 2), rng.normal(), s + rng.normal(0, 0.1, 6),
                                terminal=(i % terminal_every == 0)))
    return stack_batch(items)


class PolicyTests(unittest.TestCase):

    def test_act_with_fixed_noise(self):
        policy = GaussianPolicy(constant_actor(0.9))
        s = np.zeros(6)
        np.testing.assert_allclose(act(policy, s, FixedNoise([0.5, -2.0])), [1.0, -1.0])
        np.testing.assert_allclose(act(policy, s, FixedNoise([0.5, -2.0]), explore=False), [0.9, 0.9])
        small = GaussianPolicy(constant_actor(0.0), noise_scale=0.1)
        np.testing.assert_allclose(act(small, s, FixedNoise([0.5, -2.0])), [0.05, -0.2], atol=1e-15)

    def test_architectures(self):
        agent = make_ddpg(np.random.default_rng(1))
        self.assertEqual(agent.actor.layer_dims, (6, 30, 2))
        self.assertEqual(agent.critic.layer_dims, (8, 100, 100, 1))
        self.assertTrue(np.all(np.abs(agent.actor.weights[-1]) <= 3e-3))

    def test_negative_covariance(self):
        with self.assertRaises(ValueError):
            GaussianPolicy(init_actor(np.random.default_rng(0)), sigma_diag=[1.0, -1.0])


class TargetTests(unittest.TestCase):

    def test_td_targets_drop_bootstrap_on_terminal(self):
        y = td_targets(np.array([1.0, 2.0]), np.array([False, True]), 0.9, np.array([10.0, 10.0]))
        np.testing.assert_allclose(y, [10.0, 2.0])

    def test_td3_target_reduces_to_ddpg_target(self):
        rng = np.random.default_rng(2)
        actor, critic = init_actor(rng), init_critic(rng)
        ddpg = DdpgAgent(GaussianPolicy(actor), critic, actor.copy(), critic.copy(),
                         init_adam(actor), init_adam(critic))
        td3 = Td3Agent(GaussianPolicy(actor.copy()), critic.copy(), critic.copy(), actor.copy(),
                       critic.copy(), critic.copy(), init_adam(actor), init_adam(critic), init_adam(critic),
                       target_noise=0.0)
        batch = random_batch(rng)
        np.testing.assert_array_equal(td3_targets(td3, batch, np.random.default_rng(3)), ddpg_targets(ddpg, batch))


class CriticTests(unittest.TestCase):

    def test_regression_lowers_loss(self):
        rng = np.random.default_rng(4)
        critic = init_critic(rng)
        adam = init_adam(critic)
        batch = random_batch(rng, n=32)
        targets = rng.normal(size=32)
        first = fit_critic(critic, adam, batch.states, batch.actions, targets, 1e-3)
        for _ in range(200):
            last = fit_critic(critic, adam, batch.states, batch.actions, targets, 1e-3)
        self.assertLess(last, first)

    def test_non_finite_loss(self):
        rng = np.random.default_rng(5)
        critic = init_critic(rng)
        batch = random_batch(rng, n=4)
        with self.assertRaises(NonFiniteError):
            fit_critic(critic, init_adam(critic), batch.states, batch.actions, np.full(4, np.nan), 1e-3)

    def test_action_gradients_match_finite_differences(self):
        rng = np.random.default_rng(6)
        critic = init_critic(rng)
        states = rng.normal(size=(5, 6))
        actions = rng.uniform(-1, 1, (5, 2))
        grads = action_gradients(critic, states, actions)
        h = 1e-6
        for j in range(2):
            bump = np.zeros(2)
            bump[j] = h
            numeric = (q_values(critic, states, actions + bump) - q_values(critic, states, actions - bump)) / (2 * h)
            np.testing.assert_allclose(grads[:, j], numeric, rtol=1e-4, atol=1e-7)


class UpdateTests(unittest.TestCase):

    def test_ddpg_update_moves_targets_softly(self):
        rng = np.random.default_rng(7)
        agent = make_ddpg(rng, eps=0.5)
        before = agent.target_critic.copy()
        stats = ddpg_update(agent, random_batch(rng))
        self.assertIsNotNone(stats.actor_obj)
        for t, b, o in zip(agent.target_critic.parameters(), before.parameters(), agent.critic.parameters()):
            np.testing.assert_allclose(t, 0.5 * b + 0.5 * o, rtol=1e-12, atol=1e-15)

    def test_td3_actor_is_delayed(self):
        rng = np.random.default_rng(8)
        agent = make_td3(rng, policy_delay=2)
        batch = random_batch(rng)
        start = agent.actor.copy()
        first = td3_update(agent, batch, rng)
        self.assertIsNone(first.actor_obj)
        for a, b in zip(agent.actor.parameters(), start.parameters()):
            np.testing.assert_array_equal(a, b)
        second = td3_update(agent, batch, rng)
        self.assertIsNotNone(second.actor_obj)
        self.assertEqual(agent.update_count, 2)
        self.assertFalse(all(np.array_equal(a, b) for a, b in zip(agent.actor.parameters(), start.parameters())))

    def test_checkpoint_groups(self):
        arrays = make_td3(np.random.default_rng(9)).checkpoint_arrays()
        for prefix in ('actor', 'critic1', 'critic2', 'target_actor', 'target_critic1', 'target_critic2'):
            self.assertIn(f"{prefix}/W0", arrays)
        self.assertIn('critic1_adam/t', arrays)


class BaselineEpisodeTests(unittest.TestCase):

    def _run(self, agent):
        streams = RunStreams.from_seed(0)
        learner = BaselineLearner(agent, RingBuffer(capacity=100), batch_size=4)
        env = BerthingEnv(1, task=BerthingTask(time_limit=6))
        return learner, baseline_episode(learner, env, streams, episode=3)

    def test_ddpg_episode(self):
        learner, log = self._run(make_ddpg(np.random.default_rng(10)))
        self.assertEqual(log.episode, 3)
        self.assertEqual(log.steps, 6)
        self.assertEqual(len(learner.replay), 6)
        self.assertIn(log.terminated_reason, (TerminationReason.TIME_LIMIT.value,
                                              TerminationReason.OUT_OF_BOUNDS.value))
        self.assertIsNotNone(log.critic_loss)
        self.assertIsNotNone(log.actor_obj)
        self.assertTrue(np.isfinite(log.episode_return))

    def test_td3_episode(self):
        learner, log = self._run(make_td3(np.random.default_rng(11)))
        self.assertEqual(learner.agent.update_count, log.steps)
        self.assertIsNone(log.dual)
