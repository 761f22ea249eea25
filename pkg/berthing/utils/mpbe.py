"""
Model predictive based expert.

Random shooting through the world model: M action sequences of horizon H
are sampled from the noisy agent policy, each is scored by its discounted
predicted reward plus a terminal target-critic value, and the first action
of the best sequence is returned as the expert action.

All M rollouts are advanced together as one batch, so rollout ``m`` of a
batched call is the same computation as a single-sequence rollout.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .neural_core import forward
from .vessel_env import A_MAX, A_MIN, ACTION_DIM, ZERO_ACTION, BerthingTask, RewardSign, rewards

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MpbeConfig:
    """
    Planner settings.

    Attributes:
        n_sequences (int): M, candidate sequences per query.
        horizon (int): H; each sequence holds H + 1 actions.
        gamma (float): Discount used in the score.
        noise_scale (float): Multiplier of the policy noise.
        sigma_diag (tuple): Diagonal of the policy covariance.
        sign_mode (RewardSign): Reward variant scored inside rollouts.
        task (BerthingTask): Target state used by the reward.
    """
    n_sequences: int = 10
    horizon: int = 3
    gamma: float = 0.9
    noise_scale: float = 1.0
    sigma_diag: tuple = (1.0, 1.0)
    sign_mode: RewardSign = RewardSign.NEGATED
    task: BerthingTask = BerthingTask()

    def __post_init__(self):
        if self.n_sequences < 1 or self.horizon < 1:
            raise ValueError("MPBE needs at least one sequence and a horizon of at least one step")
        if any(x < 0 for x in self.sigma_diag):
            raise ValueError("Policy covariance entries must be non-negative")

    def reward_fn(self, states, actions, prev_actions):
        return rewards(states, actions, prev_actions, self.task, self.sign_mode)


@dataclass(frozen=True)
class ControlSequence:
    """H + 1 sampled actions and the states they were taken in (index 0 is the true state)."""
    actions: np.ndarray
    predicted_states: np.ndarray

    @property
    def horizon(self):
        return len(self.actions) - 1


@dataclass(frozen=True)
class RolloutScore:
    g_hat: float


@dataclass(frozen=True)
class Plan:
    """Outcome of one expert query."""
    actions: np.ndarray
    states: np.ndarray
    scores: np.ndarray
    elite: int

    @property
    def elite_action(self):
        return self.actions[0, self.elite].copy()

    def sequence(self, m):
        return ControlSequence(self.actions[:, m].copy(), self.states[:, m].copy())


def rollout_batch(actor, model, s_k, horizon, n_sequences, rng, noise_scale=1.0, sigma_diag=(1.0, 1.0)):
    """
    Sample ``n_sequences`` rollouts from ``s_k`` together.

    Returns:
        tuple: actions of shape (H+1, M, 2) and predicted states of shape (H+1, M, 6).
    """
    if horizon < 1:
        raise ValueError(f"Rollout horizon must be at least 1, got {horizon}")
    std = noise_scale * np.sqrt(np.asarray(sigma_diag, dtype=float))
    noise = rng.standard_normal((horizon + 1, n_sequences, ACTION_DIM)) * std
    s_k = np.asarray(s_k, dtype=float)
    states = np.empty((horizon + 1, n_sequences, s_k.shape[-1]))
    actions = np.empty((horizon + 1, n_sequences, ACTION_DIM))
    states[0] = s_k
    for step in range(horizon + 1):
        actions[step] = np.clip(forward(actor, states[step]) + noise[step], A_MIN, A_MAX)
        if step < horizon:
            states[step + 1] = model.predict(states[step], actions[step])
    return actions, states


def rollout(actor, model, s_k, horizon, rng, noise_scale=1.0, sigma_diag=(1.0, 1.0)):
    """Sample one action sequence of length H + 1 through the model."""
    actions, states = rollout_batch(actor, model, s_k, horizon, 1, rng, noise_scale, sigma_diag)
    return ControlSequence(actions[:, 0], states[:, 0])


def score_batch(actions, states, reward_fn, critic, gamma, prev_action):
    """
    Scores of all sequences in a batched rollout.

    The reward at step ``l`` uses action ``l - 1`` of the same sequence as the
    previous action, and ``prev_action`` at ``l = 0``.
    """
    horizon = actions.shape[0] - 1
    prev = np.empty_like(actions)
    prev[0] = prev_action
    prev[1:] = actions[:-1]
    g_hat = np.zeros(actions.shape[1])
    discount = 1.0
    for step in range(horizon):
        g_hat = g_hat + discount * reward_fn(states[step], actions[step], prev[step])
        discount *= gamma
    terminal_value = forward(critic, np.concatenate([states[horizon], actions[horizon]], axis=-1))[:, 0]
    return g_hat + discount * terminal_value


def score_sequence(seq, reward_fn, critic, gamma, prev_action=ZERO_ACTION):
    """Discounted predicted return of one sequence bootstrapped by the target critic."""
    scores = score_batch(seq.actions[:, None, :], seq.predicted_states[:, None, :], reward_fn, critic, gamma,
                         prev_action)
    return RolloutScore(float(scores[0]))


def select_elite(scores):
    """Index of the best score; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=float)
    elite = int(np.argmax(scores))
    assert np.all(scores[elite] >= scores), "elite sequence does not dominate"
    return elite


def plan(actor, model, critic, s_k, prev_action, cfg, rng):
    actions, states = rollout_batch(actor, model, s_k, cfg.horizon, cfg.n_sequences, rng,
                                    cfg.noise_scale, cfg.sigma_diag)
    scores = score_batch(actions, states, cfg.reward_fn, critic, cfg.gamma, prev_action)
    elite = select_elite(scores)
    logger.debug(f"MPBE elite {elite}/{cfg.n_sequences}, G spread {scores.min():.4g}..{scores.max():.4g}")
    return Plan(actions, states, scores, elite)


def expert_action(actor, model, critic, s_k, prev_action, cfg, rng):
    """
    First action of the elite sequence among ``cfg.n_sequences`` rollouts.

    Args:
        actor (Mlp): Agent actor sampling the candidate actions.
        model: World model with a ``predict`` method.
        critic (Mlp): Target critic valuing the horizon state.
        s_k (ndarray): Current true state.
        prev_action (ndarray): Last action executed in the environment.
        cfg (MpbeConfig): Planner settings.
        rng (Generator): Source of the rollout noise.
    """
    return plan(actor, model, critic, s_k, prev_action, cfg, rng).elite_action


def expert_advantage(actor, model, critic, states, prev_actions, cfg, rng):
    """
    Mean target-critic gap between expert actions and the agent's mean actions.

    A non-negative value means the expert's choices look at least as good as
    the deterministic policy's under the current critic.
    """
    states = np.asarray(states, dtype=float)
    expert = np.stack([expert_action(actor, model, critic, s, p, cfg, rng) for s, p in zip(states, prev_actions)])
    greedy = np.clip(forward(actor, states), A_MIN, A_MAX)
    q_expert = forward(critic, np.concatenate([states, expert], axis=1))[:, 0]
    q_greedy = forward(critic, np.concatenate([states, greedy], axis=1))[:, 0]
    return float(np.mean(q_expert) - np.mean(q_greedy))
