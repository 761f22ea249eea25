"""
DDPG and TD3 agents.

Besides the two baselines this module holds the update helpers the
demonstration-guided agents build on: TD targets, critic regression, the
deterministic policy gradient through the critic's action input, and the
clipped double-Q target.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import NonFiniteError
from .csv_io import EpisodeLog, mean_or_none
from .neural_core import (
    Activation, adam_step, backward, check_same_architecture, forward, init_adam, init_mlp, pack_adam,
    pack_network, soft_update,
)
from .replay import AGENT, RingBuffer, Transition
from .vessel_env import A_MAX, A_MIN, ACTION_DIM, STATE_DIM, TerminationReason

logger = logging.getLogger(__name__)

ACTOR_HIDDEN = (30,)
CRITIC_HIDDEN = (100, 100)
ACTOR_FINAL_SCALE = 3e-3


@dataclass
class GaussianPolicy:
    """
    Deterministic actor plus diagonal Gaussian exploration noise.

    Attributes:
        actor (Mlp): 6 -> 30 -> 2 network with tanh output, the mean action.
        sigma_diag (ndarray): Diagonal of the policy covariance.
        noise_scale (float): Multiplier applied to the noise standard deviation.
    """
    actor: object
    sigma_diag: np.ndarray = field(default_factory=lambda: np.ones(ACTION_DIM))
    noise_scale: float = 1.0

    def __post_init__(self):
        self.sigma_diag = np.asarray(self.sigma_diag, dtype=float)
        if np.any(self.sigma_diag < 0):
            raise ValueError("Policy covariance entries must be non-negative")

    @property
    def noise_std(self):
        return self.noise_scale * np.sqrt(self.sigma_diag)

    @property
    def sigma_inv(self):
        return 1.0 / self.sigma_diag


def clip_action(a):
    return np.clip(a, A_MIN, A_MAX)


def act(p, s, rng, explore=True):
    """Policy action at ``s``; exploration adds the scaled Gaussian noise before clipping."""
    mu = forward(p.actor, s)
    if not explore:
        return clip_action(mu)
    return clip_action(mu + p.noise_std * rng.standard_normal(ACTION_DIM))


def init_actor(rng):
    return init_mlp((STATE_DIM, *ACTOR_HIDDEN, ACTION_DIM), rng, Activation.TANH, final_scale=ACTOR_FINAL_SCALE)


def init_critic(rng):
    return init_mlp((STATE_DIM + ACTION_DIM, *CRITIC_HIDDEN, 1), rng)


# --- Shared update machinery ---

def critic_inputs(states, actions):
    return np.concatenate([states, actions], axis=-1)


def q_values(critic, states, actions):
    return forward(critic, critic_inputs(states, actions))[:, 0]


def td_targets(rewards, terminals, gamma, next_q):
    """``r + gamma * Q'`` with the bootstrap dropped on terminal transitions."""
    return rewards + gamma * (1.0 - terminals.astype(float)) * next_q


def clipped_double_q_targets(rewards, terminals, gamma, next_q1, next_q2):
    return td_targets(rewards, terminals, gamma, np.minimum(next_q1, next_q2))


def smoothed_target_actions(target_actor, next_states, rng, noise_std, noise_clip):
    """Target actions with clipped Gaussian smoothing noise."""
    mu = forward(target_actor, next_states)
    noise = np.clip(rng.normal(0.0, 1.0, size=mu.shape) * noise_std, -noise_clip, noise_clip)
    return clip_action(mu + noise)


def fit_critic(critic, adam, states, actions, targets, lr, weights=None):
    """
    One Adam step on the weighted squared TD error.

    ``weights`` gives each row's weight in the loss and defaults to ``1/N``,
    the plain mean.

    Returns:
        float: Loss before the step.
    """
    q = q_values(critic, states, actions)
    diff = q - targets
    if weights is None:
        weights = np.full(len(diff), 1.0 / len(diff))
    loss = float(np.sum(weights * diff ** 2))
    if not np.isfinite(loss):
        logger.error(f"Critic loss diverged: {loss}")
        raise NonFiniteError(f"Critic loss is not finite: {loss}")
    grads = backward(critic, critic_inputs(states, actions), (2.0 * weights * diff)[:, None])
    adam_step(critic, grads, adam, lr)
    return loss


def action_gradients(critic, states, actions):
    """Per-row ``dQ/da`` at the given state-action pairs."""
    ones = np.ones((len(states), 1))
    return backward(critic, critic_inputs(states, actions), ones).inputs[:, STATE_DIM:]


def actor_step(actor, adam, states, upstream, lr):
    """Ascend ``<upstream, mu(states)>`` with Adam."""
    grads = backward(actor, states, upstream)
    adam_step(actor, grads, adam, lr, maximize=True)
    return grads


def dpg_upstream(actor, critic, states):
    """
    Deterministic policy gradient signal at ``mu(states)``.

    Returns:
        tuple: (mean Q at the actor's actions, per-row upstream for the actor).
    """
    mu = forward(actor, states)
    objective = float(np.mean(q_values(critic, states, mu)))
    upstream = action_gradients(critic, states, mu) / len(states)
    return objective, upstream


def finite_objective(value, what):
    if not np.isfinite(value):
        logger.error(f"{what} diverged: {value}")
        raise NonFiniteError(f"{what} is not finite: {value}")
    return value


@dataclass
class UpdateStats:
    critic_loss: float
    actor_obj: float = None


# --- DDPG ---

@dataclass
class DdpgAgent:
    policy: GaussianPolicy
    critic: object
    target_actor: object
    target_critic: object
    actor_adam: object
    critic_adam: object
    gamma: float = 0.9
    eps: float = 0.005
    lr: float = 1e-3

    def __post_init__(self):
        check_same_architecture(self.target_actor, self.policy.actor)
        check_same_architecture(self.target_critic, self.critic)

    @property
    def actor(self):
        return self.policy.actor

    def checkpoint_arrays(self):
        arrays = {}
        arrays.update(pack_network('actor', self.actor))
        arrays.update(pack_network('critic', self.critic))
        arrays.update(pack_network('target_actor', self.target_actor))
        arrays.update(pack_network('target_critic', self.target_critic))
        arrays.update(pack_adam('actor_adam', self.actor_adam))
        arrays.update(pack_adam('critic_adam', self.critic_adam))
        return arrays


def make_ddpg(rng, gamma=0.9, eps=0.005, lr=1e-3, noise_scale=1.0, sigma_diag=(1.0, 1.0)):
    actor = init_actor(rng)
    critic = init_critic(rng)
    return DdpgAgent(policy=GaussianPolicy(actor, np.asarray(sigma_diag, dtype=float), noise_scale),
                     critic=critic, target_actor=actor.copy(), target_critic=critic.copy(),
                     actor_adam=init_adam(actor), critic_adam=init_adam(critic),
                     gamma=gamma, eps=eps, lr=lr)


def ddpg_targets(ag, batch):
    next_q = q_values(ag.target_critic, batch.next_states, forward(ag.target_actor, batch.next_states))
    return td_targets(batch.rewards, batch.terminals, ag.gamma, next_q)


def ddpg_actor_step(ag, states):
    objective, upstream = dpg_upstream(ag.actor, ag.critic, states)
    actor_step(ag.actor, ag.actor_adam, states, upstream, ag.lr)
    return finite_objective(objective, 'Actor objective')


def ddpg_update(ag, batch):
    """Critic regression, one actor ascent step and the soft target updates."""
    critic_loss = fit_critic(ag.critic, ag.critic_adam, batch.states, batch.actions, ddpg_targets(ag, batch), ag.lr)
    actor_obj = ddpg_actor_step(ag, batch.states)
    soft_update(ag.target_actor, ag.actor, ag.eps)
    soft_update(ag.target_critic, ag.critic, ag.eps)
    return UpdateStats(critic_loss, actor_obj)


# --- TD3 ---

@dataclass
class Td3Agent:
    policy: GaussianPolicy
    critic1: object
    critic2: object
    target_actor: object
    target_critic1: object
    target_critic2: object
    actor_adam: object
    critic1_adam: object
    critic2_adam: object
    gamma: float = 0.9
    eps: float = 0.005
    lr: float = 1e-3
    policy_delay: int = 2
    target_noise: float = 0.2
    target_clip: float = 0.5
    update_count: int = 0

    def __post_init__(self):
        check_same_architecture(self.critic1, self.critic2)
        check_same_architecture(self.target_actor, self.policy.actor)
        check_same_architecture(self.target_critic1, self.critic1)
        check_same_architecture(self.target_critic2, self.critic2)
        if self.target_clip <= 0:
            raise ValueError("Target noise clip must be positive")

    @property
    def actor(self):
        return self.policy.actor

    def checkpoint_arrays(self):
        arrays = {}
        for name in ('critic1', 'critic2', 'target_actor', 'target_critic1', 'target_critic2'):
            arrays.update(pack_network(name, getattr(self, name)))
        arrays.update(pack_network('actor', self.actor))
        for name in ('actor_adam', 'critic1_adam', 'critic2_adam'):
            arrays.update(pack_adam(name, getattr(self, name)))
        arrays['update_count'] = np.asarray(self.update_count, dtype=np.int64)
        return arrays


def make_td3(rng, gamma=0.9, eps=0.005, lr=1e-3, noise_scale=1.0, sigma_diag=(1.0, 1.0),
             policy_delay=2, target_noise=0.2, target_clip=0.5, cls=Td3Agent, **extra):
    actor = init_actor(rng)
    critic1 = init_critic(rng)
    critic2 = init_critic(rng)
    return cls(policy=GaussianPolicy(actor, np.asarray(sigma_diag, dtype=float), noise_scale),
               critic1=critic1, critic2=critic2, target_actor=actor.copy(),
               target_critic1=critic1.copy(), target_critic2=critic2.copy(),
               actor_adam=init_adam(actor), critic1_adam=init_adam(critic1), critic2_adam=init_adam(critic2),
               gamma=gamma, eps=eps, lr=lr, policy_delay=policy_delay, target_noise=target_noise,
               target_clip=target_clip, **extra)


def td3_targets(ag, batch, rng):
    next_a = smoothed_target_actions(ag.target_actor, batch.next_states, rng, ag.target_noise, ag.target_clip)
    q1 = q_values(ag.target_critic1, batch.next_states, next_a)
    q2 = q_values(ag.target_critic2, batch.next_states, next_a)
    return clipped_double_q_targets(batch.rewards, batch.terminals, ag.gamma, q1, q2)


def twin_critic_step(ag, batch, rng):
    """Regress both critics onto the clipped double-Q target; returns the mean of their losses."""
    y = td3_targets(ag, batch, rng)
    loss1 = fit_critic(ag.critic1, ag.critic1_adam, batch.states, batch.actions, y, ag.lr)
    loss2 = fit_critic(ag.critic2, ag.critic2_adam, batch.states, batch.actions, y, ag.lr)
    return 0.5 * (loss1 + loss2)


def soft_update_twin_targets(ag):
    soft_update(ag.target_actor, ag.actor, ag.eps)
    soft_update(ag.target_critic1, ag.critic1, ag.eps)
    soft_update(ag.target_critic2, ag.critic2, ag.eps)


def td3_update(ag, batch, rng):
    """
    Twin-critic update with a delayed actor.

    The actor and all three targets move only on every ``policy_delay``-th
    call, counting calls from one.
    """
    ag.update_count += 1
    critic_loss = twin_critic_step(ag, batch, rng)
    if ag.update_count % ag.policy_delay != 0:
        return UpdateStats(critic_loss)
    objective, upstream = dpg_upstream(ag.actor, ag.critic1, batch.states)
    actor_step(ag.actor, ag.actor_adam, batch.states, upstream, ag.lr)
    soft_update_twin_targets(ag)
    return UpdateStats(critic_loss, finite_objective(objective, 'Actor objective'))


# --- Episode loop ---

@dataclass
class BaselineLearner:
    """A DDPG or TD3 agent with its single replay buffer."""
    agent: object
    replay: RingBuffer
    batch_size: int = 64

    @property
    def actor(self):
        return self.agent.actor

    def update(self, rng):
        batch = self.replay.sample_batch(self.batch_size, rng)
        if isinstance(self.agent, Td3Agent):
            return td3_update(self.agent, batch, rng)
        return ddpg_update(self.agent, batch)

    def checkpoint_arrays(self):
        return self.agent.checkpoint_arrays()


def baseline_episode(learner, env, streams, episode=0):
    """
    One training episode: act with exploration noise, store, update once per step.

    Returns:
        EpisodeLog: Training statistics of the episode.
    """
    s = env.reset()
    log = EpisodeLog(episode=episode)
    critic_losses, actor_objs = [], []
    while True:
        a = act(learner.agent.policy, s, streams.exploration, explore=True)
        outcome = env.step(a)
        terminal = outcome.reason is TerminationReason.OUT_OF_BOUNDS
        learner.replay.push(Transition(s, a, outcome.reward, outcome.next_state, terminal, AGENT))
        stats = learner.update(streams.sampling)
        critic_losses.append(stats.critic_loss)
        if stats.actor_obj is not None:
            actor_objs.append(stats.actor_obj)
        log.episode_return += outcome.reward
        log.steps += 1
        s = outcome.next_state
        if outcome.terminal:
            log.terminated_reason = outcome.reason.value
            break
    log.critic_loss = mean_or_none(critic_losses)
    log.actor_obj = mean_or_none(actor_objs)
    return log
