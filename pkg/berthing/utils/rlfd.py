"""
Demonstration-guided actor-critic agents.

``MpDdpgAgent`` is DDPG fed by the model-predictive expert, optionally with
stochastic mixing (expert and agent alternate on the real ship and fill
separate buffers) and a behavioural-cloning penalty on the actor.

``SgacAgent`` executes only its own policy, stores the expert action as a
label next to every transition and pulls the actor towards it through a
KL constraint whose multiplier is learned by projected dual descent. Its
critics use the twin-critic machinery of TD3.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .agents_baseline import (
    DdpgAgent, Td3Agent, UpdateStats, action_gradients, act, actor_step, ddpg_targets, dpg_upstream,
    finite_objective, fit_critic, make_ddpg, make_td3, soft_update, soft_update_twin_targets, twin_critic_step,
)
from .csv_io import EpisodeLog, mean_or_none
from .mpbe import expert_action
from .neural_core import forward
from .replay import AGENT, EXPERT, AugmentedTransition, RingBuffer, Transition
from .vessel_env import TerminationReason
from .world_model import pack_model, refit_from_buffers

logger = logging.getLogger(__name__)


def gaussian_kl(mu_a, var_a, mu_b, var_b):
    """
    KL(N(mu_a, diag var_a) || N(mu_b, diag var_b)).

    Raises:
        ValueError: if a variance is not strictly positive or the dimensions differ.
    """
    mu_a, var_a, mu_b, var_b = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (mu_a, var_a, mu_b, var_b))
    if not (mu_a.shape == var_a.shape == mu_b.shape == var_b.shape):
        raise ValueError("Means and variances must share one dimension")
    if np.any(var_a <= 0) or np.any(var_b <= 0):
        raise ValueError("Gaussian variances must be strictly positive")
    n = mu_a.size
    return 0.5 * float(np.sum(np.log(var_b / var_a)) - n + np.sum(var_a / var_b)
                       + np.sum((mu_b - mu_a) ** 2 / var_b))


def imitation_residuals(actor, states, expert_actions):
    """Per-row ``||mu(s) - a_E||``."""
    return np.linalg.norm(forward(actor, states) - expert_actions, axis=1)


@dataclass
class ExpertSetup:
    """What an agent needs to query the expert: the world model and planner settings."""
    model: object
    mpbe: object
    fit_steps: int = 200
    fit_batch: int = 64


# --- MP-DDPG ---

@dataclass
class MpDdpgAgent:
    """
    Attributes:
        base (DdpgAgent): Networks and optimizers.
        use_sm (bool): Alternate expert and agent control, with two buffers.
        use_bc (bool): Add the behavioural-cloning penalty to the actor objective.
        lambda_bc (float): Weight of that penalty.
        rb_expert, rb_agent (RingBuffer): Transitions by who acted.
        expert (ExpertSetup): World model and planner settings.
        batch_size (int): N, items drawn from each buffer per update.
    """
    base: DdpgAgent
    expert: ExpertSetup
    use_sm: bool = True
    use_bc: bool = True
    lambda_bc: float = 0.5
    rb_expert: RingBuffer = field(default_factory=lambda: RingBuffer(name='RB_E'))
    rb_agent: RingBuffer = field(default_factory=lambda: RingBuffer(name='RB_theta'))
    batch_size: int = 64

    def __post_init__(self):
        if self.lambda_bc < 0:
            raise ValueError("lambda_bc must be non-negative")

    @property
    def actor(self):
        return self.base.actor

    def ready(self):
        if self.use_sm:
            return len(self.rb_expert) > 0 and len(self.rb_agent) > 0
        return len(self.rb_expert) > 0

    def checkpoint_arrays(self):
        arrays = self.base.checkpoint_arrays()
        if hasattr(self.expert.model, 'net'):
            arrays.update(pack_model(self.expert.model))
        return arrays


def make_mpddpg(rng, expert, use_sm=True, use_bc=True, lambda_bc=0.5, batch_size=64, capacity=100_000, **ddpg_kw):
    return MpDdpgAgent(base=make_ddpg(rng, **ddpg_kw), expert=expert, use_sm=use_sm, use_bc=use_bc,
                       lambda_bc=lambda_bc, rb_expert=RingBuffer(capacity, 'RB_E'),
                       rb_agent=RingBuffer(capacity, 'RB_theta'), batch_size=batch_size)


def bc_upstream(actor, states, expert_actions, lambda_bc):
    """
    Gradient of ``-lambda_bc * mean ||mu(s) - a_E||`` with respect to each ``mu(s)``.

    Returns:
        tuple: (penalty value, per-row upstream). Rows with a zero residual get
        a zero subgradient.
    """
    diff = forward(actor, states) - expert_actions
    norms = np.linalg.norm(diff, axis=1)
    penalty = lambda_bc * float(np.mean(norms))
    safe = np.where(norms > 0.0, norms, 1.0)
    direction = np.where(norms[:, None] > 0.0, diff / safe[:, None], 0.0)
    return penalty, -lambda_bc * direction / len(states)


def mpddpg_actor_upstream(ag, q_states, expert_batch):
    """
    Actor ascent signal: the critic term on ``q_states`` plus, with BC on, the
    cloning penalty on the expert pairs.

    Returns:
        tuple: (objective value, actor input states, per-row upstream).
    """
    objective, upstream = dpg_upstream(ag.actor, ag.base.critic, q_states)
    if not ag.use_bc:
        return objective, q_states, upstream
    penalty, bc_up = bc_upstream(ag.actor, expert_batch.states, expert_batch.actions, ag.lambda_bc)
    return (objective - penalty, np.concatenate([q_states, expert_batch.states]),
            np.concatenate([upstream, bc_up]))


def mpddpg_update(ag, rng):
    """
    One critic and one actor update from the expert (and agent) buffers.

    Without mixing, everything comes from ``rb_expert``. With mixing the critic
    minimises the sum of the mean TD errors over both buffers and the actor's
    Q term uses agent states, while BC always uses expert pairs.

    Raises:
        EmptyBufferError: if a buffer the update needs is empty.
    """
    base = ag.base
    n = ag.batch_size
    expert_batch = ag.rb_expert.sample_batch(n, rng)
    if ag.use_sm:
        agent_batch = ag.rb_agent.sample_batch(n, rng)
        states = np.concatenate([expert_batch.states, agent_batch.states])
        actions = np.concatenate([expert_batch.actions, agent_batch.actions])
        targets = np.concatenate([ddpg_targets(base, expert_batch), ddpg_targets(base, agent_batch)])
        weights = np.concatenate([np.full(len(expert_batch), 1.0 / len(expert_batch)),
                                  np.full(len(agent_batch), 1.0 / len(agent_batch))])
        q_states = agent_batch.states
    else:
        states, actions, weights = expert_batch.states, expert_batch.actions, None
        targets = ddpg_targets(base, expert_batch)
        q_states = expert_batch.states
    critic_loss = fit_critic(base.critic, base.critic_adam, states, actions, targets, base.lr, weights)

    objective, actor_states, upstream = mpddpg_actor_upstream(ag, q_states, expert_batch)
    actor_step(base.actor, base.actor_adam, actor_states, upstream, base.lr)

    soft_update(base.target_actor, base.actor, base.eps)
    soft_update(base.target_critic, base.critic, base.eps)
    return UpdateStats(critic_loss, finite_objective(objective, 'MP-DDPG actor objective'))


def expert_turn(ag, k):
    """Whether the expert drives step ``k``: odd steps under mixing, every step otherwise."""
    return not ag.use_sm or k % 2 == 1


def mpddpg_episode(ag, env, streams, episode=0):
    """
    One MP-DDPG episode on the real environment.

    Expert steps go to ``rb_expert`` and agent steps to ``rb_agent``; one
    update follows every step once the needed buffers hold data. The world
    model is refit on both buffers at the end.
    """
    s = env.reset()
    log = EpisodeLog(episode=episode)
    critic_losses, actor_objs, residuals = [], [], []
    while True:
        k = env.k
        if expert_turn(ag, k):
            a = expert_action(ag.actor, ag.expert.model, ag.base.target_critic, s, env.prev_action,
                              ag.expert.mpbe, streams.mpbe)
            residuals.append(float(np.linalg.norm(forward(ag.actor, s) - a)))
            source, buf = EXPERT, ag.rb_expert
        else:
            a = act(ag.base.policy, s, streams.exploration, explore=True)
            source, buf = AGENT, ag.rb_agent
        outcome = env.step(a)
        terminal = outcome.reason is TerminationReason.OUT_OF_BOUNDS
        buf.push(Transition(s, a, outcome.reward, outcome.next_state, terminal, source))

        if ag.ready():
            stats = mpddpg_update(ag, streams.sampling)
            critic_losses.append(stats.critic_loss)
            actor_objs.append(stats.actor_obj)
        else:
            logger.debug(f"Episode {episode} step {k}: update skipped, buffers not ready")

        log.episode_return += outcome.reward
        log.steps += 1
        s = outcome.next_state
        if outcome.terminal:
            log.terminated_reason = outcome.reason.value
            break

    log.model_loss = refit_from_buffers(ag.expert.model, [ag.rb_expert, ag.rb_agent], streams.sampling,
                                        ag.expert.fit_steps, ag.expert.fit_batch)
    log.critic_loss = mean_or_none(critic_losses)
    log.actor_obj = mean_or_none(actor_objs)
    log.imitation_residual = mean_or_none(residuals)
    return log


# --- SGAC ---

@dataclass
class SgacAgent(Td3Agent):
    """
    Twin-critic agent with a KL-constrained, expert-guided actor.

    Attributes:
        dual (float): The multiplier lambda, kept non-negative.
        zeta (float): Dual step size.
        rb (RingBuffer): Agent transitions labelled with expert actions.
        expert (ExpertSetup): World model and planner settings.
        batch_size (int): N.
    """
    dual: float = 1.0
    zeta: float = 1e-3
    rb: RingBuffer = field(default_factory=lambda: RingBuffer(name='RB'))
    expert: ExpertSetup = None
    batch_size: int = 64

    def __post_init__(self):
        super().__post_init__()
        if self.dual < 0:
            raise ValueError("The dual variable must start non-negative")

    def checkpoint_arrays(self):
        arrays = super().checkpoint_arrays()
        arrays['lambda'] = np.asarray(self.dual)
        if self.expert is not None and hasattr(self.expert.model, 'net'):
            arrays.update(pack_model(self.expert.model))
        return arrays


def make_sgac(rng, expert, lambda0=1.0, zeta=1e-3, batch_size=64, capacity=100_000, **td3_kw):
    return make_td3(rng, cls=SgacAgent, dual=lambda0, zeta=zeta, rb=RingBuffer(capacity, 'RB'), expert=expert,
                    batch_size=batch_size, **td3_kw)


def sgac_critic_step(ag, batch, rng):
    """Clipped double-Q regression of both critics on agent-collected data."""
    return twin_critic_step(ag, batch, rng)


def sgac_actor_upstream(ag, batch, rng):
    """
    Per-row ascent direction for the actor.

    The Q term is ``dQ1/da`` at ``mu(s) + Z`` with fresh noise per row; the
    constraint term is ``-lambda * Sigma^-1 (mu(s) - a_E)``. Both are averaged
    over the batch.

    Returns:
        tuple: (objective value, upstream).
    """
    states = batch.states
    n = len(states)
    mu = forward(ag.actor, states)
    noisy = mu + ag.policy.noise_std * rng.standard_normal(mu.shape)
    q = forward(ag.critic1, np.concatenate([states, noisy], axis=1))[:, 0]
    diff = mu - batch.expert_actions
    sigma_inv = ag.policy.sigma_inv
    penalty = 0.5 * ag.dual * float(np.mean(np.sum(diff * sigma_inv * diff, axis=1)))
    upstream = action_gradients(ag.critic1, states, noisy) / n - ag.dual * (sigma_inv * diff) / n
    return float(np.mean(q)) - penalty, upstream


def sgac_actor_step(ag, batch, rng):
    """One Adam ascent step of the actor with the multiplier held fixed."""
    objective, upstream = sgac_actor_upstream(ag, batch, rng)
    actor_step(ag.actor, ag.actor_adam, batch.states, upstream, ag.lr)
    return finite_objective(objective, 'SGAC actor objective')


def sgac_dual_step(dual, batch, actor, zeta):
    """
    Projected descent on the multiplier using the freshly updated actor.

    Returns:
        float: ``max(0, dual + zeta * 0.5 * mean ||mu(s) - a_E||)``.
    """
    if dual < 0:
        raise ValueError(f"The dual variable must be non-negative, got {dual}")
    residual = float(np.mean(imitation_residuals(actor, batch.states, batch.expert_actions)))
    return max(0.0, dual - zeta * (-0.5 * residual))


def sgac_update(ag, rng):
    """Critic step, actor step, dual step and target update on one minibatch."""
    batch = ag.rb.sample_batch(ag.batch_size, rng)
    critic_loss = sgac_critic_step(ag, batch, rng)
    actor_obj = sgac_actor_step(ag, batch, rng)
    ag.dual = sgac_dual_step(ag.dual, batch, ag.actor, ag.zeta)
    soft_update_twin_targets(ag)
    return UpdateStats(critic_loss, actor_obj)


def sgac_episode(ag, env, streams, episode=0):
    """
    One SGAC episode.

    The expert is queried at every step but only labels the transition; the
    environment always executes the agent's own noisy action.
    """
    if ag.expert is None:
        raise ValueError("SGAC needs an expert setup to label transitions")
    s = env.reset()
    log = EpisodeLog(episode=episode)
    critic_losses, actor_objs, residuals = [], [], []
    while True:
        a_expert = expert_action(ag.actor, ag.expert.model, ag.target_critic1, s, env.prev_action,
                                 ag.expert.mpbe, streams.mpbe)
        residuals.append(float(np.linalg.norm(forward(ag.actor, s) - a_expert)))
        a = act(ag.policy, s, streams.exploration, explore=True)
        outcome = env.step(a)
        terminal = outcome.reason is TerminationReason.OUT_OF_BOUNDS
        ag.rb.push(AugmentedTransition(s, a, outcome.reward, outcome.next_state, terminal, AGENT, a_expert=a_expert))

        stats = sgac_update(ag, streams.sampling)
        critic_losses.append(stats.critic_loss)
        actor_objs.append(stats.actor_obj)

        log.episode_return += outcome.reward
        log.steps += 1
        s = outcome.next_state
        if outcome.terminal:
            log.terminated_reason = outcome.reason.value
            break

    log.model_loss = refit_from_buffers(ag.expert.model, [ag.rb], streams.sampling,
                                        ag.expert.fit_steps, ag.expert.fit_batch)
    log.critic_loss = mean_or_none(critic_losses)
    log.actor_obj = mean_or_none(actor_objs)
    log.imitation_residual = mean_or_none(residuals)
    log.dual = ag.dual
    return log
