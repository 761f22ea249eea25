"""
Finite MDP oracle for the expert-data Bellman operator.

In expert data the successor of a stored pair ``(s, a)`` is reached through
the expert's action at ``s``, so the operator backs up next-state values of
the evaluated policy under the expert-averaged transition
``P_E(s'|s) = sum_a pi_E(a|s) P(s'|s, a)``. With ``pi_E == pi_eval`` its
fixed point carries the evaluated policy's state values exactly; any other
expert shifts the next-state distribution and biases the estimate.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TabularMdp:
    """
    Attributes:
        transitions (ndarray): P[s, a, s'], shape (S, A, S).
        rewards (ndarray): R[s, a], shape (S, A).
        gamma (float): Discount.
    """
    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        p, r = self.transitions, self.rewards
        if p.ndim != 3 or p.shape[0] != p.shape[2] or r.shape != p.shape[:2]:
            raise ValueError(f"Inconsistent shapes P{p.shape} R{r.shape}")
        if np.any(p < 0) or not np.allclose(p.sum(axis=2), 1.0, atol=1e-12):
            raise ValueError("Transition rows must be probability vectors")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def n_states(self):
        return self.transitions.shape[0]

    @property
    def n_actions(self):
        return self.transitions.shape[1]


def random_mdp(n_states, n_actions, gamma, rng):
    p = rng.random((n_states, n_actions, n_states))
    p /= p.sum(axis=2, keepdims=True)
    return TabularMdp(p, rng.random((n_states, n_actions)), gamma)


def random_policy(n_states, n_actions, rng):
    pi = rng.random((n_states, n_actions)) + 0.05
    return pi / pi.sum(axis=1, keepdims=True)


def deterministic_policy(actions, n_actions):
    pi = np.zeros((len(actions), n_actions))
    pi[np.arange(len(actions)), actions] = 1.0
    return pi


def _check_policy(mdp, pi, name):
    if pi.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"{name} has shape {pi.shape}, expected {(mdp.n_states, mdp.n_actions)}")


def expert_transitions(mdp, pi_behavior):
    """``P_E[s, s'] = sum_a pi_behavior(a|s) P(s'|s, a)``."""
    _check_policy(mdp, pi_behavior, 'pi_behavior')
    return np.einsum('sa,sat->st', pi_behavior, mdp.transitions)


def state_values(pi, q):
    return np.sum(pi * q, axis=1)


def bellman_operator_apply(mdp, pi_behavior, pi_eval, q):
    """
    One application of the expert-data operator.

    ``(TQ)(s, a) = R(s, a) + gamma * sum_s' P_E(s'|s) sum_a' pi_eval(a'|s') Q(s', a')``
    """
    _check_policy(mdp, pi_eval, 'pi_eval')
    if q.shape != mdp.rewards.shape:
        raise ValueError(f"Q table has shape {q.shape}, expected {mdp.rewards.shape}")
    p_e = expert_transitions(mdp, pi_behavior)
    return mdp.rewards + mdp.gamma * (p_e @ state_values(pi_eval, q))[:, None]


def operator_fixed_point(mdp, pi_behavior, pi_eval):
    """
    Exact fixed point of ``bellman_operator_apply`` by linear solve.

    Its state values solve ``(I - gamma * P_E) v = sum_a pi_eval(a|s) R(s, a)``.
    """
    _check_policy(mdp, pi_eval, 'pi_eval')
    p_e = expert_transitions(mdp, pi_behavior)
    v = np.linalg.solve(np.eye(mdp.n_states) - mdp.gamma * p_e, state_values(pi_eval, mdp.rewards))
    return mdp.rewards + mdp.gamma * (p_e @ v)[:, None]


def iterate_operator(mdp, pi_behavior, pi_eval, q0, n_iter):
    q = q0
    for _ in range(n_iter):
        q = bellman_operator_apply(mdp, pi_behavior, pi_eval, q)
    return q


def policy_evaluation(mdp, pi):
    """Exact ``Q^pi`` from the linear system ``(I - gamma * P_pi) q = r``."""
    _check_policy(mdp, pi, 'pi')
    n = mdp.n_states * mdp.n_actions
    # P_pi[(s,a), (s',a')] = P(s'|s,a) pi(a'|s')
    p_pi = (mdp.transitions[:, :, :, None] * pi[None, None, :, :]).reshape(n, n)
    q = np.linalg.solve(np.eye(n) - mdp.gamma * p_pi, mdp.rewards.reshape(n))
    return q.reshape(mdp.n_states, mdp.n_actions)


def trajectory_kl(mdp, pi_a, pi_b, initial, horizon):
    """
    KL between the trajectory distributions of two policies by full enumeration.

    Trajectories are ``(s_0, a_0, ..., s_{H-1}, a_{H-1})`` with ``s_0 ~ initial``.
    """
    total = 0.0

    def visit(depth, s, prob_a, log_ratio):
        nonlocal total
        for a in range(mdp.n_actions):
            pa = pi_a[s, a]
            if pa == 0.0:
                continue
            p = prob_a * pa
            lr = log_ratio + np.log(pa / pi_b[s, a])
            if depth + 1 == horizon:
                total += p * lr
                continue
            for s_next in range(mdp.n_states):
                ps = mdp.transitions[s, a, s_next]
                if ps > 0.0:
                    visit(depth + 1, s_next, p * ps, lr)

    if horizon < 1:
        return 0.0
    for s0, p0 in enumerate(initial):
        if p0 > 0.0:
            visit(0, s0, p0, 0.0)
    logger.debug(f"Trajectory KL at horizon {horizon}: {total:.6g}")
    return float(total)


def state_distributions(mdp, pi, initial, horizon):
    """Marginal state distributions ``d_0 .. d_{H-1}`` under ``pi``."""
    d = np.asarray(initial, dtype=float)
    out = []
    for _ in range(horizon):
        out.append(d)
        d = np.einsum('s,sa,sat->t', d, pi, mdp.transitions)
    return out


def stepwise_kl_sum(mdp, pi_a, pi_b, initial, horizon):
    """Sum over steps of the expected per-state KL between the action distributions under ``pi_a``'s visits."""
    total = 0.0
    for d in state_distributions(mdp, pi_a, initial, horizon):
        with np.errstate(divide='ignore', invalid='ignore'):
            terms = np.where(pi_a > 0.0, pi_a * np.log(pi_a / pi_b), 0.0)
        total += float(d @ terms.sum(axis=1))
    return total
