"""
Discrete-time model of the underactuated surface vessel used for berthing.

The module provides:
- the one-step vessel dynamics (surge, sway, yaw rate, earth-frame pose)
- the berthing reward with its action-smoothness penalty
- the three initial conditions and the berthing-zone geometry
- ``BerthingEnv``, a small stateful wrapper driving one episode

States are float64 arrays ``[u, v, phi, X, Y, psi]`` (m/s, m/s, rad/s, m, m, rad)
and actions are float64 arrays ``[tau_u, tau_phi]``. Angles are radians
internally; configs and reports use degrees.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import NonFiniteError, UnknownCaseError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# State layout
U, V, PHI, X, Y, PSI = range(6)
STATE_DIM = 6
ACTION_DIM = 2

A_MIN = np.array([-1.0, -1.0])
A_MAX = np.array([1.0, 1.0])
ZERO_ACTION = np.zeros(ACTION_DIM)

# Initial conditions as [u, v, phi, X, Y, psi_deg]
INITIAL_CASES = {
    1: (0.0, 0.0, 0.0, 9.0, 5.0, 270.0),
    2: (0.0, 0.0, 0.0, 9.0, 5.0, 180.0),
    3: (0.0, 0.0, 0.0, 9.0, 1.0, 180.0),
}


class TerminationReason(str, enum.Enum):
    RUNNING = 'Running'
    TIME_LIMIT = 'TimeLimit'
    OUT_OF_BOUNDS = 'OutOfBounds'


class RewardSign(str, enum.Enum):
    """How the distance term of the berthing reward enters the sum.

    ``NEGATED`` rewards approaching the target; ``VERBATIM`` keeps the printed
    formula, whose distance term grows with the distance.
    """
    NEGATED = 'negated'
    VERBATIM = 'verbatim'


@dataclass(frozen=True)
class ShipParams:
    """Inertia and damping terms of the vessel model."""
    m11: float = 19.0
    m22: float = 35.2
    m33: float = 4.2
    d11: float = 4.0
    d22: float = 10.0
    d33: float = 1.0

    def __post_init__(self):
        for name in ('m11', 'm22', 'm33', 'd11', 'd22', 'd33'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"Ship parameter {name} must be strictly positive, got {value}")


def _default_s_min(delta=0.5):
    return (0.0, 0.0, -math.radians(5.0), delta, delta, 0.0)


def _default_s_max(delta=0.5):
    return (1.0, 1.0, math.radians(5.0), 10.0 - delta, 6.0 - delta, TWO_PI)


@dataclass(frozen=True)
class BerthingTask:
    """
    Target, bounds and berth geometry of the berthing problem.

    Attributes:
        s_final (tuple): Target state, velocities zero, pose at the berth.
        s_min (tuple): Lower state bounds; velocities saturate, positions terminate.
        s_max (tuple): Upper state bounds.
        delta (float): Boundary redundancy of the 10 m x 6 m water area (m).
        berth_center (tuple): (X_F, Y_F) centre of the berth rectangle (m).
        berth_half_x (float): Half-length of the berth along X (m).
        berth_half_y (float): Half-width of the berth along Y (m).
        time_limit (int): Episode step limit T; one step is one second.
    """
    s_final: tuple = (0.0, 0.0, 0.0, 0.65, 1.0, math.pi)
    s_min: tuple = _default_s_min()
    s_max: tuple = _default_s_max()
    delta: float = 0.5
    berth_center: tuple = (0.65, 1.0)
    berth_half_x: float = 0.5
    berth_half_y: float = 0.25
    time_limit: int = 150

    def __post_init__(self):
        lo, hi = np.asarray(self.s_min, dtype=float), np.asarray(self.s_max, dtype=float)
        if lo.shape != (STATE_DIM,) or hi.shape != (STATE_DIM,) or not np.all(lo < hi):
            raise ValueError("s_min must be strictly below s_max in every component")
        cx, cy = self.berth_center
        if not (lo[X] <= cx <= hi[X] and lo[Y] <= cy <= hi[Y]):
            raise ValueError(f"Berth centre {self.berth_center} lies outside the position bounds")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    @property
    def lower(self):
        return np.asarray(self.s_min, dtype=float)

    @property
    def upper(self):
        return np.asarray(self.s_max, dtype=float)

    @property
    def target(self):
        return np.asarray(self.s_final, dtype=float)


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray
    reward: float
    terminal: bool
    reason: TerminationReason


def wrap_angle(psi):
    """Wrap angles into [0, 2*pi)."""
    wrapped = np.mod(psi, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def angle_difference(delta_psi):
    """Wrap an angle difference into [-pi, pi)."""
    return wrap_angle(np.asarray(delta_psi) + math.pi) - math.pi


def _require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{name} contains non-finite values: {value}")


def propagate(states, actions, params=ShipParams(), task=BerthingTask(), saturate=True):
    """
    Advance one or many vessel states by one second.

    Args:
        states (ndarray): Shape (6,) or (B, 6).
        actions (ndarray): Shape (2,) or (B, 2).
        params (ShipParams): Vessel inertia and damping.
        task (BerthingTask): Supplies the velocity bounds used for saturation.
        saturate (bool): Clamp u, v, phi to the task bounds.

    Returns:
        ndarray: Next states with the same leading shape, psi wrapped to [0, 2*pi).
    """
    s = np.asarray(states, dtype=float)
    a = np.asarray(actions, dtype=float)
    u, v, phi, x, y, psi = (s[..., i] for i in range(STATE_DIM))
    tau_u, tau_phi = a[..., 0], a[..., 1]
    p = params

    u_next = u + (p.m22 / p.m11) * v * phi - (p.d11 / p.m11) * u + tau_u / p.m11
    v_next = v - (p.m11 / p.m22) * u * phi - (p.d22 / p.m22) * v
    phi_next = phi + ((p.m11 - p.m22) / p.m33) * u * v - (p.d33 / p.m33) * phi + tau_phi / p.m33
    cos_psi, sin_psi = np.cos(psi), np.sin(psi)
    x_next = x + cos_psi * u - sin_psi * v
    y_next = y + sin_psi * u + cos_psi * v
    psi_next = wrap_angle(psi + phi)

    if saturate:
        lo, hi = task.lower, task.upper
        u_next = np.clip(u_next, lo[U], hi[U])
        v_next = np.clip(v_next, lo[V], hi[V])
        phi_next = np.clip(phi_next, lo[PHI], hi[PHI])

    return np.stack([u_next, v_next, phi_next, x_next, y_next, psi_next], axis=-1)


def rewards(states, actions, prev_actions, task=BerthingTask(), sign_mode=RewardSign.NEGATED):
    """Vectorised berthing reward over the trailing axis."""
    s = np.asarray(states, dtype=float)
    diff = s - task.target
    diff[..., PSI] = angle_difference(diff[..., PSI])
    distance = np.linalg.norm(diff, axis=-1)
    smoothness = np.linalg.norm(np.asarray(actions, dtype=float) - np.asarray(prev_actions, dtype=float), axis=-1)
    distance_term = distance + np.log(distance + 0.001)
    if RewardSign(sign_mode) is RewardSign.VERBATIM:
        return distance_term - 0.1 * smoothness
    return -distance_term - 0.1 * smoothness


def reward(s, a, prev_a, task=BerthingTask(), sign_mode=RewardSign.NEGATED):
    """Berthing reward for one state/action pair."""
    for name, value in (('state', s), ('action', a), ('previous action', prev_a)):
        _require_finite(name, np.asarray(value, dtype=float))
    return float(rewards(s, a, prev_a, task, sign_mode))


def step(s, a, prev_a, params=ShipParams(), task=BerthingTask(), k=0, sign_mode=RewardSign.NEGATED):
    """
    Apply one control action to the vessel.

    The reward is evaluated on the pre-step state ``s``. ``OutOfBounds`` wins
    over ``TimeLimit`` when both apply.

    Raises:
        NonFiniteError: if the state or either action is not finite.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    prev_a = np.asarray(prev_a, dtype=float)
    _require_finite('state', s)
    _require_finite('action', a)
    _require_finite('previous action', prev_a)

    next_state = propagate(s, a, params, task)
    r = float(rewards(s, a, prev_a, task, sign_mode))

    lo, hi = task.lower, task.upper
    outside = not (lo[X] <= next_state[X] <= hi[X] and lo[Y] <= next_state[Y] <= hi[Y])
    if outside:
        reason = TerminationReason.OUT_OF_BOUNDS
    elif k + 1 >= task.time_limit:
        reason = TerminationReason.TIME_LIMIT
    else:
        reason = TerminationReason.RUNNING
    return StepOutcome(next_state, r, reason is not TerminationReason.RUNNING, reason)


def reset(case_id):
    """Return the initial state of berthing case 1, 2 or 3."""
    try:
        u, v, phi, x, y, psi_deg = INITIAL_CASES[int(case_id)]
    except (KeyError, TypeError, ValueError):
        raise UnknownCaseError(f"Unknown berthing case {case_id!r}; expected one of {sorted(INITIAL_CASES)}")
    return np.array([u, v, phi, x, y, math.radians(psi_deg)])


def in_berth_zone(s, task=BerthingTask()):
    """Whether the ship's position lies in the berth rectangle (edges included)."""
    cx, cy = task.berth_center
    return bool(abs(s[X] - cx) <= task.berth_half_x and abs(s[Y] - cy) <= task.berth_half_y)


def is_berthed(s, task=BerthingTask(), speed_tol=0.05, yaw_rate_tol_deg=1.0):
    """In the berth zone and practically at rest."""
    return (in_berth_zone(s, task)
            and abs(s[U]) <= speed_tol
            and abs(s[V]) <= speed_tol
            and abs(s[PHI]) <= math.radians(yaw_rate_tol_deg))


class BerthingEnv:
    """
    One berthing episode at a time over the pure ``step`` function.

    Tracks the step index and the previously executed action, which starts
    as the zero action.
    """

    def __init__(self, case_id=1, params=None, task=None, sign_mode=RewardSign.NEGATED):
        self.case_id = case_id
        self.params = params or ShipParams()
        self.task = task or BerthingTask()
        self.sign_mode = RewardSign(sign_mode)
        self.state = None
        self.prev_action = ZERO_ACTION.copy()
        self.k = 0

    def reset(self):
        self.state = reset(self.case_id)
        self.prev_action = ZERO_ACTION.copy()
        self.k = 0
        return self.state.copy()

    def step(self, action):
        if self.state is None:
            raise RuntimeError("BerthingEnv.step called before reset()")
        action = np.asarray(action, dtype=float)
        outcome = step(self.state, action, self.prev_action, self.params, self.task, self.k, self.sign_mode)
        self.state = outcome.next_state
        self.prev_action = action.copy()
        self.k += 1
        if outcome.reason is TerminationReason.OUT_OF_BOUNDS:
            logger.debug(f"Case {self.case_id}: left the water area at step {self.k}")
        return outcome
