"""
Fixed-capacity FIFO experience buffers.

One ``RingBuffer`` class serves the plain replay buffer, the expert/agent
buffer pair of MP-DDPG and the expert-labelled buffer of SGAC. Items are
immutable ``Transition`` / ``AugmentedTransition`` records; ``stack_batch``
turns a sampled list into column arrays for the update rules.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptyBufferError, NonFiniteError
from .csv_io import fmt
from .vessel_env import A_MAX, A_MIN

logger = logging.getLogger(__name__)

AGENT = 'agent'
EXPERT = 'expert'


def _validate(name, value, shape):
    value = np.array(value, dtype=float)
    if value.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {value.shape}")
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{name} contains non-finite values: {value}")
    value.flags.writeable = False
    return value


def _validate_action(name, value):
    value = _validate(name, value, (2,))
    if np.any(value < A_MIN) or np.any(value > A_MAX):
        raise ValueError(f"{name} {value} lies outside the action bounds")
    return value


@dataclass(frozen=True, eq=False)
class Transition:
    """
    One environment step.

    Attributes:
        s, a, r, s_next, terminal: The usual replay tuple.
        source (str): ``agent`` or ``expert``; which policy chose ``a``.
    """
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool = False
    source: str = AGENT

    def __post_init__(self):
        object.__setattr__(self, 's', _validate('s', self.s, (6,)))
        object.__setattr__(self, 'a', _validate_action('a', self.a))
        object.__setattr__(self, 's_next', _validate('s_next', self.s_next, (6,)))
        if not np.isfinite(self.r):
            raise NonFiniteError(f"reward is not finite: {self.r}")
        object.__setattr__(self, 'r', float(self.r))
        object.__setattr__(self, 'terminal', bool(self.terminal))
        if self.source not in (AGENT, EXPERT):
            raise ValueError(f"Unknown transition source {self.source!r}")


@dataclass(frozen=True, eq=False)
class AugmentedTransition(Transition):
    """A transition carrying the expert's label action for its state."""
    a_expert: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        if self.a_expert is None:
            raise ValueError("AugmentedTransition requires a_expert")
        object.__setattr__(self, 'a_expert', _validate_action('a_expert', self.a_expert))


@dataclass(frozen=True, eq=False)
class TransitionBatch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    expert_actions: np.ndarray = None

    def __len__(self):
        return len(self.rewards)


def stack_batch(items):
    """Column-stack a list of transitions."""
    if not items:
        raise EmptyBufferError("Cannot stack an empty batch")
    expert = None
    if all(isinstance(t, AugmentedTransition) for t in items):
        expert = np.stack([t.a_expert for t in items])
    return TransitionBatch(
        states=np.stack([t.s for t in items]),
        actions=np.stack([t.a for t in items]),
        rewards=np.array([t.r for t in items]),
        next_states=np.stack([t.s_next for t in items]),
        terminals=np.array([t.terminal for t in items], dtype=bool),
        expert_actions=expert,
    )


class RingBuffer:
    """
    FIFO buffer that evicts the oldest item once ``capacity`` is reached.
    """

    def __init__(self, capacity=100_000, name='RB'):
        if capacity <= 0:
            raise ValueError("Buffer capacity must be positive")
        self.capacity = int(capacity)
        self.name = name
        self._items = []
        self._cursor = 0

    def __len__(self):
        return len(self._items)

    def push(self, item):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
        self._cursor = (self._cursor + 1) % self.capacity

    def items(self):
        """Stored items from oldest to newest."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._cursor:] + self._items[:self._cursor]

    def sample(self, n, rng):
        """
        Draw ``n`` items uniformly.

        Indices are distinct when the buffer holds at least ``n`` items;
        a smaller buffer is sampled with replacement.

        Raises:
            EmptyBufferError: if the buffer is empty.
        """
        size = len(self._items)
        if size == 0:
            raise EmptyBufferError(f"Cannot sample from empty buffer {self.name}")
        if size >= n:
            indices = rng.choice(size, size=n, replace=False)
        else:
            logger.debug(f"{self.name} holds {size} < {n} items, sampling with replacement")
            indices = rng.integers(0, size, size=n)
        return [self._items[i] for i in indices]

    def sample_batch(self, n, rng):
        return stack_batch(self.sample(n, rng))


DUMP_HEADER = ['index', 'source', 'u', 'v', 'phi', 'X', 'Y', 'psi_deg', 'tau_u', 'tau_phi',
               'reward', 'terminal', 'u_next', 'v_next', 'phi_next', 'X_next', 'Y_next', 'psi_next_deg',
               'expert_tau_u', 'expert_tau_phi']


def dump_csv(buffer, path):
    """Write the buffer contents, oldest first, for debugging."""
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(DUMP_HEADER)
        for i, t in enumerate(buffer.items()):
            s, s_next = t.s.copy(), t.s_next.copy()
            s[5], s_next[5] = np.degrees(s[5]), np.degrees(s_next[5])
            expert = getattr(t, 'a_expert', None)
            expert_cols = [fmt(x) for x in expert] if expert is not None else ['', '']
            writer.writerow([i, t.source, *(fmt(x) for x in s), *(fmt(x) for x in t.a), fmt(t.r),
                             int(t.terminal), *(fmt(x) for x in s_next), *expert_cols])
    logger.info(f"Dumped {len(buffer)} items of {buffer.name} to {path}")
