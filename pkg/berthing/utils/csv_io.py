"""
CSV records shared by training, evaluation and comparison.

Numbers are written with 9 significant digits so that repeated runs diff
cleanly; missing values are written as empty cells.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

EPISODE_HEADER = ['episode', 'return', 'test_return', 'critic_loss', 'actor_obj', 'lambda',
                  'imitation_residual', 'model_loss', 'steps', 'terminated_reason']

TRAJECTORY_HEADER = ['k', 'u', 'v', 'phi', 'X', 'Y', 'psi_deg', 'tau_u', 'tau_phi', 'reward', 'in_zone']

NON_FINITE_REASON = 'NonFinite'


def fmt(x):
    if x is None:
        return ''
    return f"{float(x):.9g}"


def mean_or_none(values):
    return float(np.mean(values)) if values else None


@dataclass(frozen=True)
class TrajectoryRow:
    """One executed step: post-step state, the action applied and its reward."""
    k: int
    state: np.ndarray
    action: np.ndarray
    reward: float
    in_zone: bool

    def as_row(self):
        s = self.state
        return [str(self.k), fmt(s[0]), fmt(s[1]), fmt(s[2]), fmt(s[3]), fmt(s[4]), fmt(math.degrees(s[5])),
                fmt(self.action[0]), fmt(self.action[1]), fmt(self.reward), str(int(self.in_zone))]


@dataclass
class EpisodeLog:
    """
    Per-episode training record.

    Attributes:
        episode (int): Zero-based episode index.
        episode_return (float): Sum of rewards collected while training.
        test_return (float): Deterministic evaluation return, when one was run.
        critic_loss (float): Mean critic loss over the episode's updates.
        actor_obj (float): Mean actor objective over the episode's actor updates.
        dual (float): SGAC dual variable at episode end.
        imitation_residual (float): Mean ||mu(s) - a_E|| over expert-labelled steps.
        model_loss (float): World-model loss after the end-of-episode refit.
        steps (int): Environment steps taken.
        terminated_reason (str): Why the episode stopped.
        trajectory (list): Optional ``TrajectoryRow`` list.
    """
    episode: int
    episode_return: float = 0.0
    test_return: float = None
    critic_loss: float = None
    actor_obj: float = None
    dual: float = None
    imitation_residual: float = None
    model_loss: float = None
    steps: int = 0
    terminated_reason: str = 'Running'
    trajectory: list = field(default_factory=list, repr=False)

    def as_row(self):
        return [str(self.episode), fmt(self.episode_return), fmt(self.test_return), fmt(self.critic_loss),
                fmt(self.actor_obj), fmt(self.dual), fmt(self.imitation_residual), fmt(self.model_loss),
                str(self.steps), self.terminated_reason]


def write_learning_curve(path, logs):
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(EPISODE_HEADER)
        for log in logs:
            writer.writerow(log.as_row())
    logger.info(f"Learning curve with {len(logs)} episodes written to {path}")


def read_learning_curve(path):
    """Rows of a learning-curve CSV as dicts of the raw cell strings."""
    with open(path, newline='') as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EPISODE_HEADER:
            raise ValueError(f"{path} is not a learning curve, header is {reader.fieldnames}")
        return list(reader)


def write_trajectory(path, rows):
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(TRAJECTORY_HEADER)
        for row in rows:
            writer.writerow(row.as_row())
    logger.info(f"Trajectory with {len(rows)} steps written to {path}")


def read_trajectory(path):
    with open(path, newline='') as fh:
        return list(csv.DictReader(fh))
