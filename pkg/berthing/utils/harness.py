"""
Training, evaluation and comparison of berthing agents.

A run directory holds ``config.txt``, ``learning_curve.csv`` and
``checkpoint.npz``. Everything random in a run is drawn from the named
substreams of one seed, so the same config reproduces the same learning
curve byte for byte.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import MissingRunsError, NonFiniteError
from . import agents_baseline, rlfd
from .config import load_config, save_config, serialize_config
from .csv_io import (
    NON_FINITE_REASON, EpisodeLog, TrajectoryRow, fmt, read_learning_curve, write_learning_curve,
    write_trajectory,
)
from .mpbe import expert_advantage
from .neural_core import forward, load_checkpoint, save_checkpoint, unpack_network
from .replay import RingBuffer
from .seeding import RunStreams
from .vessel_env import (
    A_MAX, A_MIN, BerthingEnv, BerthingTask, RewardSign, ShipParams, TerminationReason, in_berth_zone, is_berthed,
)
from .world_model import OracleModel, init_dyn_model

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.txt'
CURVE_FILE = 'learning_curve.csv'
CHECKPOINT_FILE = 'checkpoint.npz'

# Column order of the comparison table
TABLE_COLUMNS = ('sgac', 'mpddpg_smbc', 'mpddpg', 'td3', 'ddpg')

ADVANTAGE_SAMPLE = 16


@dataclass
class TrainResult:
    run_dir: Path
    config: object
    config_text: str
    logs: list
    curve_path: Path
    checkpoint_path: Path

    @property
    def max_training_return(self):
        return max((log.episode_return for log in self.logs), default=None)

    @property
    def final_test_return(self):
        tested = [log.test_return for log in self.logs if log.test_return is not None]
        return tested[-1] if tested else None


@dataclass
class EvaluationResult:
    total_return: float
    success: bool
    steps: int
    terminated_reason: str
    final_state: np.ndarray
    rows: list = field(repr=False)
    trajectory_path: Path = None


# --- Building learners ---

@dataclass
class Learner:
    """An agent of any algorithm and the function that runs one of its training episodes."""
    algorithm: str
    agent: object
    run_episode: object

    @property
    def actor(self):
        return self.agent.actor

    def checkpoint_arrays(self):
        arrays = self.agent.checkpoint_arrays()
        arrays['algorithm'] = np.asarray(self.algorithm)
        return arrays

    def expert_buffers(self):
        if isinstance(self.agent, rlfd.MpDdpgAgent):
            return [self.agent.rb_expert, self.agent.rb_agent]
        if isinstance(self.agent, rlfd.SgacAgent):
            return [self.agent.rb]
        return []


def build_learner(cfg, streams):
    rng = streams.init
    common = dict(gamma=cfg.gamma, eps=cfg.eps, lr=cfg.alpha, noise_scale=cfg.noise_scale)
    twin = dict(policy_delay=cfg.policy_delay, target_noise=cfg.target_noise, target_clip=cfg.target_clip)

    if cfg.algorithm in ('ddpg', 'td3'):
        agent = agents_baseline.make_ddpg(rng, **common) if cfg.algorithm == 'ddpg' \
            else agents_baseline.make_td3(rng, **common, **twin)
        learner = agents_baseline.BaselineLearner(agent, RingBuffer(cfg.buffer_capacity, 'RB'), cfg.batch_size)
        return Learner(cfg.algorithm, learner, agents_baseline.baseline_episode)

    if cfg.model == 'oracle':
        model = OracleModel(ShipParams(), cfg.task())
    else:
        model = init_dyn_model(rng, lr=cfg.model_alpha)
    expert = rlfd.ExpertSetup(model=model, mpbe=cfg.mpbe_config(), fit_steps=cfg.model_fit_steps,
                              fit_batch=cfg.batch_size)

    if cfg.algorithm == 'sgac':
        agent = rlfd.make_sgac(rng, expert, lambda0=cfg.lambda0, zeta=cfg.zeta, batch_size=cfg.batch_size,
                               capacity=cfg.buffer_capacity, **common, **twin)
        return Learner(cfg.algorithm, agent, rlfd.sgac_episode)

    mixing = cfg.algorithm == 'mpddpg_smbc'
    agent = rlfd.make_mpddpg(rng, expert, use_sm=mixing, use_bc=mixing, lambda_bc=cfg.lambda_bc,
                             batch_size=cfg.batch_size, capacity=cfg.buffer_capacity, **common)
    return Learner(cfg.algorithm, agent, rlfd.mpddpg_episode)


# --- Deterministic rollouts ---

def greedy_rollout(actor, env):
    """Run the noise-free policy from ``env.reset()`` until the episode ends."""
    s = env.reset()
    rows, total = [], 0.0
    while True:
        a = np.clip(forward(actor, s), A_MIN, A_MAX)
        outcome = env.step(a)
        total += outcome.reward
        s = outcome.next_state
        rows.append(TrajectoryRow(env.k, s, a, outcome.reward, in_berth_zone(s, env.task)))
        if outcome.terminal:
            break
    success = outcome.reason is not TerminationReason.OUT_OF_BOUNDS and is_berthed(s, env.task)
    return EvaluationResult(total_return=total, success=success, steps=env.k,
                            terminated_reason=outcome.reason.value, final_state=s, rows=rows)


def _log_expert_advantage(learner, streams, episode):
    items = [item for buf in learner.expert_buffers() for item in buf.items()]
    if not items:
        return
    idx = streams.diagnostics.choice(len(items), size=min(ADVANTAGE_SAMPLE, len(items)), replace=False)
    states = np.stack([items[i].s for i in idx])
    prev = np.zeros((len(idx), 2))
    agent = learner.agent
    critic = agent.target_critic1 if isinstance(agent, rlfd.SgacAgent) else agent.base.target_critic
    gap = expert_advantage(agent.actor, agent.expert.model, critic, states, prev, agent.expert.mpbe,
                           streams.diagnostics)
    logger.info(f"Episode {episode}: expert advantage {gap:.6g} over {len(idx)} states")


# --- Train ---

def train(cfg, run_dir=None):
    """
    Train ``cfg.algorithm`` on ``cfg.case_id`` for ``cfg.episodes`` episodes.

    A deterministic test episode runs every ``cfg.eval_every`` episodes and
    after the last one.

    Returns:
        TrainResult: Paths of the artifacts and the episode logs.

    Raises:
        NonFiniteError: after the failing episode has been written to the curve.
    """
    run_dir = Path(run_dir) if run_dir is not None else cfg.run_dir()
    run_dir.mkdir(parents=True, exist_ok=True)
    config_path = run_dir / CONFIG_FILE
    curve_path = run_dir / CURVE_FILE
    checkpoint_path = run_dir / CHECKPOINT_FILE
    save_config(cfg, config_path)

    streams = RunStreams.from_seed(cfg.seed)
    learner = build_learner(cfg, streams)
    task = cfg.task()
    sign_mode = RewardSign(cfg.sign_mode)
    env = BerthingEnv(cfg.case_id, task=task, sign_mode=sign_mode)
    test_env = BerthingEnv(cfg.case_id, task=task, sign_mode=sign_mode)
    logger.info(f"Training {cfg.algorithm} on case {cfg.case_id} with seed {cfg.seed} for {cfg.episodes} episodes "
                f"into {run_dir}")

    logs = []
    for episode in range(cfg.episodes):
        try:
            log = learner.run_episode(learner.agent, env, streams, episode)
        except NonFiniteError as exc:
            logs.append(EpisodeLog(episode=episode, steps=env.k, terminated_reason=NON_FINITE_REASON))
            write_learning_curve(curve_path, logs)
            logger.error(f"Run {run_dir.name} aborted in episode {episode}: {exc}")
            raise
        if (episode + 1) % cfg.eval_every == 0 or episode == cfg.episodes - 1:
            log.test_return = greedy_rollout(learner.actor, test_env).total_return
            if cfg.uses_expert:
                _log_expert_advantage(learner, streams, episode)
        logs.append(log)
        logger.info(f"Episode {episode}: return {log.episode_return:.4f}, steps {log.steps}, "
                    f"{log.terminated_reason}" + (f", test {log.test_return:.4f}" if log.test_return is not None else ''))

    write_learning_curve(curve_path, logs)
    save_checkpoint(checkpoint_path, learner.checkpoint_arrays())
    return TrainResult(run_dir=run_dir, config=cfg, config_text=serialize_config(cfg), logs=logs,
                       curve_path=curve_path, checkpoint_path=checkpoint_path)


# --- Evaluate ---

def evaluate(checkpoint, case_id, sign_mode=RewardSign.NEGATED, trajectory_path=None, time_limit=150):
    """
    Roll the checkpoint's actor without noise from the chosen initial condition.

    Only the ``actor`` group of the checkpoint is read; the file is not modified.

    Returns:
        EvaluationResult: Return, success flag and the written trajectory path.
    """
    checkpoint = Path(checkpoint)
    actor = unpack_network('actor', load_checkpoint(checkpoint))
    env = BerthingEnv(case_id, task=BerthingTask(time_limit=time_limit), sign_mode=RewardSign(sign_mode))
    result = greedy_rollout(actor, env)
    if trajectory_path is None:
        trajectory_path = checkpoint.parent / f"evaluation_case{case_id}.csv"
    write_trajectory(trajectory_path, result.rows)
    result.trajectory_path = Path(trajectory_path)
    logger.info(f"Evaluated {checkpoint} on case {case_id}: return {result.total_return:.4f}, "
                f"{result.terminated_reason}, success {result.success}")
    return result


# --- Compare ---

@dataclass(frozen=True)
class RunSummary:
    run: str
    algorithm: str
    case_id: int
    seed: int
    max_training_return: str
    test_return: str

    def as_dict(self):
        return {'run': self.run, 'algorithm': self.algorithm, 'case_id': self.case_id, 'seed': self.seed,
                'max_training_return': self.max_training_return, 'test_return': self.test_return}


@dataclass
class ComparisonReport:
    runs: list
    columns: list
    max_training_return: dict
    test_return: dict
    diagnostics: dict

    def as_dict(self):
        return {'runs': [r.as_dict() for r in self.runs], 'columns': self.columns,
                'max_training_return': self.max_training_return, 'test_return': self.test_return,
                'diagnostics': self.diagnostics}


def _max_cell(cells):
    """The cell holding the largest value, passed through as written."""
    filled = [c for c in cells if c != '']
    return max(filled, key=float) if filled else ''


def _median_low_cell(cells):
    filled = sorted((c for c in cells if c != ''), key=float)
    return filled[(len(filled) - 1) // 2] if filled else ''


def summarize_run(run_dir):
    run_dir = Path(run_dir)
    cfg = load_config(run_dir / CONFIG_FILE)
    rows = read_learning_curve(run_dir / CURVE_FILE)
    tested = [row['test_return'] for row in rows if row['test_return'] != '']
    if not tested:
        logger.warning(f"Run {run_dir.name} has no test returns")
    return RunSummary(run=run_dir.name, algorithm=cfg.algorithm, case_id=cfg.case_id, seed=cfg.seed,
                      max_training_return=_max_cell([row['return'] for row in rows]),
                      test_return=tested[-1] if tested else '')


def compare(run_dirs):
    """
    Build the algorithm comparison table from finished runs.

    Per algorithm, each row reports the median (lower middle) over its runs of
    the maximum raw training return and of the final test return.

    Raises:
        MissingRunsError: listing every directory without a config or learning curve.
        ValueError: if fewer than two runs are given.
    """
    run_dirs = [Path(d) for d in run_dirs]
    if len(run_dirs) < 2:
        raise ValueError("compare needs at least two runs")
    missing = [str(d) for d in run_dirs if not ((d / CONFIG_FILE).is_file() and (d / CURVE_FILE).is_file())]
    if missing:
        raise MissingRunsError(missing)

    runs = [summarize_run(d) for d in run_dirs]
    present = {r.algorithm for r in runs}
    columns = [alg for alg in TABLE_COLUMNS if alg in present]
    max_row, test_row = {}, {}
    for alg in columns:
        mine = [r for r in runs if r.algorithm == alg]
        max_row[alg] = _median_low_cell([r.max_training_return for r in mine])
        test_row[alg] = _median_low_cell([r.test_return for r in mine])
    report = ComparisonReport(runs=runs, columns=columns, max_training_return=max_row, test_return=test_row,
                              diagnostics=ordering_diagnostics(columns, max_row, test_row))
    logger.info(f"Compared {len(runs)} runs over {', '.join(columns)}")
    return report


def ordering_diagnostics(columns, max_row, test_row):
    """
    Soft checks on the table: SGAC should test better than plain MP-DDPG, and
    plain MP-DDPG should lose the most between training and testing.
    """
    diagnostics = {}
    if 'sgac' in columns and 'mpddpg' in columns and test_row['sgac'] and test_row['mpddpg']:
        diagnostics['sgac_beats_mpddpg'] = float(test_row['sgac']) > float(test_row['mpddpg'])
        if not diagnostics['sgac_beats_mpddpg']:
            logger.warning("SGAC does not test better than MP-DDPG without SM & BC")
    drops = {alg: float(max_row[alg]) - float(test_row[alg]) for alg in columns if max_row[alg] and test_row[alg]}
    if drops:
        diagnostics['largest_drop'] = max(drops, key=drops.get)
        diagnostics['drops'] = {alg: fmt(drop) for alg, drop in drops.items()}
    return diagnostics


def write_report(report, path):
    """Write the table as CSV: one row per metric, one column per algorithm."""
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(['metric', *report.columns])
        writer.writerow(['max_training_return', *(report.max_training_return[a] for a in report.columns)])
        writer.writerow(['test_return', *(report.test_return[a] for a in report.columns)])
    logger.info(f"Comparison table written to {path}")
