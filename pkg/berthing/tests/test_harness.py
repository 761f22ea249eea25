import csv
import tempfile
import unittest
from io import StringIO
from pathlib import Path
from unittest.mock import patch

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from berthing.exceptions import MissingRunsError, NonFiniteError
from berthing.models import TrainingRun
from berthing.utils.agents_baseline import init_actor
from berthing.utils.config import default_config, save_config, serialize_config
from berthing.utils.csv_io import (
    NON_FINITE_REASON, TRAJECTORY_HEADER, EpisodeLog, read_learning_curve, read_trajectory, write_learning_curve,
)
from berthing.utils.harness import (
    CHECKPOINT_FILE, CONFIG_FILE, CURVE_FILE, compare, evaluate, train, write_report,
)
from berthing.utils.neural_core import forward, load_checkpoint, pack_network, save_checkpoint, zeros_like_mlp
from berthing.utils.vessel_env import BerthingEnv, TerminationReason

# Small runs: a handful of short episodes with the exact dynamics as the expert's model
TINY = dict(episodes=2, time_limit=5, batch_size=8, eval_every=1, model='oracle')


def tiny_config(**overrides):
    return default_config(**{**TINY, **overrides})


def constant_actor_checkpoint(path, action):
    actor = zeros_like_mlp(init_actor(np.random.default_rng(0)))
    actor.biases[-1][:] = np.arctanh(action)
    save_checkpoint(path, pack_network('actor', actor))
    return actor


def fake_run(root, name, algorithm, returns, test_returns):
    run_dir = Path(root) / name
    run_dir.mkdir()
    save_config(default_config(algorithm=algorithm), run_dir / CONFIG_FILE)
    logs = [EpisodeLog(episode=i, episode_return=r, test_return=t, steps=150, terminated_reason='TimeLimit')
            for i, (r, t) in enumerate(zip(returns, test_returns))]
    write_learning_curve(run_dir / CURVE_FILE, logs)
    return run_dir


class TrainTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_zero_episodes(self):
        result = train(tiny_config(episodes=0), self.root / 'empty')
        self.assertEqual(read_learning_curve(result.curve_path), [])
        arrays = load_checkpoint(result.checkpoint_path)
        self.assertIn('actor/W0', arrays)
        self.assertEqual(str(arrays['algorithm']), 'sgac')
        self.assertIsNone(result.max_training_return)
        self.assertEqual((self.root / 'empty' / CONFIG_FILE).read_text(), serialize_config(result.config))

    def test_same_seed_gives_identical_curves(self):
        for algorithm in ('sgac', 'mpddpg_smbc', 'td3'):
            with self.subTest(algorithm=algorithm):
                cfg = tiny_config(algorithm=algorithm, seed=3)
                first = train(cfg, self.root / f"{algorithm}_a")
                second = train(cfg, self.root / f"{algorithm}_b")
                self.assertEqual(first.curve_path.read_bytes(), second.curve_path.read_bytes())

    def test_learned_model_run(self):
        result = train(tiny_config(algorithm='mpddpg', model='learned', model_fit_steps=3), self.root / 'mp')
        rows = read_learning_curve(result.curve_path)
        self.assertEqual(len(rows), 2)
        self.assertTrue(all(row['model_loss'] != '' for row in rows))
        self.assertIn('model/in_mean', load_checkpoint(result.checkpoint_path))

    def test_curve_contents(self):
        result = train(tiny_config(episodes=3, eval_every=2), self.root / 'sgac')
        rows = read_learning_curve(result.curve_path)
        self.assertEqual([int(row['episode']) for row in rows], [0, 1, 2])
        self.assertEqual([row['test_return'] != '' for row in rows], [False, True, True])
        self.assertTrue(all(row['lambda'] != '' for row in rows))
        self.assertTrue(all(row['terminated_reason'] in ('TimeLimit', 'OutOfBounds') for row in rows))
        self.assertEqual(result.final_test_return, result.logs[-1].test_return)

    def test_non_finite_loss_is_recorded(self):
        cfg = tiny_config(algorithm='ddpg', episodes=3)
        failing = NonFiniteError("Critic loss is not finite: nan")
        with patch('berthing.utils.agents_baseline.fit_critic', side_effect=failing):
            with self.assertRaises(NonFiniteError):
                train(cfg, self.root / 'bad')
        rows = read_learning_curve(self.root / 'bad' / CURVE_FILE)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]['episode'], '0')
        self.assertEqual(rows[0]['terminated_reason'], NON_FINITE_REASON)
        self.assertEqual(rows[0]['steps'], '1')


class EvaluateTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_null_policy_stays_at_start(self):
        checkpoint = self.root / CHECKPOINT_FILE
        constant_actor_checkpoint(checkpoint, np.zeros(2))
        result = evaluate(checkpoint, 1)
        self.assertFalse(result.success)
        self.assertEqual(result.steps, 150)
        self.assertEqual(result.terminated_reason, TerminationReason.TIME_LIMIT.value)
        np.testing.assert_allclose(result.final_state[3:5], [9.0, 5.0], atol=1e-9)

    def test_constant_action_return_is_hand_summed(self):
        checkpoint = self.root / CHECKPOINT_FILE
        actor = constant_actor_checkpoint(checkpoint, np.array([0.3, 0.1]))
        before = checkpoint.read_bytes()
        trajectory = self.root / 'trajectory.csv'
        result = evaluate(checkpoint, 2, trajectory_path=trajectory)

        env = BerthingEnv(2)
        s, total, outcome = env.reset(), 0.0, None
        while outcome is None or not outcome.terminal:
            outcome = env.step(np.clip(forward(actor, s), -1.0, 1.0))
            total += outcome.reward
            s = outcome.next_state
        self.assertAlmostEqual(result.total_return, total, places=9)
        self.assertEqual(result.steps, env.k)

        rows = read_trajectory(trajectory)
        self.assertEqual(list(rows[0]), TRAJECTORY_HEADER)
        self.assertEqual(len(rows), env.k)
        self.assertAlmostEqual(sum(float(row['reward']) for row in rows), total, places=4)
        self.assertEqual(checkpoint.read_bytes(), before)

    def test_default_trajectory_path(self):
        checkpoint = self.root / CHECKPOINT_FILE
        constant_actor_checkpoint(checkpoint, np.zeros(2))
        result = evaluate(checkpoint, 3, time_limit=4)
        self.assertEqual(result.trajectory_path, self.root / 'evaluation_case3.csv')
        self.assertEqual(len(read_trajectory(result.trajectory_path)), 4)


class CompareTests(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_table_passes_values_through(self):
        runs = [
            fake_run(self.root, 'td3_1', 'td3', [-5.5, 12.25, 3.0], [None, None, 7.125]),
            fake_run(self.root, 'sgac_1', 'sgac', [1.0, 40.5], [None, 30.0]),
            fake_run(self.root, 'sgac_2', 'sgac', [2.0, 50.75], [None, 20.5]),
            fake_run(self.root, 'sgac_3', 'sgac', [60.125, 3.0], [None, 35.0]),
        ]
        report = compare(runs)
        self.assertEqual(report.columns, ['sgac', 'td3'])
        self.assertEqual(report.max_training_return, {'sgac': '50.75', 'td3': '12.25'})
        self.assertEqual(report.test_return, {'sgac': '30', 'td3': '7.125'})
        self.assertEqual(report.diagnostics['largest_drop'], 'sgac')

        path = self.root / 'table.csv'
        write_report(report, path)
        with open(path, newline='') as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(rows, [['metric', 'sgac', 'td3'], ['max_training_return', '50.75', '12.25'],
                                ['test_return', '30', '7.125']])

    def test_identical_runs_give_identical_rows(self):
        a = fake_run(self.root, 'a', 'mpddpg', [1.5, 2.5], [None, 2.0])
        b = fake_run(self.root, 'b', 'mpddpg', [1.5, 2.5], [None, 2.0])
        report = compare([a, b])
        self.assertEqual(report.runs[0].as_dict() | {'run': 'b'}, report.runs[1].as_dict())

    def test_sgac_against_mpddpg_diagnostic(self):
        runs = [fake_run(self.root, 'sgac', 'sgac', [5.0], [4.0]),
                fake_run(self.root, 'mpddpg', 'mpddpg', [9.0], [1.0])]
        report = compare(runs)
        self.assertTrue(report.diagnostics['sgac_beats_mpddpg'])
        self.assertEqual(report.diagnostics['largest_drop'], 'mpddpg')

    def test_missing_runs_are_listed(self):
        present = fake_run(self.root, 'present', 'ddpg', [1.0], [1.0])
        with self.assertRaises(MissingRunsError) as ctx:
            compare([present, self.root / 'gone', self.root / 'also_gone'])
        self.assertEqual(ctx.exception.missing, [str(self.root / 'gone'), str(self.root / 'also_gone')])

    def test_needs_two_runs(self):
        with self.assertRaises(ValueError):
            compare([fake_run(self.root, 'only', 'ddpg', [1.0], [1.0])])


class CommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _config_file(self, name, **overrides):
        path = self.root / f"{name}.txt"
        path.write_text(''.join(f"{key}={value}\n" for key, value in {**TINY, **overrides}.items()))
        return path

    def test_train_registers_run(self):
        out = StringIO()
        config = self._config_file('sgac', seed=1)
        call_command('train', '--config', str(config), '--output-dir', str(self.root / 'run'), stdout=out)
        run = TrainingRun.objects.get()
        self.assertEqual(run.algorithm, 'sgac')
        self.assertEqual(run.seed, 1)
        self.assertEqual(run.episodes, 2)
        self.assertEqual(run.episode_records.count(), 2)
        self.assertEqual(run.config_text, (self.root / 'run' / CONFIG_FILE).read_text())
        self.assertIn('Registered run', out.getvalue())

        # training again into the same directory replaces the entry
        call_command('train', '--config', str(config), '--output-dir', str(self.root / 'run'), stdout=StringIO())
        self.assertEqual(TrainingRun.objects.count(), 1)

    def test_train_without_registering(self):
        call_command('train', '--config', str(self._config_file('td3', algorithm='td3')),
                     '--output-dir', str(self.root / 'td3'), '--no-register', stdout=StringIO())
        self.assertEqual(TrainingRun.objects.count(), 0)
        self.assertTrue((self.root / 'td3' / CURVE_FILE).is_file())

    def test_train_rejects_bad_config(self):
        with self.assertRaises(CommandError):
            call_command('train', '--config', str(self._config_file('bad', learning_rate=0.1)), stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('train', '--config', str(self.root / 'missing.txt'), stdout=StringIO())

    def test_evaluate_and_compare(self):
        checkpoint = self.root / CHECKPOINT_FILE
        constant_actor_checkpoint(checkpoint, np.zeros(2))
        out = StringIO()
        call_command('evaluate', '--checkpoint', str(checkpoint), '--case', '1',
                     '--output', str(self.root / 'eval.csv'), stdout=out)
        self.assertIn('success: False', out.getvalue())
        self.assertTrue((self.root / 'eval.csv').is_file())

        runs = [fake_run(self.root, 'x', 'ddpg', [1.0], [0.5]), fake_run(self.root, 'y', 'td3', [2.0], [1.5])]
        out = StringIO()
        call_command('compare', '--runs', *map(str, runs), '--output', str(self.root / 'table.csv'), stdout=out)
        self.assertIn('max_training_return', out.getvalue())
        self.assertTrue((self.root / 'table.csv').is_file())

        with self.assertRaises(CommandError):
            call_command('compare', '--runs', str(runs[0]), str(self.root / 'nope'), stdout=StringIO())
        with self.assertRaises(CommandError):
            call_command('evaluate', '--checkpoint', str(self.root / 'nope.npz'), '--case', '1', stdout=StringIO())
