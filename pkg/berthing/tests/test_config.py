import os
import tempfile
import unittest
from pathlib import Path

from django.conf import settings
from django.test import override_settings
from hypothesis import given, settings as hsettings, strategies as st
from rest_framework.exceptions import ValidationError

from berthing.utils.config import (
    CONFIG_KEYS, default_config, load_config, parse_config_text, save_config, serialize_config,
)
from berthing.utils.seeding import STREAM_NAMES, RunStreams
from berthing.utils.vessel_env import RewardSign


class DefaultConfigTests(unittest.TestCase):

    def test_defaults(self):
        cfg = default_config()
        self.assertEqual(cfg.algorithm, 'sgac')
        self.assertEqual((cfg.gamma, cfg.alpha, cfg.horizon, cfg.n_sequences), (0.9, 0.001, 3, 10))
        self.assertEqual((cfg.episodes, cfg.time_limit), (700, 150))
        self.assertEqual(cfg.eval_every, 10)
        self.assertEqual(set(CONFIG_KEYS), set(settings.BERTHING_DEFAULTS))

    def test_derived_settings(self):
        cfg = default_config(algorithm='mpddpg_smbc', case_id=3, seed=4, time_limit=20, horizon=2)
        self.assertEqual(cfg.run_name, 'mpddpg_smbc_case3_seed4')
        self.assertTrue(cfg.uses_expert)
        self.assertFalse(default_config(algorithm='td3').uses_expert)
        self.assertEqual(cfg.task().time_limit, 20)
        mpbe = cfg.mpbe_config()
        self.assertEqual((mpbe.horizon, mpbe.n_sequences, mpbe.gamma), (2, 10, 0.9))
        self.assertIs(mpbe.sign_mode, RewardSign.NEGATED)

    @override_settings(BERTHING_OUTPUT_ROOT=Path('/tmp/berthing-runs'))
    def test_run_dir(self):
        self.assertEqual(default_config(seed=2).run_dir(), Path('/tmp/berthing-runs/sgac_case1_seed2'))
        self.assertEqual(default_config(output_dir='/data/run7').run_dir(), Path('/data/run7'))


class ParseConfigTests(unittest.TestCase):

    def test_partial_file_with_comments(self):
        cfg = parse_config_text("# case 2 baseline\n\nalgorithm = td3\ncase_id=2\n  seed=11\ngamma=0.95\n")
        self.assertEqual((cfg.algorithm, cfg.case_id, cfg.seed, cfg.gamma), ('td3', 2, 11, 0.95))
        self.assertEqual(cfg.horizon, 3)

    def test_unknown_key(self):
        with self.assertRaises(ValidationError) as ctx:
            parse_config_text("algorithm=sgac\nlearning_rate=0.1\n")
        self.assertIn('learning_rate', ctx.exception.detail)

    def test_invalid_values(self):
        for text in ("gamma=1.0\n", "eps=2\n", "algorithm=ppo\n", "case_id=4\n", "horizon=0\n",
                     "sign_mode=flipped\n", "model=perfect\n", "batch_size=many\n"):
            with self.subTest(text=text):
                with self.assertRaises(ValidationError):
                    parse_config_text(text)

    def test_malformed_and_duplicate_lines(self):
        with self.assertRaises(ValidationError):
            parse_config_text("algorithm sgac\n")
        with self.assertRaises(ValidationError):
            parse_config_text("seed=1\nseed=2\n")


class RoundTripTests(unittest.TestCase):

    def test_serialize_parse_serialize(self):
        cfg = default_config(algorithm='mpddpg', case_id=2, seed=9, alpha=3e-4, output_dir='runs/x')
        text = serialize_config(cfg)
        again = parse_config_text(text)
        self.assertEqual(again, cfg)
        self.assertEqual(serialize_config(again), text)
        self.assertEqual([line.split('=')[0] for line in text.splitlines()], list(CONFIG_KEYS))

    @given(st.floats(0.0, 0.999), st.floats(1e-6, 1.0), st.floats(0.0, 10.0), st.integers(0, 2 ** 31))
    @hsettings(max_examples=50, deadline=None)
    def test_round_trip_is_byte_identical(self, gamma, alpha, lambda_bc, seed):
        cfg = default_config(gamma=gamma, alpha=alpha, lambda_bc=lambda_bc, seed=seed)
        text = serialize_config(cfg)
        self.assertEqual(serialize_config(parse_config_text(text)), text)

    def test_file_round_trip(self):
        cfg = default_config(algorithm='ddpg', episodes=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'config.txt')
            save_config(cfg, path)
            self.assertEqual(load_config(path), cfg)


class RunStreamsTests(unittest.TestCase):

    def test_streams_are_reproducible_and_independent(self):
        first, second = RunStreams.from_seed(5), RunStreams.from_seed(5)
        draws = {}
        for name in STREAM_NAMES:
            a = getattr(first, name).random(4)
            self.assertEqual(a.tolist(), getattr(second, name).random(4).tolist())
            draws[name] = tuple(a)
        self.assertEqual(len(set(draws.values())), len(STREAM_NAMES))
        self.assertNotEqual(RunStreams.from_seed(6).init.random(), RunStreams.from_seed(5).init.random())
