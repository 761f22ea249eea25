"""
Experiment configuration.

Config files are flat ``key=value`` text, one key per line, ``#`` starting a
comment line. Omitted keys take their value from
``settings.BERTHING_DEFAULTS``; unknown keys are rejected. Serialization
writes every key in a fixed order with ``repr`` floats, so a written config
parses back to an identical ``ExperimentConfig`` and re-serializes to the
same bytes.
"""

import logging
from dataclasses import dataclass, fields
from pathlib import Path

from django.conf import settings
from rest_framework.exceptions import ValidationError

from ..serializers import ExperimentConfigSerializer
from .mpbe import MpbeConfig
from .vessel_env import BerthingTask, RewardSign

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    case_id: int
    seed: int
    episodes: int
    time_limit: int
    gamma: float
    alpha: float
    horizon: int
    n_sequences: int
    batch_size: int
    eps: float
    lambda_bc: float
    lambda0: float
    zeta: float
    noise_scale: float
    sign_mode: str
    model: str
    output_dir: str
    buffer_capacity: int
    model_fit_steps: int
    model_alpha: float
    eval_every: int
    policy_delay: int
    target_noise: float
    target_clip: float

    @property
    def run_name(self):
        return f"{self.algorithm}_case{self.case_id}_seed{self.seed}"

    @property
    def uses_expert(self):
        return self.algorithm in ('mpddpg', 'mpddpg_smbc', 'sgac')

    def task(self):
        return BerthingTask(time_limit=self.time_limit)

    def mpbe_config(self):
        return MpbeConfig(n_sequences=self.n_sequences, horizon=self.horizon, gamma=self.gamma,
                          noise_scale=self.noise_scale, sign_mode=RewardSign(self.sign_mode), task=self.task())

    def run_dir(self):
        """Artifact directory: ``output_dir`` when set, else a per-run folder under the output root."""
        if self.output_dir:
            return Path(self.output_dir)
        return Path(settings.BERTHING_OUTPUT_ROOT) / self.run_name


CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))


def validate_config(values):
    """
    Validate a mapping of raw values merged over the defaults.

    Raises:
        ValidationError: naming every invalid or unknown key.
    """
    data = {**settings.BERTHING_DEFAULTS, **values}
    serializer = ExperimentConfigSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return ExperimentConfig(**{key: serializer.validated_data[key] for key in CONFIG_KEYS})


def default_config(**overrides):
    return validate_config(overrides)


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or not key:
            raise ValidationError({'line': [f"Line {lineno} is not of the form key=value: {raw!r}"]})
        if key in values:
            raise ValidationError({key: [f"Duplicate key on line {lineno}."]})
        values[key] = value.strip()
    return validate_config(values)


def load_config(path):
    with open(path) as fh:
        cfg = parse_config_text(fh.read())
    logger.info(f"Loaded config {path}: {cfg.algorithm}, case {cfg.case_id}, seed {cfg.seed}")
    return cfg


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    return ''.join(f"{key}={_format_value(getattr(cfg, key))}\n" for key in CONFIG_KEYS)


def save_config(cfg, path):
    with open(path, 'w') as fh:
        fh.write(serialize_config(cfg))

