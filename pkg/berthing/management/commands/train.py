from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from berthing.exceptions import NonFiniteError
from berthing.models import TrainingRun
from berthing.utils.config import load_config
from berthing.utils.harness import train
import logging

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Train one agent from a key=value experiment config and register the run."

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help="Path of the experiment config file")
        parser.add_argument('--output-dir', default=None,
                            help="Artifact directory; overrides output_dir from the config")
        parser.add_argument('--no-register', action='store_true',
                            help="Do not store the run in the registry database")

    def handle(self, *args, **options):
        try:
            cfg = load_config(options['config'])
        except FileNotFoundError:
            raise CommandError(f"Config file not found: {options['config']}")
        except ValidationError as e:
            raise CommandError(f"Invalid config {options['config']}: {e.detail}")

        try:
            result = train(cfg, run_dir=options['output_dir'])
        except NonFiniteError as e:
            raise CommandError(f"Training aborted on a non-finite value: {e}")

        if not options['no_register']:
            run = TrainingRun.register(result)
            self.stdout.write(f"Registered run #{run.id} ({run.name})")

        best = result.max_training_return
        final = result.final_test_return
        self.stdout.write(self.style.SUCCESS(
            f"Trained {cfg.algorithm} on case {cfg.case_id} for {len(result.logs)} episodes. "
            f"Max training return: {'n/a' if best is None else f'{best:.4f}'}, "
            f"test return: {'n/a' if final is None else f'{final:.4f}'}"
        ))
        self.stdout.write(f"Learning curve: {result.curve_path}")
        self.stdout.write(f"Checkpoint: {result.checkpoint_path}")
