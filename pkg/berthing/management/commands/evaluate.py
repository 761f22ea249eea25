from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from berthing.exceptions import ArchitectureMismatchError, UnknownCaseError
from berthing.utils.harness import evaluate
from berthing.utils.vessel_env import RewardSign


class Command(BaseCommand):
    help = "Roll a checkpoint's actor without exploration noise and write its trajectory CSV."

    def add_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help="Path of a checkpoint.npz written by train")
        parser.add_argument('--case', type=int, choices=[1, 2, 3], required=True, help="Initial condition")
        parser.add_argument('--sign-mode', default=RewardSign.NEGATED.value,
                            choices=[mode.value for mode in RewardSign])
        parser.add_argument('--time-limit', type=int, default=150)
        parser.add_argument('--output', default=None,
                            help="Trajectory CSV path; defaults to evaluation_case<N>.csv beside the checkpoint")

    def handle(self, *args, **options):
        checkpoint = Path(options['checkpoint'])
        if not checkpoint.is_file():
            raise CommandError(f"Checkpoint not found: {checkpoint}")
        try:
            result = evaluate(checkpoint, options['case'], sign_mode=options['sign_mode'],
                              trajectory_path=options['output'], time_limit=options['time_limit'])
        except (KeyError, ArchitectureMismatchError, UnknownCaseError) as e:
            raise CommandError(f"Cannot evaluate {checkpoint}: {e}")

        style = self.style.SUCCESS if result.success else self.style.WARNING
        self.stdout.write(style(
            f"Case {options['case']}: return {result.total_return:.4f} after {result.steps} steps "
            f"({result.terminated_reason}), success: {result.success}"
        ))
        self.stdout.write(f"Trajectory: {result.trajectory_path}")
