from django.core.management import call_command
from django.core.management.base import BaseCommand

# Exact-answer checks: gradients against finite differences, the closed-form
# Gaussian KL, dynamics against a direct transcription and the tabular operator.
ORACLE_LABELS = [
    'berthing.tests.test_neural_core.GradientCheckTests',
    'berthing.tests.test_vessel_env.DynamicsTranscriptionTests',
    'berthing.tests.test_rlfd.GaussianKlTests',
    'berthing.tests.test_rlfd.ReductionTests',
    'berthing.tests.test_tabular',
]


class Command(BaseCommand):
    help = "Run the oracle test suite."

    def handle(self, *args, **options):
        call_command('test', *ORACLE_LABELS, verbosity=options['verbosity'])
