from django.core.management.base import BaseCommand, CommandError

from berthing.exceptions import MissingRunsError
from berthing.utils.harness import compare, write_report


class Command(BaseCommand):
    help = "Tabulate max training return and test return per algorithm over finished runs."

    def add_arguments(self, parser):
        parser.add_argument('--runs', nargs='+', required=True, help="Run directories written by train")
        parser.add_argument('--output', default=None, help="Optional CSV path for the table")

    def handle(self, *args, **options):
        try:
            report = compare(options['runs'])
        except MissingRunsError as e:
            raise CommandError(f"Missing runs: {', '.join(e.missing)}")
        except ValueError as e:
            raise CommandError(str(e))

        width = max(len(c) for c in report.columns + ['max_training_return'])
        self.stdout.write(' ' * (width + 2) + ''.join(c.ljust(width + 2) for c in report.columns))
        for label, row in (('max_training_return', report.max_training_return),
                           ('test_return', report.test_return)):
            self.stdout.write(label.ljust(width + 2) + ''.join(row[c].ljust(width + 2) for c in report.columns))
        for key, value in report.diagnostics.items():
            self.stdout.write(f"{key}: {value}")

        if options['output']:
            write_report(report, options['output'])
            self.stdout.write(self.style.SUCCESS(f"Table written to {options['output']}"))
