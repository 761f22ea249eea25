"""
WSGI entry point for the berthlab run registry.

Serves the read-only ``/runs/`` API that browses registered training runs.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'berthlab.settings')

application = get_wsgi_application()
