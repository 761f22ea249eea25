"""
ASGI entry point for the berthlab run registry.
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'berthlab.settings')

application = get_asgi_application()
