"""
Django settings for the berthlab project.

Hosts the berthing app: the vessel simulator, the demonstration-guided
agents, the training harness commands and a read-only registry of runs.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'django-insecure-berthlab-local-development-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = True

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'berthing.apps.BerthingConfig',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'rest_framework',
    'drf_spectacular',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'berthlab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'berthlab.wsgi.application'


# Database
# https://docs.djangoproject.com/en/5.1/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework settings
REST_FRAMEWORK = {
    # The registry is read-only and local
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny'
    ],
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 10,
    'DEFAULT_FILTER_BACKENDS': [
        'rest_framework.filters.SearchFilter',
        'rest_framework.filters.OrderingFilter',
    ],
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
        'rest_framework.renderers.BrowsableAPIRenderer',
    ],
    'DEFAULT_SCHEMA_CLASS': 'drf_spectacular.openapi.AutoSchema',
}

# Experiment defaults. Every key can be overridden in a run's config file.
BERTHING_DEFAULTS = {
    'algorithm': 'sgac',
    'case_id': 1,
    'seed': 0,
    'episodes': 700,
    'time_limit': 150,
    'gamma': 0.9,
    'alpha': 0.001,
    'horizon': 3,
    'n_sequences': 10,
    'batch_size': 64,
    'eps': 0.005,
    'lambda_bc': 0.5,
    'lambda0': 1.0,
    'zeta': 0.001,
    'noise_scale': 1.0,
    'sign_mode': 'negated',
    'model': 'learned',
    'output_dir': '',
    'buffer_capacity': 100000,
    'model_fit_steps': 200,
    'model_alpha': 0.001,
    'eval_every': 10,
    'policy_delay': 2,
    'target_noise': 0.2,
    'target_clip': 0.5,
}

# Root directory for run artifacts
BERTHING_OUTPUT_ROOT = Path(os.environ.get('BERTHING_OUTPUT_ROOT', BASE_DIR / 'runs'))

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': 'training_activities.log',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': True,
        },
        'berthing': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

# Spectacular settings
SPECTACULAR_SETTINGS = {
    'TITLE': 'Berthlab Run Registry API',
    'DESCRIPTION': '''
Read-only API over the training runs registered by `manage.py train`.

- `GET /runs/` lists runs with their algorithm, case, seed and headline returns.
- `GET /runs/{id}/episodes/` returns the learning curve of one run.
- `GET /runs/compare/?ids=1,2,3` builds the algorithm comparison table
  (maximum training return and deterministic test return) from the runs' logs.
''',
    'VERSION': '1.0.0',
    'SERVE_INCLUDE_SCHEMA': False,
    'COMPONENT_SPLIT_REQUEST': True,
    'TAGS': [
        {'name': 'runs', 'description': 'Registered training runs and their learning curves'},
    ],
    'CAMELIZE_NAMES': False,
}
