from django.apps import AppConfig


class BerthingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'berthing'
