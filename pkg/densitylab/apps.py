from django.apps import AppConfig


class DensityLabConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'densitylab'
    verbose_name = 'Density matrix laboratory'
