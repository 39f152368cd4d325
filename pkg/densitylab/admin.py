from django.contrib import admin
from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """
    Read-only admin view for recorded runs.
    Rows are written by the run command only.
    """
    list_display = ('id', 'experiment', 'seed', 'output_format', 'output_path', 'created_at')
    list_filter = ('experiment', 'output_format', 'created_at')
    search_fields = ('summary', 'output_path')
    readonly_fields = ('experiment', 'seed', 'config', 'summary', 'output_path', 'output_format', 'created_at')

    def has_add_permission(self, request):
        return False

    def has_delete_permission(self, request, obj=None):
        return False
