from django.db import models


class ExperimentRun(models.Model):
    """
    One completed `manage.py run ... --record` invocation.
    The artifact itself stays on disk; this keeps the config and summary.
    """
    experiment = models.CharField(max_length=50)
    seed = models.IntegerField()
    config = models.JSONField(
        help_text="Run config as given, after flag overrides"
    )
    summary = models.TextField(
        help_text="One-line summary printed by the run command"
    )
    output_path = models.CharField(max_length=500)
    output_format = models.CharField(max_length=10)
    created_at = models.DateTimeField(
        auto_now_add=True
    )

    class Meta:
        db_table = 'experiment_runs'
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.experiment} (seed {self.seed}) -> {self.output_path}"
