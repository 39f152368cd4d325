from django.core.management.base import BaseCommand

from densitylab.experiments import catalogue


class Command(BaseCommand):
    help = "List the experiments the run command knows, one per line"

    def handle(self, *args, **opts):
        rows = catalogue()
        name_width = max(len(row["name"]) for row in rows)
        schema_width = max(len(row["schema"]) for row in rows)
        for row in rows:
            required = ", ".join(row["required"]) or "none"
            self.stdout.write(
                f"{row['name']:<{name_width}}  {row['schema']:<{schema_width}}  "
                f"{row['example_config']}  {row['description']} (required: {required})"
            )
