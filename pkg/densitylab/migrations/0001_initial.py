# Generated by Django 5.1.1

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('experiment', models.CharField(max_length=50)),
                ('seed', models.IntegerField()),
                ('config', models.JSONField(help_text='Run config as given, after flag overrides')),
                ('summary', models.TextField(help_text='One-line summary printed by the run command')),
                ('output_path', models.CharField(max_length=500)),
                ('output_format', models.CharField(max_length=10)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'db_table': 'experiment_runs',
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
