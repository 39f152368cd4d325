import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from densitylab.exceptions import DefaultsError, DensityLabError
from densitylab.experiments import EXPERIMENTS, run_experiment
from densitylab.exporters import write_artifact
from densitylab.models import ExperimentRun
from densitylab.serializers import RunConfigSerializer, flatten_errors

VALIDATION_FAILURE = 2
RUNTIME_FAILURE = 1

TOP_LEVEL_KEYS = ("schema_version", "experiment", "seed", "parameters", "output")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(config, assignment):
    """``schedule.T=25`` or ``parameters.schedule.T=25``; values are parsed as JSON when possible."""
    key, sep, value = assignment.partition("=")
    if not sep or not key:
        raise CommandError(f"--set expects key.path=value, got {assignment!r}", returncode=VALIDATION_FAILURE)
    path = key.split(".")
    if path[0] not in TOP_LEVEL_KEYS:
        path = ["parameters"] + path
    node = config
    for part in path[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            child = node[part] = {}
        node = child
    node[path[-1]] = _parse_value(value)


class Command(BaseCommand):
    help = "Run one experiment from a JSON config and write its artifact"

    def add_arguments(self, parser):
        parser.add_argument("experiment", nargs="?", help=f"one of: {', '.join(EXPERIMENTS)}")
        parser.add_argument("--config", help="run config JSON file")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--out", help="artifact path")
        parser.add_argument("--format", choices=("json", "csv"))
        parser.add_argument("--set", action="append", default=[], dest="overrides",
                            metavar="KEY=VALUE", help="override a config value (repeatable)")
        parser.add_argument("--N", type=int, dest="N", help="ensemble size")
        parser.add_argument("--trials", type=int, help="Monte Carlo trials")
        parser.add_argument("--record", action="store_true", help="store the run in the database")

    def load_config(self, opts):
        if not opts["config"]:
            return {}
        try:
            with open(opts["config"], "r", encoding="utf-8") as f:
                config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise CommandError(f"cannot read config {opts['config']}: {e}", returncode=VALIDATION_FAILURE)
        if not isinstance(config, dict):
            raise CommandError("config must be a JSON object", returncode=VALIDATION_FAILURE)
        return config

    def build_config(self, opts):
        config = self.load_config(opts)
        experiment = opts["experiment"]
        if experiment and config.get("experiment", experiment) != experiment:
            raise CommandError(
                f"config is for {config['experiment']!r}, not {experiment!r}",
                returncode=VALIDATION_FAILURE,
            )
        if experiment:
            config["experiment"] = experiment
        if "experiment" not in config:
            raise CommandError("no experiment given", returncode=VALIDATION_FAILURE)
        if config["experiment"] not in EXPERIMENTS:
            raise CommandError(
                f"unknown experiment {config['experiment']!r}; choose from {', '.join(EXPERIMENTS)}",
                returncode=VALIDATION_FAILURE,
            )

        if opts["seed"] is not None:
            config["seed"] = opts["seed"]
        output = config.setdefault("output", {})
        if opts["out"]:
            output["path"] = opts["out"]
        if opts["format"]:
            output["format"] = opts["format"]
        parameters = config.setdefault("parameters", {})
        if opts["N"] is not None:
            parameters["N"] = opts["N"]
        if opts["trials"] is not None:
            parameters["trials"] = opts["trials"]
        for assignment in opts["overrides"]:
            apply_override(config, assignment)
        return config

    def handle(self, *args, **opts):
        config = self.build_config(opts)
        serializer = RunConfigSerializer(data=config)
        try:
            valid = serializer.is_valid()
        except DefaultsError as e:
            raise CommandError(f"cannot load defaults: {e}", returncode=RUNTIME_FAILURE)
        if not valid:
            raise CommandError(
                "invalid config: " + "; ".join(flatten_errors(serializer.errors)),
                returncode=VALIDATION_FAILURE,
            )
        data = serializer.validated_data
        name, seed = data["experiment"], data["seed"]
        fmt = data["output"].get("format", "json")
        path = Path(data["output"].get("path") or f"results/{name}-seed{seed}.{fmt}")

        try:
            result = run_experiment(name, data["parameters"], seed)
            write_artifact(path, result, fmt)
        except DensityLabError as e:
            raise CommandError(f"{name} failed: {e}", returncode=RUNTIME_FAILURE)
        except OSError as e:
            raise CommandError(f"cannot write {path}: {e}", returncode=RUNTIME_FAILURE)

        if opts["record"]:
            ExperimentRun.objects.create(
                experiment=name,
                seed=seed,
                config=config,
                summary=result.summary,
                output_path=str(path),
                output_format=fmt,
            )
        self.stdout.write(self.style.SUCCESS(f"{result.summary} -> {path}"))
