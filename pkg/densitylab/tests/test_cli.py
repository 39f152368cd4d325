import csv
import io
import json
import tempfile
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from densitylab.defaults import apparatus_from, load_defaults
from densitylab.exceptions import DefaultsError, DensityLabError
from densitylab.experiments import EXPERIMENTS
from densitylab.models import ExperimentRun


class CommandTestMixin:
    def setUp(self):
        super().setUp()
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out_dir = Path(self.tmp.name)

    def run_command(self, *args):
        stdout = io.StringIO()
        call_command("run", *args, stdout=stdout)
        return stdout.getvalue()

    def write_config(self, config):
        path = self.out_dir / "config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        return str(path)


class ShippedConfigTests(CommandTestMixin, SimpleTestCase):
    def test_every_experiment_has_a_config_that_runs(self):
        for name in EXPERIMENTS:
            with self.subTest(experiment=name):
                config_path = settings.DENSITYLAB_CONFIG_DIR / f"{name}.json"
                config = json.loads(config_path.read_text(encoding="utf-8"))
                fmt = config["output"]["format"]
                out = self.out_dir / f"{name}.{fmt}"
                message = self.run_command("--config", str(config_path), "--out", str(out))
                self.assertIn(str(out), message)
                self.assertTrue(out.exists())
                if fmt == "json":
                    payload = json.loads(out.read_text(encoding="utf-8"))
                    self.assertEqual(payload["experiment"], name)
                    self.assertEqual(payload["schema_version"], 1)
                    self.assertEqual(payload["seed"], config["seed"])

    def test_protective_config_recovers_tilted_expectation(self):
        out = self.out_dir / "protective.json"
        self.run_command("--config", str(settings.DENSITYLAB_CONFIG_DIR / "protective.json"), "--out", str(out))
        measurement = json.loads(out.read_text(encoding="utf-8"))["measurement"]
        self.assertAlmostEqual(measurement["exact"], 0.4472135954999579, places=9)
        self.assertLess(measurement["error"], 1e-2)


class RunCommandTests(CommandTestMixin, SimpleTestCase):
    def test_ensemble_is_reproducible(self):
        first, second = self.out_dir / "a.json", self.out_dir / "b.json"
        for out in (first, second):
            self.run_command("ensemble", "--N", "100", "--trials", "10000", "--seed", "7", "--out", str(out))
        self.assertEqual(first.read_bytes(), second.read_bytes())
        payload = json.loads(first.read_text(encoding="utf-8"))
        z, x = payload["preparations"]
        self.assertEqual(z["empirical_std"], 0.0)
        self.assertLess(abs(x["empirical_std"] - 10.0), 0.5)

    def test_missing_schedule_time(self):
        config = self.write_config({
            "experiment": "protective",
            "parameters": {
                "hamiltonian": {"pauli": {"Z": -1.0}},
                "observable": {"pauli": {"X": 1.0}},
                "schedule": {"envelope": "sin2"},
            },
        })
        with self.assertRaises(CommandError) as cm:
            self.run_command("--config", config, "--out", str(self.out_dir / "x.json"))
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("parameters.schedule.T", str(cm.exception))
        self.assertFalse((self.out_dir / "x.json").exists())

    def test_unknown_experiment(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command("teleportation")
        self.assertEqual(cm.exception.returncode, 2)

    def test_config_for_other_experiment(self):
        config = self.write_config({"experiment": "beam-merge"})
        with self.assertRaises(CommandError) as cm:
            self.run_command("ensemble", "--config", config)
        self.assertEqual(cm.exception.returncode, 2)

    def test_odd_ensemble_size_is_a_validation_error(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command("ensemble", "--N", "7", "--out", str(self.out_dir / "x.json"))
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("parameters.N", str(cm.exception))

    def test_runtime_failure(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command(
                "protective",
                "--set", 'hamiltonian={"pauli": {"Z": 1.0}}',
                "--set", 'observable={"pauli": {"X": 1.0}}',
                "--set", "schedule.T=5",
                "--set", "level=7",
                "--out", str(self.out_dir / "x.json"),
            )
        self.assertEqual(cm.exception.returncode, 1)

    def test_missing_defaults_table_is_a_runtime_failure(self):
        out = self.out_dir / "merge.json"
        with self.settings(DENSITYLAB_DEFAULTS_PATH="/nonexistent/defaults.json"):
            with self.assertRaises(CommandError) as cm:
                self.run_command("beam-merge", "--out", str(out))
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn("/nonexistent/defaults.json", str(cm.exception))
        self.assertFalse(out.exists())

    def test_set_override(self):
        out = self.out_dir / "merge.json"
        self.run_command("beam-merge", "--set", "omega=2.5", "--out", str(out))
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(payload["rotation"]["omega"], 2.5)
        self.assertAlmostEqual(payload["trace_distances"]["full"], 0.7071067811865476, places=12)

    def test_malformed_set(self):
        with self.assertRaises(CommandError) as cm:
            self.run_command("beam-merge", "--set", "omega")
        self.assertEqual(cm.exception.returncode, 2)

    def test_csv_output(self):
        out = self.out_dir / "frequency.csv"
        self.run_command(
            "--config", str(settings.DENSITYLAB_CONFIG_DIR / "frequency.json"), "--out", str(out)
        )
        with open(out, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["N", "worst_case_distance", "mean_random_distance", "memory_ratio"])
        self.assertEqual([row[0] for row in rows[1:]], ["6", "60", "600", "6000"])
        self.assertAlmostEqual(float(rows[1][1]), 0.25)

    def test_no_temporary_files_left(self):
        self.run_command("beam-merge", "--out", str(self.out_dir / "merge.json"))
        self.assertEqual(sorted(p.name for p in self.out_dir.iterdir()), ["merge.json"])


class RecordTests(CommandTestMixin, TestCase):
    def test_record_stores_run(self):
        out = self.out_dir / "merge.json"
        self.run_command("beam-merge", "--seed", "3", "--out", str(out), "--record")
        run = ExperimentRun.objects.get()
        self.assertEqual(run.experiment, "beam-merge")
        self.assertEqual(run.seed, 3)
        self.assertEqual(run.output_path, str(out))
        self.assertEqual(run.output_format, "json")
        self.assertTrue(run.summary.startswith("beam-merge:"))

    def test_no_record_by_default(self):
        self.run_command("beam-merge", "--out", str(self.out_dir / "merge.json"))
        self.assertFalse(ExperimentRun.objects.exists())


class ListCommandTests(SimpleTestCase):
    def list_output(self):
        stdout = io.StringIO()
        call_command("list", stdout=stdout)
        return stdout.getvalue()

    def test_one_line_per_experiment(self):
        lines = self.list_output().splitlines()
        self.assertEqual(len(lines), len(EXPERIMENTS))
        for line, experiment in zip(lines, EXPERIMENTS.values()):
            self.assertTrue(line.startswith(experiment.name))
            self.assertIn(experiment.schema, line)
            self.assertIn(f"configs/{experiment.name}.json", line)

    def test_stable(self):
        self.assertEqual(self.list_output(), self.list_output())


class DefaultsTableTests(SimpleTestCase):
    def test_shipped_table(self):
        table = load_defaults()
        self.assertEqual(table["gap"], 1.0)
        self.assertEqual(table["grid_points"], 128)

    def test_unreadable_table(self):
        with self.assertRaises(DefaultsError):
            load_defaults("/nonexistent/defaults.json")

    def test_incomplete_table(self):
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump({"gap": 1.0}, f)
        self.addCleanup(Path(f.name).unlink)
        with self.assertRaises(DefaultsError):
            load_defaults(f.name)

    def test_defaults_error_is_a_library_error(self):
        self.assertTrue(issubclass(DefaultsError, DensityLabError))

    def test_configured_path_is_honoured(self):
        with self.settings(DENSITYLAB_DEFAULTS_PATH="/nonexistent/defaults.json"):
            with self.assertRaises(DefaultsError):
                load_defaults()
        self.assertEqual(load_defaults()["gap"], 1.0)

    def test_apparatus_falls_back_on_table(self):
        apparatus = apparatus_from({"grid_points": 64})
        self.assertEqual(apparatus.grid_points, 64)
        self.assertEqual(apparatus.mass, load_defaults()["pointer_mass"])
