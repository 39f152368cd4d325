"""
Run-config validation.

A run config is ``{schema_version, experiment, seed, parameters, output}``;
``parameters`` is validated by the experiment's own serializer before any
computation starts. Defaults missing from a config come from the defaults
table (``densitylab.defaults``).
"""
from fractions import Fraction

import numpy as np
from rest_framework import serializers

from .defaults import load_defaults
from .dynamics import ENVELOPES
from .exceptions import DensityLabError
from .hilbert import (
    DensityMatrix,
    Operator,
    PureState,
    bloch_density,
    bloch_state,
    from_pairs,
    pauli_sum,
    to_pairs,
)
from .models import ExperimentRun
from .tomography import SOURCES, Tomogram

SCHEMA_VERSION = 1
FORMATS = ("json", "csv")


def table_default(key):
    """Callable default so the table is read at validation time, not import time."""
    return lambda: load_defaults()[key]


def _complex(value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(float(value))


# ---------------------------------------------------------------------------
# Fields


class OperatorField(serializers.Field):
    """``{"pauli": {"ZI": 1.0}}`` or ``{"matrix": [[[re, im], ...], ...]}``."""

    default_error_messages = {
        "format": 'Expected {"pauli": {...}} or {"matrix": [[[re, im], ...], ...]}.',
        "invalid": "{message}",
    }

    def __init__(self, hermitian=True, **kwargs):
        self.hermitian = hermitian
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        if not isinstance(data, dict) or len(data) != 1:
            self.fail("format")
        try:
            if "pauli" in data:
                operator = pauli_sum(data["pauli"])
            elif "matrix" in data:
                operator = Operator(from_pairs(data["matrix"]))
            else:
                self.fail("format")
            if self.hermitian:
                operator.require_hermitian()
        except (DensityLabError, TypeError, AttributeError) as exc:
            self.fail("invalid", message=str(exc))
        return operator

    def to_representation(self, value):
        return {"matrix": to_pairs(value)}


class StateField(serializers.Field):
    """``{"amplitudes": [a0, [re, im], ...]}`` or ``{"bloch": [x, y, z]}`` (unit length)."""

    default_error_messages = {
        "format": 'Expected {"amplitudes": [...]} or {"bloch": [x, y, z]}.',
        "invalid": "{message}",
    }

    def to_internal_value(self, data):
        if not isinstance(data, dict) or len(data) != 1:
            self.fail("format")
        try:
            if "amplitudes" in data:
                return PureState.from_vector([_complex(a) for a in data["amplitudes"]])
            if "bloch" in data:
                return bloch_state(data["bloch"])
        except (DensityLabError, TypeError, ValueError) as exc:
            self.fail("invalid", message=str(exc))
        self.fail("format")

    def to_representation(self, value):
        return {"amplitudes": [[float(a.real), float(a.imag)] for a in value.amplitudes]}


class DensityField(StateField):
    """A StateField that also accepts mixed states: ``{"density": pairs}`` or a Bloch vector inside the ball."""

    default_error_messages = {
        "format": 'Expected {"density": [[[re, im], ...]]}, {"bloch": [x, y, z]} or {"amplitudes": [...]}.',
        "invalid": "{message}",
    }

    def to_internal_value(self, data):
        if not isinstance(data, dict) or len(data) != 1:
            self.fail("format")
        try:
            if "density" in data:
                return DensityMatrix(from_pairs(data["density"]))
            if "bloch" in data:
                if np.linalg.norm(np.asarray(data["bloch"], dtype=float)) > 1 + 1e-12:
                    self.fail("invalid", message="Bloch vector longer than 1")
                return bloch_density(data["bloch"])
        except (DensityLabError, TypeError, ValueError) as exc:
            self.fail("invalid", message=str(exc))
        return super().to_internal_value(data).projector()

    def to_representation(self, value):
        return {"density": to_pairs(value)}


class FractionField(serializers.Field):
    """A weight given as a number or a ``"p/q"`` string, kept exact."""

    def to_internal_value(self, data):
        try:
            value = Fraction(str(data))
        except (ValueError, ZeroDivisionError):
            raise serializers.ValidationError(f"{data!r} is not a rational number.")
        if value < 0:
            raise serializers.ValidationError("Weights must be non-negative.")
        return value

    def to_representation(self, value):
        return str(value)


# ---------------------------------------------------------------------------
# Shared blocks


class ScheduleSerializer(serializers.Serializer):
    T = serializers.FloatField(min_value=1e-9)
    envelope = serializers.ChoiceField(choices=ENVELOPES, default=table_default("envelope"))
    ramp = serializers.FloatField(min_value=1e-6, max_value=0.5, default=0.1)
    steps_per_unit = serializers.IntegerField(min_value=1, default=table_default("steps_per_unit"))


class ApparatusSerializer(serializers.Serializer):
    grid_points = serializers.IntegerField(min_value=8, required=False)
    half_width = serializers.FloatField(min_value=1e-9, required=False)
    width = serializers.FloatField(min_value=1e-9, required=False)
    mass = serializers.FloatField(min_value=1e-9, required=False)

    def validate_grid_points(self, value):
        if value & (value - 1):
            raise serializers.ValidationError("Must be a power of two.")
        return value


class ComponentSerializer(serializers.Serializer):
    state = StateField()
    count = serializers.IntegerField(min_value=0)


class TomogramEntrySerializer(serializers.Serializer):
    label = serializers.CharField()
    value = serializers.FloatField()


class TomogramSerializer(serializers.Serializer):
    """Tomogram JSON: ``{dim, entries: [{label, value}], source}``."""

    dim = serializers.IntegerField(min_value=2)
    entries = TomogramEntrySerializer(many=True)
    source = serializers.ChoiceField(choices=SOURCES, default="exact")

    def validate(self, attrs):
        labels = [entry["label"] for entry in attrs["entries"]]
        if len(set(labels)) != len(labels):
            raise serializers.ValidationError({"entries": "Duplicate observable labels."})
        return attrs

    def create(self, validated_data):
        return Tomogram(
            dim=validated_data["dim"],
            entries=[(e["label"], e["value"]) for e in validated_data["entries"]],
            source=validated_data["source"],
        )

    def to_representation(self, instance):
        if isinstance(instance, Tomogram):
            return instance.to_dict()
        return super().to_representation(instance)


# ---------------------------------------------------------------------------
# Per-experiment parameters


class ProtectiveParameters(serializers.Serializer):
    mode = serializers.ChoiceField(choices=("pure", "entangled"), default="pure")
    hamiltonian = OperatorField(required=False)
    level = serializers.IntegerField(min_value=0, default=0)
    state = StateField(required=False)
    observable = OperatorField()
    gap = serializers.FloatField(min_value=1e-8, default=table_default("gap"))
    schedule = ScheduleSerializer()
    apparatus = ApparatusSerializer(required=False)
    readout = serializers.ChoiceField(choices=("expectation", "single_shot"), default="expectation")

    def validate(self, attrs):
        if attrs["mode"] == "pure" and "hamiltonian" not in attrs:
            raise serializers.ValidationError({"hamiltonian": "Required in pure mode."})
        if attrs["mode"] == "entangled" and "state" not in attrs:
            raise serializers.ValidationError({"state": "Required in entangled mode."})
        return attrs


class ErrorScalingParameters(serializers.Serializer):
    hamiltonian = OperatorField()
    level = serializers.IntegerField(min_value=0, default=0)
    state = StateField(required=False)
    observable = OperatorField()
    T_values = serializers.ListField(child=serializers.FloatField(min_value=1e-9), min_length=1)
    envelope = serializers.ChoiceField(choices=ENVELOPES, default=table_default("envelope"))
    steps_per_unit = serializers.IntegerField(min_value=1, default=table_default("steps_per_unit"))
    apparatus = ApparatusSerializer(required=False)

    def validate_T_values(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("T values must be strictly ascending.")
        return value


class TomographyParameters(serializers.Serializer):
    target = StateField(required=False)
    subsystem_dims = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=2, max_length=2, required=False
    )
    tomogram = TomogramSerializer(required=False)
    source = serializers.ChoiceField(choices=SOURCES, default="exact")
    noise_sigma = serializers.FloatField(min_value=0, default=0.0)
    gap = serializers.FloatField(min_value=1e-8, default=table_default("gap"))
    T = serializers.FloatField(min_value=1e-9, required=False)
    envelope = serializers.ChoiceField(choices=ENVELOPES, default=table_default("envelope"))
    steps_per_unit = serializers.IntegerField(min_value=1, default=table_default("steps_per_unit"))
    apparatus = ApparatusSerializer(required=False)
    residual_bound = serializers.FloatField(min_value=0, default=table_default("residual_bound"))
    workers = serializers.IntegerField(min_value=1, default=1)

    def validate(self, attrs):
        if "target" not in attrs and "tomogram" not in attrs:
            raise serializers.ValidationError({"target": "Give a target state or a tomogram."})
        dims = attrs.get("subsystem_dims")
        if dims and "target" in attrs and dims[0] * dims[1] != attrs["target"].dim:
            raise serializers.ValidationError(
                {"subsystem_dims": f"{dims[0]}x{dims[1]} does not factor dimension {attrs['target'].dim}."}
            )
        if attrs["source"] == "simulated-noisy" and not attrs["noise_sigma"] > 0:
            raise serializers.ValidationError({"noise_sigma": "Must be positive for simulated-noisy tomograms."})
        return attrs


class GrowthSerializer(serializers.Serializer):
    hamiltonian = OperatorField()
    initial = StateField()
    dims = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2)
    times = serializers.ListField(child=serializers.FloatField(min_value=0), min_length=1)
    steps_per_unit = serializers.IntegerField(min_value=1, default=table_default("steps_per_unit"))
    trajectory_path = serializers.CharField(required=False)

    def validate_times(self, value):
        if any(b < a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("Times must be ascending.")
        return value


class EntropyParameters(serializers.Serializer):
    state = DensityField(required=False)
    unitary = OperatorField(hermitian=False, required=False)
    growth = GrowthSerializer(required=False)
    bits = serializers.BooleanField(default=False)

    def validate(self, attrs):
        if "state" not in attrs and "growth" not in attrs:
            raise serializers.ValidationError({"state": "Give a state, a growth block, or both."})
        if "unitary" in attrs and "state" not in attrs:
            raise serializers.ValidationError({"unitary": "A unitary needs a state to act on."})
        return attrs


class EnsembleParameters(serializers.Serializer):
    N = serializers.IntegerField(min_value=2, default=table_default("ensemble_N"))
    trials = serializers.IntegerField(min_value=1, default=table_default("ensemble_trials"))
    keep_trials = serializers.BooleanField(default=False)
    components = ComponentSerializer(many=True, required=False)
    draws = serializers.IntegerField(min_value=0, required=False)
    mode = serializers.ChoiceField(
        choices=("with_replacement", "without_replacement"), default="without_replacement"
    )

    def validate_N(self, value):
        if value % 2:
            raise serializers.ValidationError("N must be even.")
        return value


class BeamMergeParameters(serializers.Serializer):
    omega = serializers.FloatField(min_value=1e-9, default=table_default("larmor_omega"))


class FrequencyParameters(serializers.Serializer):
    weights = serializers.ListField(child=FractionField(), min_length=1)
    N_ladder = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1)
    n_draws = serializers.IntegerField(min_value=0)
    samples = serializers.IntegerField(min_value=1, default=200)

    def validate_weights(self, value):
        if sum(value) != 1:
            raise serializers.ValidationError("Weights must sum to exactly 1.")
        return value

    def validate_N_ladder(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("N ladder must be strictly ascending.")
        return value


PARAMETER_SERIALIZERS = {
    "protective": ProtectiveParameters,
    "tomography": TomographyParameters,
    "entropy": EntropyParameters,
    "ensemble": EnsembleParameters,
    "beam-merge": BeamMergeParameters,
    "error-scaling": ErrorScalingParameters,
    "frequency": FrequencyParameters,
}


# ---------------------------------------------------------------------------
# Run config


class OutputSerializer(serializers.Serializer):
    path = serializers.CharField(required=False)
    format = serializers.ChoiceField(choices=FORMATS, default="json")


class RunConfigSerializer(serializers.Serializer):
    schema_version = serializers.ChoiceField(choices=(SCHEMA_VERSION,), default=SCHEMA_VERSION)
    experiment = serializers.ChoiceField(choices=tuple(PARAMETER_SERIALIZERS))
    seed = serializers.IntegerField(min_value=0, default=0)
    parameters = serializers.DictField(default=dict)
    output = OutputSerializer(default=dict)

    def validate(self, attrs):
        parameters = PARAMETER_SERIALIZERS[attrs["experiment"]](data=attrs["parameters"])
        if not parameters.is_valid():
            raise serializers.ValidationError({"parameters": parameters.errors})
        attrs["parameters"] = parameters.validated_data
        return attrs


def flatten_errors(errors, prefix=""):
    """DRF error tree -> ["parameters.schedule.T: This field is required.", ...]."""
    messages = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == "non_field_errors" else f"{prefix}.{key}" if prefix else str(key)
            messages += flatten_errors(value, name)
    elif isinstance(errors, list):
        for index, value in enumerate(errors):
            if isinstance(value, (dict, list)):
                messages += flatten_errors(value, f"{prefix}.{index}" if prefix else str(index))
            else:
                messages.append(f"{prefix}: {value}" if prefix else str(value))
    else:
        messages.append(f"{prefix}: {errors}" if prefix else str(errors))
    return messages


# ---------------------------------------------------------------------------
# Run records


class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = (
            "id", "experiment", "seed", "config", "summary",
            "output_path", "output_format", "created_at",
        )
        read_only_fields = fields
