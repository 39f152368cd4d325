"""
Experiment registry for the ``run`` and ``list`` management commands.

Each runner takes validated parameters (see ``serializers``) and a seed and
returns an ExperimentResult: a one-line summary, the JSON payload and the
rows written in CSV mode. Nothing here reads the clock or global state, so
a (config, seed) pair always produces the same artifact bytes.
"""
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

from .defaults import apparatus_from, load_defaults
from .dynamics import TimeDependentHamiltonian, evolve_to_times, trajectory_rows
from .entropy import entanglement_growth, entropy_under_unitary, von_neumann_entropy
from .exceptions import DimensionMismatch, NotQubit
from .exporters import render_csv, write_atomic
from .hilbert import PureState, eig_hermitian, partial_trace, to_pairs, trace_distance
from .mixtures import (
    FiniteEnsemble,
    averaged_spin_stats,
    beam_merge_demo,
    conditional_distribution,
    despagnat_experiment,
    despagnat_pair,
    ensemble_density_matrix,
    frequency_convergence,
    sample,
    spin_rotation_demo,
    total_spin_z_stats,
)
from .protective import (
    ProtectiveSetup,
    build_protection_hamiltonian,
    default_schedule,
    entangled_exact,
    entangled_setup_factory,
    error_scaling_study,
    outcome_record,
    pure_setup_factory,
    run_protective,
    split_dims,
)
from .serializers import PARAMETER_SERIALIZERS, SCHEMA_VERSION
from .tomography import (
    Tomogram,
    exact_tomogram,
    hermitian_basis,
    noisy_tomogram,
    reconstruct_with_report,
    tomograph_via_protective,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentResult:
    summary: str
    payload: dict
    rows: list = field(default_factory=list)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    required: tuple
    runner: Callable

    @property
    def schema(self):
        return PARAMETER_SERIALIZERS[self.name].__name__

    @property
    def example_config(self):
        return f"configs/{self.name}.json"


def _protected_state(params):
    """The configured state, or eigenvector ``level`` (ascending energy) of the Hamiltonian."""
    if "state" in params:
        return params["state"]
    h = params["hamiltonian"]
    if params["level"] >= h.dim:
        raise DimensionMismatch(f"level {params['level']} out of range for dim {h.dim}")
    _, vectors = eig_hermitian(h)
    return PureState.from_vector(vectors[:, params["level"]])


def _density_record(rho):
    return {"matrix": to_pairs(rho), "eigenvalues": [float(v) for v in rho.eigenvalues()]}


# ---------------------------------------------------------------------------
# Runners


def run_protective_experiment(params, seed):
    apparatus = apparatus_from(params.get("apparatus"))
    schedule_params = params["schedule"]
    if params["mode"] == "entangled":
        chi, a = params["state"], params["observable"]
        dims = split_dims(chi, a)
        setup = entangled_setup_factory(
            chi, dims, params["gap"], schedule_params["T"], apparatus,
            schedule_params["envelope"], schedule_params["steps_per_unit"],
        )(a)
        exact = entangled_exact(chi, a)
    else:
        h = params["hamiltonian"]
        state = _protected_state(params)
        schedule = default_schedule(
            h, params["observable"], apparatus, schedule_params["T"],
            schedule_params["envelope"], schedule_params["steps_per_unit"], schedule_params["ramp"],
        )
        setup = ProtectiveSetup(h, state, params["observable"], schedule, apparatus)
        exact = setup.exact_value()

    outcome = run_protective(setup, readout=params["readout"], seed=seed)
    record = outcome_record("A", outcome, exact)
    payload = {
        "mode": params["mode"],
        "readout": params["readout"],
        "measurement": record,
        "pointer_shift": outcome.pointer_shift,
        "sampled_position": outcome.sampled_position,
        "protected_energy": setup.energy,
        "gap": setup.gap,
        "schedule": {
            "T": setup.schedule.total_time,
            "steps": setup.schedule.steps,
            "envelope": setup.schedule.envelope,
        },
    }
    summary = (
        f"protective: estimate {outcome.estimate:.6f}, exact {exact:.6f}, "
        f"error {record['error']:.2e}, disturbance {outcome.disturbance:.2e}"
    )
    return ExperimentResult(summary, payload, [record])


def run_error_scaling(params, seed):
    apparatus = apparatus_from(params.get("apparatus"))
    state = _protected_state(params)
    setup = pure_setup_factory(
        params["hamiltonian"], state, params["T_values"][0], apparatus,
        params["envelope"], params["steps_per_unit"],
    )(params["observable"])
    rows = [asdict(row) for row in error_scaling_study(setup, params["T_values"], params["steps_per_unit"])]
    payload = {"gap": setup.gap, "exact": setup.exact_value(), "ladder": rows}
    summary = (
        f"error-scaling: {len(rows)} points, error {rows[0]['error']:.2e} at T={rows[0]['T']:g} "
        f"-> {rows[-1]['error']:.2e} at T={rows[-1]['T']:g}"
    )
    return ExperimentResult(summary, payload, rows)


def run_tomography(params, seed):
    exact = None
    if "tomogram" in params:
        given = params["tomogram"]
        tomogram = Tomogram(
            dim=given["dim"],
            entries=[(entry["label"], entry["value"]) for entry in given["entries"]],
            source=given["source"],
        )
        observable_set = hermitian_basis(tomogram.dim)
        if "target" in params:
            exact = params["target"].projector()
    else:
        target = params["target"]
        dims = params.get("subsystem_dims")
        exact = partial_trace(target, dims, keep=1) if dims else target.projector()
        observable_set = hermitian_basis(exact.dim)
        if params["source"] != "protective-simulated":
            if params["noise_sigma"] > 0:
                tomogram = noisy_tomogram(exact, observable_set, params["noise_sigma"], seed)
            else:
                tomogram = exact_tomogram(exact, observable_set)
        else:
            apparatus = apparatus_from(params.get("apparatus"))
            T = params.get("T") or load_defaults()["T_over_gap"] / params["gap"]
            if dims:
                factory = entangled_setup_factory(
                    target, dims, params["gap"], T, apparatus,
                    params["envelope"], params["steps_per_unit"],
                )
            else:
                factory = pure_setup_factory(
                    build_protection_hamiltonian(target, params["gap"]), target, T, apparatus,
                    params["envelope"], params["steps_per_unit"],
                )
            tomogram, _ = tomograph_via_protective(
                factory, observable_set, params["workers"], params["residual_bound"]
            )

    rho, report = reconstruct_with_report(tomogram, observable_set, params["residual_bound"])
    distance = trace_distance(rho, exact) if exact is not None and exact.dim == rho.dim else None
    exact_values = dict(exact_tomogram(exact, observable_set).entries) if distance is not None else {}
    rows = [
        {"label": label, "value": value, "exact": exact_values.get(label)}
        for label, value in tomogram.entries
    ]
    payload = {
        "tomogram": tomogram.to_dict(),
        "reconstruction": _density_record(rho),
        "report": asdict(report),
        "exact": _density_record(exact) if distance is not None else None,
        "trace_distance": distance,
    }
    summary = f"tomography: dim {rho.dim}, {len(tomogram.entries)} observables, residual {report.residual:.2e}"
    if distance is not None:
        summary += f", trace distance {distance:.2e}"
    return ExperimentResult(summary, payload, rows)


def run_entropy(params, seed):
    payload = {}
    rows = []
    unit = "bits" if params["bits"] else "nats"
    scale = 1 / math.log(2) if params["bits"] else 1.0
    parts = []
    if "state" in params:
        report = von_neumann_entropy(params["state"], bits=params["bits"])
        payload["state"] = {**report.to_dict(), "value": report.value, "unit": unit}
        rows.append({"quantity": f"S_{unit}", "t": None, "value": report.value})
        parts.append(f"S = {report.value:.6f} {unit}")
        if "unitary" in params:
            before, after = entropy_under_unitary(params["state"], params["unitary"])
            payload["unitary"] = {"S_before": before * scale, "S_after": after * scale, "unit": unit}
            rows.append({"quantity": f"S_after_unitary_{unit}", "t": None, "value": after * scale})
            parts.append(f"|dS| under U = {abs(after - before) * scale:.2e}")
    if "growth" in params:
        growth = params["growth"]
        times = growth["times"]
        h = TimeDependentHamiltonian.constant(
            growth["hamiltonian"], max(times[-1], 1e-9), steps_per_unit=growth["steps_per_unit"]
        )
        samples = entanglement_growth(h, growth["initial"], times, tuple(growth["dims"]))
        series = [{"t": t, f"S_{unit}": s * scale} for t, s in samples]
        payload["growth"] = series
        rows += [{"quantity": f"S_{unit}", "t": t, "value": s * scale} for t, s in samples]
        if growth.get("trajectory_path"):
            trajectory = evolve_to_times(h, growth["initial"], times)
            write_atomic(growth["trajectory_path"], render_csv(trajectory_rows(trajectory)))
            payload["trajectory_path"] = growth["trajectory_path"]
        parts.append(f"growth sampled at {len(samples)} times, final S = {samples[-1][1] * scale:.6f} {unit}")
    return ExperimentResult("entropy: " + "; ".join(parts), payload, rows)


def _preparation_record(stats, ensemble):
    averaged_mean, averaged_std = averaged_spin_stats(ensemble)
    record = {
        "label": stats.label,
        "analytic_mean": stats.analytic_mean,
        "analytic_std": stats.analytic_std,
        "empirical_mean": stats.empirical_mean,
        "empirical_std": stats.empirical_std,
        "averaged_mean": averaged_mean,
        "averaged_std": averaged_std,
        "density_matrix": to_pairs(stats.density_matrix),
    }
    if stats.trial_values is not None:
        record["trial_values"] = list(stats.trial_values)
    return record


def _custom_ensemble(params, seed):
    ensemble = FiniteEnsemble([(c["state"], c["count"]) for c in params["components"]])
    record = {
        "total": ensemble.total,
        "weights": [float(w) for w in ensemble.weights],
        "density_matrix": _density_record(ensemble_density_matrix(ensemble)),
    }
    try:
        record["total_spin_z"] = list(total_spin_z_stats(ensemble))
        record["averaged_spin_z"] = list(averaged_spin_stats(ensemble))
    except NotQubit:
        record["total_spin_z"] = record["averaged_spin_z"] = None
    if "draws" in params:
        draw = sample(ensemble, params["draws"], params["mode"], seed)
        record["draws"] = {"mode": draw.mode, "outcomes": list(draw.outcomes)}
        if draw.mode == "with_replacement" or len(draw.outcomes) < ensemble.total:
            record["next_draw_distribution"] = [
                float(p) for p in conditional_distribution(ensemble, draw)
            ]
    return record


def run_ensemble(params, seed):
    N, trials = params["N"], params["trials"]
    report = despagnat_experiment(N, trials, seed, keep_trials=params["keep_trials"])
    ensembles = dict(zip(("z", "x"), despagnat_pair(N)))
    preparations = [_preparation_record(s, ensembles[s.label]) for s in report.preparations]
    payload = {
        "N": N,
        "trials": trials,
        "preparations": preparations,
        "shared_density_matrix": to_pairs(report.shared_density_matrix),
        "single_system_trace_distance": report.single_system_distance,
        "collective_total_variation": report.collective_distance,
    }
    if "components" in params:
        payload["custom"] = _custom_ensemble(params, seed)

    if params["keep_trials"]:
        z, x = (p["trial_values"] for p in preparations)
        rows = [{"trial": i, "sigma_z_total_z": a, "sigma_z_total_x": b} for i, (a, b) in enumerate(zip(z, x))]
    else:
        rows = [
            {key: p[key] for key in ("label", "analytic_mean", "analytic_std", "empirical_mean", "empirical_std")}
            for p in preparations
        ]
    z_stats, x_stats = report.preparations
    summary = (
        f"ensemble: N={N}, trials={trials}, std z {z_stats.empirical_std:.4f} "
        f"(analytic {z_stats.analytic_std:.4f}), std x {x_stats.empirical_std:.4f} "
        f"(analytic {x_stats.analytic_std:.4f})"
    )
    return ExperimentResult(summary, payload, rows)


def run_beam_merge(params, seed):
    merge = beam_merge_demo()
    rotation = spin_rotation_demo(params["omega"])
    distances = {
        "full": merge.full_distance,
        "spin": merge.spin_distance,
        "path": merge.path_distance,
    }
    payload = {
        "beams": {
            name: to_pairs(getattr(merge, f"rho_{name}"))
            for name in ("full_a", "full_b", "spin_a", "spin_b", "path_a", "path_b")
        },
        "trace_distances": distances,
        "rotation": {
            "omega": params["omega"],
            "field_for_x": rotation.field_for_x,
            "field_for_y": rotation.field_for_y,
            "final_from_x": [[float(a.real), float(a.imag)] for a in rotation.final_from_x.amplitudes],
            "final_from_y": [[float(a.real), float(a.imag)] for a in rotation.final_from_y.amplitudes],
            "distance_x_to_up": rotation.distance_x_to_up,
            "distance_y_to_up": rotation.distance_y_to_up,
            "distance_between": rotation.distance_between,
        },
    }
    rows = [{"quantity": f"trace_distance_{name}", "value": value} for name, value in distances.items()]
    rows += [
        {"quantity": name, "value": getattr(rotation, name)}
        for name in ("distance_x_to_up", "distance_y_to_up", "distance_between")
    ]
    summary = (
        f"beam-merge: full trace distance {merge.full_distance:.6f}, spin {merge.spin_distance:.1e}; "
        f"rotations agree within {rotation.distance_between:.1e}"
    )
    return ExperimentResult(summary, payload, rows)


def run_frequency(params, seed):
    rows = [
        asdict(row) for row in frequency_convergence(
            params["weights"], params["N_ladder"], params["n_draws"], seed, params["samples"]
        )
    ]
    payload = {
        "weights": [str(w) for w in params["weights"]],
        "n_draws": params["n_draws"],
        "samples": params["samples"],
        "ladder": rows,
    }
    summary = (
        f"frequency: worst-case distance {rows[0]['worst_case_distance']:.3e} at N={rows[0]['N']} "
        f"-> {rows[-1]['worst_case_distance']:.3e} at N={rows[-1]['N']}"
    )
    return ExperimentResult(summary, payload, rows)


EXPERIMENTS = {
    experiment.name: experiment
    for experiment in (
        Experiment(
            "protective",
            "Protective measurement of one observable on a protected pure or entangled state",
            ("hamiltonian|state", "observable", "schedule.T"),
            run_protective_experiment,
        ),
        Experiment(
            "tomography",
            "Density-matrix reconstruction from exact, noisy or protectively measured values",
            ("target|tomogram",),
            run_tomography,
        ),
        Experiment(
            "entropy",
            "Von Neumann entropy, its unitary invariance and entanglement growth",
            ("state|growth",),
            run_entropy,
        ),
        Experiment(
            "ensemble",
            "Total-spin fluctuations of the two unpolarized beams (Monte Carlo and analytic)",
            (),
            run_ensemble,
        ),
        Experiment(
            "beam-merge",
            "Spin-path correlated beams and the two spin rotations onto +z",
            (),
            run_beam_merge,
        ),
        Experiment(
            "error-scaling",
            "Protective-measurement error and disturbance along a ladder of total times",
            ("hamiltonian", "observable", "T_values"),
            run_error_scaling,
        ),
        Experiment(
            "frequency",
            "Memory of finite ensembles along a ladder of sizes N",
            ("weights", "N_ladder", "n_draws"),
            run_frequency,
        ),
    )
}


def get_experiment(name):
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}") from None


def run_experiment(name, parameters, seed):
    experiment = get_experiment(name)
    result = experiment.runner(parameters, seed)
    logger.info("%s finished (seed %d)", name, seed)
    payload = {"schema_version": SCHEMA_VERSION, "experiment": name, "seed": seed, **result.payload}
    return replace(result, payload=payload)


def catalogue():
    """Rows of the experiment table, in registry order."""
    return [
        {
            "name": experiment.name,
            "description": experiment.description,
            "required": list(experiment.required),
            "schema": experiment.schema,
            "example_config": experiment.example_config,
        }
        for experiment in EXPERIMENTS.values()
    ]
