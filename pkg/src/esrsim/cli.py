"""Experiment runner: validates JSON configs and writes CSV/JSON artifacts.

Subcommands
-----------
``esr validate <file>``
    Schema and semantic diagnostics for a config, without executing it.
``esr run <file> [--seed N] [--out DIR]``
    Execute a config; artifacts land in the output directory.
``esr chsh [flags]``
    Shortcut building and running a chsh config from command-line flags.
``esr evolve <file> [--out DIR]``
    Shortcut running an evolve parameter file.

Exit codes: 0 success, 2 config/IO error, 3 numerical-invariant failure.
Outputs are byte-identical for identical (config, seed).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import bell, composite, evolution, hiddenvars, measurement, probability
from .errors import EsrError, InvariantViolation
from .hilbert import (
    DensityOperator,
    StateVector,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)
from .observables import (
    Observable,
    ObservableRegistry,
    PhysicalProperty,
    make_generalized,
    observable_from_json,
)
from .probability import (
    ImproperMixture,
    PureState,
    conditional_prob,
    detection_from_json,
    overall_prob,
    state_from_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

KINDS = ("born_recovery", "outcome_dist", "cascade", "axm", "chsh", "hv_sample", "evolve")

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_VECTOR = {"type": "array", "minItems": 1, "items": _PAIR}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _PAIR}}
_OBSERVABLE = {
    "type": "object",
    "required": ["name", "matrix"],
    "properties": {"name": {"type": "string"}, "matrix": _MATRIX, "a0": {"type": "number"}},
}
_DETECTION = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["constant", "per_outcome", "per_state_outcome"]}},
}
_STATE = {"type": "object", "required": ["kind"]}

_PARAMETER_SCHEMAS: dict[str, dict] = {
    "born_recovery": {
        "type": "object",
        "properties": {
            "dim": {"type": "integer", "minimum": 2, "maximum": 8},
            "cases": {"type": "integer", "minimum": 1},
        },
        "additionalProperties": False,
    },
    "outcome_dist": {
        "type": "object",
        "required": ["state", "observable", "detection"],
        "properties": {"state": _STATE, "observable": _OBSERVABLE, "detection": _DETECTION},
        "additionalProperties": False,
    },
    "cascade": {
        "type": "object",
        "required": ["state", "observables", "steps", "detection"],
        "properties": {
            "state": _STATE,
            "observables": {"type": "array", "minItems": 1, "items": _OBSERVABLE},
            "steps": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["observable", "sigma"],
                    "properties": {
                        "observable": {"type": "string"},
                        "sigma": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                    },
                },
            },
            "detection": _DETECTION,
        },
        "additionalProperties": False,
    },
    "axm": {
        "type": "object",
        "required": ["psi", "observable", "detection"],
        "properties": {
            "psi": _VECTOR,
            "observable": _OBSERVABLE,
            "detection": _DETECTION,
            "phases": {
                "type": "object",
                "properties": {
                    "theta": {"type": "array", "items": {"type": "number"}},
                    "phi0": {"type": "number"},
                },
            },
        },
        "additionalProperties": False,
    },
    "chsh": {
        "type": "object",
        "properties": {
            "settings": {
                "type": "object",
                "required": ["a", "a_prime", "b", "b_prime"],
                "properties": {k: {"type": "number"} for k in ("a", "a_prime", "b", "b_prime")},
            },
            "eta": {"type": "number"},
            "eta_a": {"type": "number"},
            "eta_b": {"type": "number"},
            "mode": {"enum": ["analytic", "montecarlo"]},
            "pairs": {"type": "integer", "minimum": 1},
        },
        "additionalProperties": False,
    },
    "hv_sample": {
        "type": "object",
        "required": ["observables", "model", "state", "property", "n"],
        "properties": {
            "observables": {"type": "array", "minItems": 1, "items": _OBSERVABLE},
            "model": {"type": "object"},
            "state": {"type": "string"},
            "property": {"type": "string"},
            "n": {"type": "integer", "minimum": 1},
        },
        "additionalProperties": False,
    },
    "evolve": {
        "type": "object",
        "required": ["state", "hamiltonian", "times"],
        "properties": {
            "state": _STATE,
            "hamiltonian": {
                "type": "object",
                "required": ["matrix"],
                "properties": {"matrix": _MATRIX, "hbar": {"type": "number"}},
            },
            "times": {
                "oneOf": [
                    {"type": "array", "minItems": 1, "items": {"type": "number"}},
                    {
                        "type": "object",
                        "required": ["start", "stop", "num"],
                        "properties": {
                            "start": {"type": "number"},
                            "stop": {"type": "number"},
                            "num": {"type": "integer", "minimum": 1},
                        },
                    },
                ]
            },
            "observables": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "matrix"],
                    "properties": {"name": {"type": "string"}, "matrix": _MATRIX},
                },
            },
        },
        "additionalProperties": False,
    },
}

_TOP_SCHEMA = {
    "type": "object",
    "required": ["kind", "parameters"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "parameters": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "output_path": {"type": "string"},
    },
    "additionalProperties": False,
}


def _fmt(x) -> str:
    """CSV cell formatting: '.' decimal, scientific notation below 1e-4."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"
        if abs(x) < 1e-4:
            return f"{x:.12e}"
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _schema_diagnostics(doc) -> list[str]:
    validator = jsonschema.Draft202012Validator(_TOP_SCHEMA)
    diags = [f"{e.json_path}: {e.message}" for e in validator.iter_errors(doc)]
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if not diags and kind in _PARAMETER_SCHEMAS:
        sub = jsonschema.Draft202012Validator(_PARAMETER_SCHEMAS[kind])
        for e in sub.iter_errors(doc.get("parameters", {})):
            diags.append(f"$.parameters{e.json_path[1:]}: {e.message}")
    return diags


@contextmanager
def _collect(diags: list[str], path: str):
    try:
        yield
    except Exception as exc:  # every builder error becomes one diagnostic
        diags.append(f"{path}: {exc}")


def _load_state(data: dict):
    state = state_from_json(data)
    if isinstance(state, probability.ProperMixture):
        raise ValueError("this experiment kind needs a pure state or improper mixture")
    return state


def _random_pure(rng: np.random.Generator, dim: int) -> PureState:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(StateVector(v / np.linalg.norm(v)))


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2.0


# --- experiment preparation ---------------------------------------------------
#
# Each _prepare_* returns a runner(seed, outdir) closure once construction of
# all referenced domain objects succeeded; construction failures are turned
# into path-qualified diagnostics.

def _prepare_born_recovery(params: dict, diags: list[str]):
    dim = int(params.get("dim", 4))
    cases = int(params.get("cases", 1000))

    def run(seed: int, outdir: Path) -> None:
        rng = np.random.default_rng(seed)
        eta_one = probability.ConstantDetection(1.0)
        max_err = 0.0
        max_a0 = 0.0
        for i in range(cases):
            state = _random_pure(rng, dim)
            base = Observable(f"case{i}", _random_hermitian(rng, dim))
            obs = make_generalized(base)
            values = list(base.eigenvalues)
            picks = [v for v in values if rng.random() < 0.5] or [values[0]]
            f = PhysicalProperty(obs, picks)
            born = conditional_prob(state, f)
            esr = overall_prob(state, f, eta_one)
            max_err = max(max_err, abs(esr - born))
            max_a0 = max(max_a0, overall_prob(state, PhysicalProperty(obs, {obs.a0}), eta_one))
        _write_csv(outdir / "born_recovery.csv",
                   ["cases", "dim", "max_abs_error", "max_a0_overall"],
                   [[cases, dim, max_err, max_a0]])
        print(f"max |ESR - QM| = {max_err:.3e}")
        if max_err > 1e-12 or max_a0 > 1e-12:
            raise InvariantViolation(
                f"Born-rule recovery failed: error {max_err:.3e}, a0 weight {max_a0:.3e}"
            )

    return run


def _prepare_outcome_dist(params: dict, diags: list[str]):
    state = obs = model = None
    with _collect(diags, "$.parameters.state"):
        state = _load_state(params["state"])
    with _collect(diags, "$.parameters.observable"):
        obs = observable_from_json(params["observable"])
    with _collect(diags, "$.parameters.detection"):
        model = detection_from_json(params["detection"])
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        dist = measurement.outcome_distribution(state, obs, model)
        total = sum(p for _, p in dist)
        _write_csv(outdir / "outcome_dist.csv", ["outcome", "p_t"], [list(x) for x in dist])
        if abs(total - 1.0) > 1e-10:
            raise InvariantViolation(f"outcome probabilities sum to {total!r}")

    return run


def _prepare_cascade(params: dict, diags: list[str]):
    state = model = None
    registry = ObservableRegistry()
    steps: list[PhysicalProperty] = []
    with _collect(diags, "$.parameters.state"):
        state = _load_state(params["state"])
    with _collect(diags, "$.parameters.detection"):
        model = detection_from_json(params["detection"])
    for i, obs_data in enumerate(params.get("observables", [])):
        with _collect(diags, f"$.parameters.observables[{i}]"):
            registry.add(observable_from_json(obs_data))
    for i, step in enumerate(params.get("steps", [])):
        with _collect(diags, f"$.parameters.steps[{i}]"):
            steps.append(PhysicalProperty(registry.get(step["observable"]), step["sigma"]))
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        current = state
        rows = []
        for i, f in enumerate(steps):
            p_t = overall_prob(current, f, model)
            if isinstance(current, PureState):
                current = measurement.glp_update_pure(current, f, model)
                purity = 1.0
            else:
                current = ImproperMixture(measurement.glp_update(current, f, model))
                purity = current.density.purity()
            rows.append([i, "yes", p_t, purity])
        _write_csv(outdir / "cascade.csv", ["step", "outcome", "p_t", "post_purity"], rows)

    return run


def _prepare_axm(params: dict, diags: list[str]):
    psi = obs = model = None
    phases = None
    with _collect(diags, "$.parameters.psi"):
        psi = PureState(StateVector(vector_from_json(params["psi"])))
    with _collect(diags, "$.parameters.observable"):
        obs = observable_from_json(params["observable"])
    with _collect(diags, "$.parameters.detection"):
        model = detection_from_json(params["detection"])
    if obs is not None and "phases" in params:
        with _collect(diags, "$.parameters.phases"):
            phases = composite.AxmPhases(
                theta=tuple(params["phases"].get("theta", [0.0] * len(obs.base.eigenvalues))),
                phi0=float(params["phases"].get("phi0", 0.0)),
            )
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        n_out = len(obs.base.eigenvalues) + 1
        psi_composite = composite.axm_premeasurement(psi, obs, model, phases=phases)
        rho = composite.reduced_post_state(psi_composite, (obs.dim, n_out))
        closed = composite.nonselective_post_state(psi, obs, model)
        gap = np.abs(rho.matrix - closed.matrix).max()
        pointer0 = np.zeros(n_out, dtype=complex)
        pointer0[0] = 1.0
        psi0 = np.kron(psi.vector.amplitudes, pointer0)
        report = composite.nonlinearity_certificate(rho, obs.base)
        _write_json(outdir / "axm.json", {
            "psi0": vector_to_json(psi0),
            "psi": vector_to_json(psi_composite),
            "rho_tilde": matrix_to_json(rho.matrix),
        })
        _write_csv(outdir / "axm.csv",
                   ["purity", "is_pure", "bo_violation"],
                   [[report.purity, report.is_pure, report.bo_violation]])
        if gap > 1e-10:
            raise InvariantViolation(
                f"pointer trace-out deviates from the closed form by {gap:.3e}"
            )

    return run


def _prepare_chsh(params: dict, diags: list[str]):
    settings = bell.TSIRELSON_SETTINGS
    eta_a = eta_b = 1.0
    mode = params.get("mode", "analytic")
    pairs = int(params.get("pairs", 100000))
    with _collect(diags, "$.parameters.settings"):
        if "settings" in params:
            s = params["settings"]
            settings = bell.BipartiteSettings(s["a"], s["a_prime"], s["b"], s["b_prime"])
    with _collect(diags, "$.parameters.eta"):
        if "eta" in params:
            eta_a = eta_b = bell._check_eta(params["eta"], "eta")
        if "eta_a" in params:
            eta_a = bell._check_eta(params["eta_a"], "eta_a")
        if "eta_b" in params:
            eta_b = bell._check_eta(params["eta_b"], "eta_b")
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        rows = []
        if mode == "analytic":
            s_det = s_all = 0.0
            for name, ta, tb in settings.pairs():
                sign = -1.0 if name == "a'b'" else 1.0
                e_det = bell.conditional_correlator(ta, tb)
                e_all = bell.overall_correlator(ta, tb, eta_a, eta_b)
                s_det += sign * e_det
                s_all += sign * e_all
                rows.append([name, e_det, e_all, 0, 0])
            rows.append(["S", s_det, s_all, 0, 0])
        else:
            records = bell.simulate_bell_run(settings, eta_a, eta_b, pairs, seed)
            for name, _, _ in settings.pairs():
                rec = records[name]
                rows.append([name, rec.detected_correlator, rec.overall_correlator,
                             rec.n_produced, rec.n_both_detected])
            rows.append(["S",
                         bell.chsh_from_records(records, "detected"),
                         bell.chsh_from_records(records, "overall"),
                         sum(r.n_produced for r in records.values()),
                         sum(r.n_both_detected for r in records.values())])
        _write_csv(outdir / "chsh.csv",
                   ["setting_pair", "E_detected", "E_overall", "n_produced", "n_detected"],
                   rows)

    return run


def _prepare_hv_sample(params: dict, diags: list[str]):
    registry = ObservableRegistry()
    model = None
    for i, obs_data in enumerate(params.get("observables", [])):
        with _collect(diags, f"$.parameters.observables[{i}]"):
            registry.add(observable_from_json(obs_data))
    with _collect(diags, "$.parameters.model"):
        model = hiddenvars.micromodel_from_json(params["model"], registry)
    state_label = params.get("state")
    prop_id = params.get("property")
    n = int(params.get("n", 0))
    if model is not None:
        if state_label not in model.cond:
            diags.append(f"$.parameters.state: unknown state label {state_label!r}")
        if prop_id not in model.properties:
            diags.append(f"$.parameters.property: unknown micro property {prop_id!r}")
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        f = model.properties[prop_id].macro
        analytic = hiddenvars.aggregate(state_label, f, model)
        empirical = hiddenvars.sample_statistics(state_label, f, model, n, seed)
        _write_csv(outdir / "hv_sample.csv",
                   ["n", "p_t_mc", "p_d_mc", "p_mc", "p_t", "p_d", "p"],
                   [[n, empirical.overall, empirical.detection, empirical.conditional,
                     analytic.overall, analytic.detection, analytic.conditional]])

    return run


def _prepare_evolve(params: dict, diags: list[str]):
    state = h = None
    times: list[float] = []
    tracked: list[tuple[str, np.ndarray]] = []
    with _collect(diags, "$.parameters.state"):
        state = _load_state(params["state"])
    with _collect(diags, "$.parameters.hamiltonian"):
        from .hilbert import matrix_from_json

        h = evolution.Hamiltonian(matrix_from_json(params["hamiltonian"]["matrix"]),
                                  hbar=float(params["hamiltonian"].get("hbar", 1.0)))
    with _collect(diags, "$.parameters.times"):
        spec = params["times"]
        if isinstance(spec, dict):
            times = list(np.linspace(spec["start"], spec["stop"], int(spec["num"])))
        else:
            times = [float(t) for t in spec]
    for i, item in enumerate(params.get("observables", [])):
        with _collect(diags, f"$.parameters.observables[{i}]"):
            from .hilbert import matrix_from_json

            tracked.append((item["name"], matrix_from_json(item["matrix"])))
    if diags:
        return None

    def run(seed: int, outdir: Path) -> None:
        rho0 = DensityOperator(state.rho)
        header = ["t", "purity"] + [f"exp_{name}" for name, _ in tracked]
        rows = []
        for t in times:
            rho_t = evolution.evolve_closed(rho0, h, float(t))
            row = [float(t), rho_t.purity()]
            for _, op in tracked:
                row.append(float(np.real(np.trace(rho_t.matrix @ op))))
            rows.append(row)
        _write_csv(outdir / "evolve.csv", header, rows)

    return run


_PREPARERS: dict[str, Callable] = {
    "born_recovery": _prepare_born_recovery,
    "outcome_dist": _prepare_outcome_dist,
    "cascade": _prepare_cascade,
    "axm": _prepare_axm,
    "chsh": _prepare_chsh,
    "hv_sample": _prepare_hv_sample,
    "evolve": _prepare_evolve,
}


def validate_config(doc) -> list[str]:
    """All diagnostics for a config document, without executing it."""
    diags = _schema_diagnostics(doc)
    if diags:
        return diags
    _PREPARERS[doc["kind"]](doc.get("parameters", {}), diags)
    return diags


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh), None
    except OSError as exc:
        return None, f"cannot read {path}: {exc}"
    except json.JSONDecodeError as exc:
        return None, f"{path} is not valid JSON: {exc}"


def run_config(doc, seed: int | None = None, out: str | None = None) -> int:
    """Validate and execute a config document; returns a process exit code."""
    diags = _schema_diagnostics(doc)
    runner = None
    if not diags:
        runner = _PREPARERS[doc["kind"]](doc.get("parameters", {}), diags)
    if diags or runner is None:
        for d in diags:
            print(d, file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(out if out is not None else doc.get("output_path", "."))
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {outdir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    effective_seed = seed if seed is not None else int(doc.get("seed", 0))
    try:
        runner(effective_seed, outdir)
    except InvariantViolation as exc:
        print(f"numerical invariant failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EsrError as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_validate(args) -> int:
    doc, err = _load_json(args.config)
    if err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    diags = validate_config(doc)
    for d in diags:
        print(d)
    return EXIT_OK if not diags else EXIT_CONFIG


def _cmd_run(args) -> int:
    doc, err = _load_json(args.config)
    if err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    return run_config(doc, seed=args.seed, out=args.out)


def _cmd_chsh(args) -> int:
    try:
        a, a_prime, b, b_prime = (float(x) for x in args.settings.split(","))
    except ValueError:
        print("--settings needs four comma-separated angles in radians", file=sys.stderr)
        return EXIT_CONFIG
    doc = {
        "kind": "chsh",
        "parameters": {
            "settings": {"a": a, "a_prime": a_prime, "b": b, "b_prime": b_prime},
            "eta": args.eta,
            "mode": "montecarlo" if args.montecarlo else "analytic",
            "pairs": args.pairs,
        },
        "seed": args.seed,
    }
    return run_config(doc, out=args.out)


def _cmd_evolve(args) -> int:
    params, err = _load_json(args.config)
    if err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG
    doc = {"kind": "evolve", "parameters": params}
    return run_config(doc, seed=args.seed, out=args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a config without running it")
    p_validate.add_argument("config")
    p_validate.set_defaults(func=_cmd_validate)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    default_settings = ",".join(
        f"{x:.12g}" for x in (
            bell.TSIRELSON_SETTINGS.a, bell.TSIRELSON_SETTINGS.a_prime,
            bell.TSIRELSON_SETTINGS.b, bell.TSIRELSON_SETTINGS.b_prime,
        )
    )
    p_chsh = sub.add_parser("chsh", help="run a CHSH experiment from flags")
    p_chsh.add_argument("--eta", type=float, default=1.0)
    p_chsh.add_argument("--pairs", type=int, default=100000)
    p_chsh.add_argument("--seed", type=int, default=0)
    p_chsh.add_argument("--settings", default=default_settings,
                        help="a,a',b,b' in radians")
    group = p_chsh.add_mutually_exclusive_group()
    group.add_argument("--analytic", action="store_true", default=True)
    group.add_argument("--montecarlo", action="store_true", default=False)
    p_chsh.add_argument("--out", default=None)
    p_chsh.set_defaults(func=_cmd_chsh)

    p_evolve = sub.add_parser("evolve", help="run a time-evolution parameter file")
    p_evolve.add_argument("config")
    p_evolve.add_argument("--seed", type=int, default=None)
    p_evolve.add_argument("--out", default=None)
    p_evolve.set_defaults(func=_cmd_evolve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
