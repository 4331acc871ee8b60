"""Command-line front end: named scenarios that write CSV or JSON data.

    dspe list
    dspe fig2 --alpha2 1,10,100 --variance-max 0.2 --steps 40
    dspe experiment --eta-c 0.5 --eta-t 0.6 --visibility 0.99996 --alpha 28

Output goes to ``--output`` if given, else to ``$DSPE_OUTPUT_DIR/<scenario>.<ext>``
when that variable is set, else to stdout.  CSV files written to disk get a
``<file>.schema.json`` sidecar describing the columns.

Exit status: 0 on success, 2 on a usage error, 3 when a numerical check
flagged part of the output.
"""

from __future__ import annotations

import argparse
import difflib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels, fock, metrology, protocol
from .entanglement import negativity
from .fock import TruncationError

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "DSPE_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_FLAGGED = 0, 2, 3

SCENARIOS = {
    "state": "serialize the output state for a given amplitude",
    "fig2": "negativity and its two lower bounds versus phase-noise variance",
    "loss-sweep": "negativity after transmission loss on mode B, simulated and closed form",
    "coupling-sweep": "negativity after loss on the single photon, simulated and closed form",
    "sensitivity": "phase sensitivity of the lossy output state against the closed-form slope",
    "noon": "transmission threshold below which N00N states lose to coherent states",
    "experiment": "closed-form concurrence bound for the proposed experiment",
    "measure": "simulated displacement measurement: tomogram, visibility and bounds",
}

# name -> (unit, description); one entry per CSV column any scenario writes
COLUMNS = {
    "alpha2": ("photons", "mean photon number |alpha|^2 of each coherent component"),
    "variance": ("rad^2", "variance of the Gaussian relative-phase noise"),
    "negativity_numeric": ("", "negativity of the simulated state"),
    "bound_oracle": ("", "-<v|rho^Gamma|v> with the saturating vector v"),
    "bound_gaussian": ("", "closed-form Gaussian approximation of the witness bound"),
    "eta_t": ("", "transmission of mode B"),
    "eta_c": ("", "transmission of the single photon before the beam splitter"),
    "negativity_closed_form": ("", "closed-form negativity"),
    "coherent_negativity": ("", "negativity of the coherent-state superposition baseline"),
    "eta": ("", "transmission applied to both modes"),
    "s_numeric": ("1/rad^2", "Frobenius sensitivity of the simulated state"),
    "mean_n": ("photons", "mean photon number of the probed mode"),
    "var_n": ("photons^2", "photon-number variance of the probed mode"),
    "s_slope_formula": ("1/rad^2", "amplitude-dependent closed-form sensitivity"),
    "s_classical": ("1/rad^2", "coherent-state sensitivity 2 eta |alpha|^2"),
    "n_photons": ("photons", "N00N photon number"),
    "eta_threshold": ("", "transmission below which the N00N state loses to a coherent state"),
    "max_loss": ("", "1 - eta_threshold"),
}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _unit_interval(text: str) -> float:
    x = float(text)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {x}")
    return x


def _nonneg(text: str) -> float:
    x = float(text)
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {x}")
    return x


def _positive_int(text: str) -> int:
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {x}")
    return x


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

DEFAULTS = {
    "state": {"alpha": 0.0, "alpha_imag": 0.0, "dim": None},
    "fig2": {
        "alpha2": [1.0, 10.0, 100.0],
        "variance_max": 0.2,
        "steps": 40,
        "variance_unit": "rad2",
        "nodes": 41,
        "max_cutoff": channels.MAX_DISPLACED_CUTOFF,
    },
    "loss-sweep": {"alpha": 0.8, "eta_steps": 10, "dim": None},
    "coupling-sweep": {"alpha": 0.5, "eta_steps": 10, "dim": None},
    "sensitivity": {"alpha": 1.0, "eta": [1.0, 0.75, 0.5], "dim": None},
    "noon": {"n": [2, 10, 100, 1000]},
    "experiment": {"eta_c": 0.5, "eta_t": 0.6, "visibility": 0.99996, "alpha": 28.0},
    "measure": {
        "alpha": 1.0,
        "eta_c": 1.0,
        "eta_t": 1.0,
        "lo_variance": 0.0,
        "path_variance": 0.0,
        "loss_modes": "B",
        "nodes": 41,
        "dim": None,
    },
}

FORMATS = {
    "state": ("json",),
    "fig2": ("csv", "json"),
    "loss-sweep": ("csv", "json"),
    "coupling-sweep": ("csv", "json"),
    "sensitivity": ("csv", "json"),
    "noon": ("csv", "json"),
    "experiment": ("json",),
    "measure": ("json",),
}


@dataclass
class ScenarioConfig:
    name: str
    params: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str | None = None

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise UsageError(_unknown_scenario_message(self.name))
        unknown = set(self.params) - set(DEFAULTS[self.name])
        if unknown:
            raise UsageError(f"{self.name}: unknown parameter(s) {', '.join(sorted(unknown))}")
        self.params = {**DEFAULTS[self.name], **self.params}
        if self.fmt is None:
            self.fmt = FORMATS[self.name][0]
        if self.fmt not in FORMATS[self.name]:
            raise UsageError(f"{self.name}: format must be one of {', '.join(FORMATS[self.name])}")


def _unknown_scenario_message(name: str) -> str:
    close = difflib.get_close_matches(name, list(SCENARIOS) + ["list"], n=1)
    hint = f"; did you mean '{close[0]}'?" if close else ""
    return f"unknown scenario '{name}'{hint}"


def list_scenarios() -> str:
    width = max(len(n) for n in SCENARIOS)
    lines = ["scenarios:"]
    lines += [f"  {name.ljust(width)}  {desc}" for name, desc in SCENARIOS.items()]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Scenario implementations; each returns (columns or None, rows or document, flagged)
# ---------------------------------------------------------------------------


def _check_unit_param(name, x):
    if not 0.0 <= x <= 1.0:
        raise UsageError(f"{name} must lie in [0, 1], got {x}")


def _run_state(p):
    alpha = complex(p["alpha"], p["alpha_imag"])
    dims = (p["dim"], p["dim"]) if p["dim"] else None
    try:
        psi = fock.build_output_state(alpha, dims)
    except TruncationError as e:
        return None, {"schema_version": SCHEMA_VERSION, "error": str(e), "leakage": e.leakage}, True
    return None, psi.to_dict(), False


def _variance_grid(p):
    if p["variance_max"] < 0:
        raise UsageError(f"variance_max must be >= 0, got {p['variance_max']}")
    if p["steps"] < 1:
        raise UsageError(f"steps must be >= 1, got {p['steps']}")
    grid = np.linspace(0.0, p["variance_max"], p["steps"] + 1)
    if p["variance_unit"] == "rad":
        grid = grid**2
    elif p["variance_unit"] != "rad2":
        raise UsageError(f"variance_unit must be 'rad2' or 'rad', got {p['variance_unit']!r}")
    return [float(v) for v in grid]


def _run_fig2(p):
    cols = ["alpha2", "variance", "negativity_numeric", "bound_oracle", "bound_gaussian"]
    if any(a < 0 for a in p["alpha2"]):
        raise UsageError("alpha2 values must be >= 0")
    points = protocol.fig2_sweep(p["alpha2"], _variance_grid(p), n_nodes=p["nodes"], max_cutoff=p["max_cutoff"])
    rows, flagged = [], False
    for pt in points:
        if pt.flagged:
            flagged = True
            print(
                f"flagged: alpha2={pt.alpha2:g} variance={pt.variance:g} cutoff={pt.cutoff} "
                f"leakage={pt.leakage:.2e} converged={pt.converged}",
                file=sys.stderr,
            )
        bad = math.nan if pt.flagged else None
        rows.append(
            [
                pt.alpha2,
                pt.variance,
                bad if bad is not None else pt.negativity,
                bad if bad is not None else pt.bound_oracle,
                pt.bound_gaussian,
            ]
        )
    return cols, rows, flagged


def _eta_grid(steps):
    if steps < 1:
        raise UsageError(f"eta_steps must be >= 1, got {steps}")
    return [float(x) for x in np.linspace(0.0, 1.0, steps + 1)]


def _dims(p):
    return (p["dim"], p["dim"]) if p.get("dim") else None


def _run_loss_sweep(p):
    cols = ["eta_t", "negativity_numeric", "negativity_closed_form", "coherent_negativity"]
    rows = []
    for eta in _eta_grid(p["eta_steps"]):
        rho = protocol.simulate_transmission_loss(p["alpha"], eta, _dims(p))
        rows.append(
            [
                eta,
                negativity(rho),
                protocol.negativity_after_transmission_loss(eta),
                protocol.coherent_entanglement_negativity(p["alpha"] ** 2, eta),
            ]
        )
    return cols, rows, False


def _run_coupling_sweep(p):
    cols = ["eta_c", "negativity_numeric", "negativity_closed_form"]
    rows = []
    for eta in _eta_grid(p["eta_steps"]):
        rho = protocol.simulate_coupling_loss(p["alpha"], eta, _dims(p))
        rows.append([eta, negativity(rho), protocol.negativity_after_coupling_loss(eta)])
    return cols, rows, False


def _run_sensitivity(p):
    cols = ["eta", "s_numeric", "mean_n", "var_n", "s_slope_formula", "s_classical"]
    rows = []
    alpha2 = p["alpha"] ** 2
    for eta in p["eta"]:
        _check_unit_param("eta", eta)
        rep = metrology.simulated_lossy_sensitivity(p["alpha"], eta, _dims(p))
        rows.append(
            [
                eta,
                rep.s,
                rep.mean_n,
                rep.var_n,
                metrology.lossy_dse_sensitivity(alpha2, eta),
                metrology.classical_sensitivity(alpha2, eta),
            ]
        )
    return cols, rows, False


def _run_noon(p):
    cols = ["n_photons", "eta_threshold", "max_loss"]
    rows = []
    for n in p["n"]:
        if n < 1:
            raise UsageError(f"n must be >= 1, got {n}")
        eta = metrology.noon_loss_threshold(n)
        rows.append([n, eta, 1.0 - eta])
    return cols, rows, False


def _run_experiment(p):
    for key in ("eta_c", "eta_t", "visibility"):
        _check_unit_param(key, p[key])
    params = protocol.ExperimentParams.from_visibility(p["eta_c"], p["eta_t"], p["visibility"], p["alpha"])
    try:
        max_alpha = protocol.max_alpha_for_positive_bound(params.eta_c, params.eta_t, params.epsilon)
    except ValueError:
        max_alpha = 0.0
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": "experiment",
        "eta_c": params.eta_c,
        "eta_t": params.eta_t,
        "visibility": params.visibility,
        "epsilon": params.epsilon,
        "alpha": p["alpha"],
        "alpha2": params.alpha2,
        "eta": params.eta,
        "concurrence_bound": protocol.experiment_concurrence_bound(params),
        "photons": params.photons,
        "max_alpha": None if math.isinf(max_alpha) else max_alpha,
        "max_alpha_unbounded": math.isinf(max_alpha),
        "alpha_cap": protocol.ALPHA_CAP,
    }
    return None, doc, False


def _run_measure(p):
    for key in ("eta_c", "eta_t"):
        _check_unit_param(key, p[key])
    lo = channels.PhaseNoiseModel.gaussian(p["lo_variance"], p["nodes"])
    path = channels.PhaseNoiseModel.gaussian(p["path_variance"], p["nodes"])
    try:
        res = protocol.measurement_pipeline(
            p["alpha"], p["eta_c"], p["eta_t"], noise=lo, path_noise=path,
            loss_modes=p["loss_modes"], dims=_dims(p),
        )
    except ValueError as e:
        raise UsageError(str(e))
    doc = {"schema_version": SCHEMA_VERSION, "scenario": "measure", **{k: p[k] for k in DEFAULTS["measure"]}}
    doc.update(res.to_dict())
    return None, doc, False


RUNNERS = {
    "state": _run_state,
    "fig2": _run_fig2,
    "loss-sweep": _run_loss_sweep,
    "coupling-sweep": _run_coupling_sweep,
    "sensitivity": _run_sensitivity,
    "noon": _run_noon,
    "experiment": _run_experiment,
    "measure": _run_measure,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x) + 0.0  # folds -0.0 into 0.0
    return "nan" if math.isnan(x) else f"{x:.16e}"


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def column_schema(scenario: str, columns) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "columns": [{"name": c, "unit": COLUMNS[c][0], "description": COLUMNS[c][1]} for c in columns],
    }


def render(config: ScenarioConfig, columns, payload) -> str:
    if columns is None:
        return json.dumps(_json_safe(payload), indent=2) + "\n"
    if config.fmt == "csv":
        return format_csv(columns, payload)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": config.name,
        "params": config.params,
        "columns": columns,
        "rows": payload,
    }
    return json.dumps(_json_safe(doc), indent=2) + "\n"


def _output_path(config: ScenarioConfig) -> Path | None:
    if config.output:
        return Path(config.output)
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        return Path(env_dir) / f"{config.name}.{config.fmt}"
    return None


def run_scenario(config: ScenarioConfig, stdout=None) -> int:
    """Run one scenario and write its output; returns the exit status."""
    stdout = stdout or sys.stdout
    columns, payload, flagged = RUNNERS[config.name](config.params)
    text = render(config, columns, payload)
    path = _output_path(config)
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        if columns is not None and config.fmt == "csv":
            schema = column_schema(config.name, columns)
            Path(str(path) + ".schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    return EXIT_FLAGGED if flagged else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sp, name):
    sp.add_argument("--output", "-o", help="output file (default: stdout or $%s)" % OUTPUT_DIR_ENV)
    sp.add_argument("--format", dest="fmt", choices=FORMATS[name], default=FORMATS[name][0], help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dspe",
        description="Simulate displaced single-photon entanglement.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=list_scenarios(),
    )
    sub = parser.add_subparsers(dest="scenario", metavar="scenario")
    sub.add_parser("list", help="list the scenarios")
    fmt = argparse.ArgumentDefaultsHelpFormatter

    sp = sub.add_parser("state", help=SCENARIOS["state"], formatter_class=fmt)
    sp.add_argument("--alpha", type=float, default=0.0, help="real part of the amplitude alpha [sqrt(photons)]")
    sp.add_argument("--alpha-imag", type=float, default=0.0, help="imaginary part of alpha [sqrt(photons)]")
    sp.add_argument("--dim", type=_positive_int, default=None, help="Fock cutoff per mode [levels]; adaptive if omitted")
    _add_common(sp, "state")

    sp = sub.add_parser("fig2", help=SCENARIOS["fig2"], formatter_class=fmt)
    sp.add_argument("--alpha2", type=_float_list, default=[1.0, 10.0, 100.0], help="comma-separated |alpha|^2 values [photons]")
    sp.add_argument("--variance-max", type=_nonneg, default=0.2, help="largest grid value [rad^2, or rad with --variance-unit rad]")
    sp.add_argument("--steps", type=_positive_int, default=40, help="number of grid intervals (steps+1 points)")
    sp.add_argument("--variance-unit", choices=("rad2", "rad"), default="rad2",
                    help="rad2: grid values are variances; rad: grid values are standard deviations")
    sp.add_argument("--nodes", type=_positive_int, default=41, help="initial quadrature nodes [count]")
    sp.add_argument("--max-cutoff", type=_positive_int, default=channels.MAX_DISPLACED_CUTOFF, help="largest Fock cutoff of mode A [levels]")
    _add_common(sp, "fig2")

    for name, alpha in (("loss-sweep", 0.8), ("coupling-sweep", 0.5)):
        sp = sub.add_parser(name, help=SCENARIOS[name], formatter_class=fmt)
        sp.add_argument("--alpha", type=float, default=alpha, help="amplitude alpha [sqrt(photons)]")
        sp.add_argument("--eta-steps", type=_positive_int, default=10, help="intervals of the transmission grid on [0, 1]")
        sp.add_argument("--dim", type=_positive_int, default=None, help="Fock cutoff per mode [levels]")
        _add_common(sp, name)

    sp = sub.add_parser("sensitivity", help=SCENARIOS["sensitivity"], formatter_class=fmt)
    sp.add_argument("--alpha", type=float, default=1.0, help="amplitude alpha [sqrt(photons)]")
    sp.add_argument("--eta", type=_float_list, default=[1.0, 0.75, 0.5], help="comma-separated transmissions on both modes [0..1]")
    sp.add_argument("--dim", type=_positive_int, default=None, help="Fock cutoff per mode [levels]")
    _add_common(sp, "sensitivity")

    sp = sub.add_parser("noon", help=SCENARIOS["noon"], formatter_class=fmt)
    sp.add_argument("--n", type=_int_list, default=[2, 10, 100, 1000], help="comma-separated N00N photon numbers [photons]")
    _add_common(sp, "noon")

    sp = sub.add_parser("experiment", help=SCENARIOS["experiment"], formatter_class=fmt)
    sp.add_argument("--eta-c", type=_unit_interval, default=0.5, help="coupling efficiency of the single photon [0..1]")
    sp.add_argument("--eta-t", type=_unit_interval, default=0.6, help="detection efficiency [0..1]")
    sp.add_argument("--visibility", type=_unit_interval, default=0.99996, help="interferometric visibility V [0..1]")
    sp.add_argument("--alpha", type=_nonneg, default=28.0, help="amplitude |alpha| [sqrt(photons)]")
    _add_common(sp, "experiment")

    sp = sub.add_parser("measure", help=SCENARIOS["measure"], formatter_class=fmt)
    sp.add_argument("--alpha", type=float, default=1.0, help="amplitude alpha [sqrt(photons)]")
    sp.add_argument("--eta-c", type=_unit_interval, default=1.0, help="coupling efficiency [0..1]")
    sp.add_argument("--eta-t", type=_unit_interval, default=1.0, help="transmission after the beam splitter [0..1]")
    sp.add_argument("--lo-variance", type=_nonneg, default=0.0, help="local-oscillator phase variance [rad^2]")
    sp.add_argument("--path-variance", type=_nonneg, default=0.0, help="relative path phase variance [rad^2]")
    sp.add_argument("--loss-modes", choices=("A", "B", "AB"), default="B", help="modes that see eta_t")
    sp.add_argument("--nodes", type=_positive_int, default=41, help="quadrature nodes per noise average [count]")
    sp.add_argument("--dim", type=_positive_int, default=None, help="Fock cutoff per mode [levels]")
    _add_common(sp, "measure")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        print(list_scenarios())
        print()
        parser.print_usage()
        return EXIT_OK
    if not argv[0].startswith("-") and argv[0] not in SCENARIOS and argv[0] != "list":
        print(f"dspe: error: {_unknown_scenario_message(argv[0])}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.scenario in (None, "list"):
        print(list_scenarios())
        return EXIT_OK
    params = {k: v for k, v in vars(args).items() if k in DEFAULTS[args.scenario]}
    try:
        config = ScenarioConfig(args.scenario, params, args.output, args.fmt)
        return run_scenario(config)
    except UsageError as e:
        print(f"dspe {args.scenario}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
