"""Command-line entry point: config parsing, task dispatch, serialization.

Subcommands: spectrum, qutrit-fit, rates, table1, sweep, prepare.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Diagnostics go to stderr; data goes to files or stdout only.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import fluxbic
from fluxbic.dataset import Dataset, emit_dataset, to_csv_text
from fluxbic.errors import FluxbicError, SchemaError, UnitError
from fluxbic.experiments import (
    NoiseParams,
    SWEEP_AXES,
    SWEEP_OUTPUTS,
    SweepSpec,
    convention_metadata,
    preparation_estimate,
    reproduce_table1,
    row_circuit,
    run_sweep,
)
from fluxbic.operators import build_charge_operator, build_flux_operators, build_hamiltonian
from fluxbic.params import BasisSpec, CircuitParams
from fluxbic.qutrit import TERM_COLUMN_NAMES, decompose_operator, qutrit_basis_from_eigenstates
from fluxbic.spectrum import spectral_result

TASKS = ("spectrum", "qutrit-fit", "rates", "table1", "sweep", "prepare")

_CIRCUIT_KEYS = {"E_J", "E_C", "E_L", "phi_ext", "E_Cc", "Z_line", "T"}
_CIRCUIT_REQUIRED = {"E_J", "E_C", "E_L"}
_NOISE_KEYS = {"A_phi0", "Q_diel", "Q_ind", "T", "bias_phi0"}
_NUMERICS_KEYS = {"basis", "dim", "phase_halfwidth", "k", "certify", "tol"}
_SWEEP_KEYS = {"axis", "values", "start", "stop", "num", "outputs", "curves"}
_TABLE_KEYS = {"E_J", "rows", "coupling_EC", "Z_line"}
_PREPARE_KEYS = {"delta_phi", "target_leakage"}
_OUTPUT_KEYS = {"path", "format"}
_TOP_KEYS = {"task", "circuit", "noise", "numerics", "sweep", "table1", "prepare", "output"}


@dataclass
class RunConfig:
    task: str
    circuit: CircuitParams | None
    noise: NoiseParams
    basis: BasisSpec
    k: int
    certify: bool
    tol: float
    sweep: dict | None
    table1: dict | None
    prepare: dict | None
    output_path: str | None
    output_format: str
    applied_defaults: list[str] = field(default_factory=list)

    def resolved(self) -> dict:
        """Full configuration echo for the reproducibility metadata."""
        out = {
            "task": self.task,
            "noise": asdict(self.noise),
            "numerics": {
                "basis": self.basis.kind.value,
                "dim": self.basis.dim,
                "phase_halfwidth": self.basis.phase_halfwidth,
                "k": self.k,
                "certify": self.certify,
                "tol": self.tol,
            },
            "output": {"path": self.output_path, "format": self.output_format},
            "applied_defaults": sorted(self.applied_defaults),
            "tool_version": fluxbic.__version__,
        }
        if self.circuit is not None:
            out["circuit"] = asdict(self.circuit)
        for name in ("sweep", "table1", "prepare"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out


def _reject_unknown(section: dict, allowed: set, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise SchemaError(f"unknown key {path}.{key}")


def _require(section: dict, required: set, path: str) -> None:
    for key in required:
        if key not in section:
            raise SchemaError(f"missing key {path}.{key}")


def _number(section: dict, key: str, path: str):
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}.{key} must be a number, got {value!r}")
    return float(value)


def parse_config(document: dict, task: str | None = None) -> RunConfig:
    """Validate a configuration document and apply defaults.

    Every applied default is recorded and echoed in output metadata.
    Unknown keys anywhere in the tree are rejected.
    """
    if not isinstance(document, dict):
        raise SchemaError("configuration must be a JSON object")
    _reject_unknown(document, _TOP_KEYS, "config")
    defaults: list[str] = []

    cfg_task = document.get("task")
    if cfg_task is not None and cfg_task not in TASKS:
        raise SchemaError(f"config.task must be one of {TASKS}, got {cfg_task!r}")
    if task is None:
        task = cfg_task
    elif cfg_task is not None and cfg_task != task:
        raise SchemaError(f"config.task {cfg_task!r} conflicts with subcommand {task!r}")
    if task is None:
        raise SchemaError("no task given (config.task or subcommand)")

    circuit = None
    if "circuit" in document:
        section = document["circuit"]
        if not isinstance(section, dict):
            raise SchemaError("config.circuit must be an object")
        _reject_unknown(section, _CIRCUIT_KEYS, "circuit")
        _require(section, _CIRCUIT_REQUIRED, "circuit")
        kwargs = {}
        for key in _CIRCUIT_KEYS:
            if key in section:
                kwargs[key] = _number(section, key, "circuit")
            elif key not in _CIRCUIT_REQUIRED:
                defaults.append(f"circuit.{key}")
        try:
            circuit = CircuitParams(**kwargs)
        except UnitError as exc:
            raise UnitError(f"circuit: {exc}") from exc
    elif task != "table1":
        raise SchemaError(f"task {task!r} requires a circuit section")

    noise_section = document.get("noise", {})
    if not isinstance(noise_section, dict):
        raise SchemaError("config.noise must be an object")
    _reject_unknown(noise_section, _NOISE_KEYS, "noise")
    noise_kwargs = {}
    for key in _NOISE_KEYS:
        if key in noise_section and noise_section[key] is not None:
            noise_kwargs[key] = _number(noise_section, key, "noise")
        else:
            defaults.append(f"noise.{key}")
    noise = NoiseParams(**noise_kwargs)

    numerics = document.get("numerics", {})
    if not isinstance(numerics, dict):
        raise SchemaError("config.numerics must be an object")
    _reject_unknown(numerics, _NUMERICS_KEYS, "numerics")
    kind = numerics.get("basis", "ladder")
    if kind not in ("ladder", "grid"):
        raise SchemaError(f"numerics.basis must be 'ladder' or 'grid', got {kind!r}")
    if "basis" not in numerics:
        defaults.append("numerics.basis")
    if kind == "ladder":
        dim = int(numerics.get("dim", 200))
        basis = BasisSpec.ladder(dim)
    else:
        dim = int(numerics.get("dim", 2048))
        halfwidth = float(numerics.get("phase_halfwidth", 6.0 * math.pi))
        if "phase_halfwidth" not in numerics:
            defaults.append("numerics.phase_halfwidth")
        basis = BasisSpec.grid(dim, halfwidth)
    if "dim" not in numerics:
        defaults.append("numerics.dim")
    k = int(numerics.get("k", 6))
    if "k" not in numerics:
        defaults.append("numerics.k")
    if k < 4:
        raise SchemaError("numerics.k must be >= 4 (qutrit levels plus the mediating state)")
    certify = bool(numerics.get("certify", True))
    if "certify" not in numerics:
        defaults.append("numerics.certify")
    tol = float(numerics.get("tol", 1e-8))
    if "tol" not in numerics:
        defaults.append("numerics.tol")

    sweep = document.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise SchemaError("config.sweep must be an object")
        _reject_unknown(sweep, _SWEEP_KEYS, "sweep")
        _require(sweep, {"axis", "outputs"}, "sweep")
        axis = sweep["axis"]
        if axis not in SWEEP_AXES + ("EJ_over_ECt",):
            raise SchemaError(f"sweep.axis must be one of {SWEEP_AXES + ('EJ_over_ECt',)}")
        if "values" in sweep:
            values = [float(v) for v in sweep["values"]]
        elif {"start", "stop", "num"} <= set(sweep):
            num = int(sweep["num"])
            if num < 2:
                raise SchemaError("sweep.num must be >= 2")
            step = (float(sweep["stop"]) - float(sweep["start"])) / (num - 1)
            values = [float(sweep["start"]) + step * i for i in range(num)]
        else:
            raise SchemaError("sweep needs either values or start/stop/num")
        outputs = list(sweep["outputs"])
        for out in outputs:
            if out not in SWEEP_OUTPUTS:
                raise SchemaError(f"unknown sweep output {out!r}; known: {SWEEP_OUTPUTS}")
        curves = sweep.get("curves")
        if curves is not None:
            if not isinstance(curves, dict) or set(curves) != {"axis", "values"}:
                raise SchemaError("sweep.curves needs exactly axis and values")
            if curves["axis"] not in SWEEP_AXES + ("EJ_over_ECt",):
                raise SchemaError(f"unknown sweep.curves.axis {curves['axis']!r}")
            if not isinstance(curves["values"], list) or not curves["values"]:
                raise SchemaError("sweep.curves.values must be a nonempty list")
        sweep = {"axis": axis, "values": values, "outputs": outputs, "curves": curves}
    elif task == "sweep":
        raise SchemaError("task 'sweep' requires a sweep section")

    table1 = document.get("table1")
    if table1 is not None:
        if not isinstance(table1, dict):
            raise SchemaError("config.table1 must be an object")
        _reject_unknown(table1, _TABLE_KEYS, "table1")
        _require(table1, {"rows"}, "table1")
        rows = table1["rows"]
        if not isinstance(rows, list) or not rows:
            raise SchemaError("table1.rows must be a nonempty list")
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or not {"EJ_over_ECt", "EJ_over_EL"} <= set(row):
                raise SchemaError(f"table1.rows[{i}] needs EJ_over_ECt and EJ_over_EL")
            _reject_unknown(row, {"EJ_over_ECt", "EJ_over_EL"}, f"table1.rows[{i}]")
        table1 = {
            "E_J": float(table1.get("E_J", 10.0)),
            "coupling_EC": float(table1.get("coupling_EC", 0.25)),
            "Z_line": float(table1.get("Z_line", 50.0)),
            "rows": [
                {k: float(v) for k, v in row.items()} for row in rows
            ],
        }
    elif task == "table1":
        raise SchemaError("task 'table1' requires a table1 section")

    prepare = document.get("prepare")
    if prepare is not None:
        if not isinstance(prepare, dict):
            raise SchemaError("config.prepare must be an object")
        _reject_unknown(prepare, _PREPARE_KEYS, "prepare")
        _require(prepare, {"delta_phi"}, "prepare")
        prepare = {
            "delta_phi": _number(prepare, "delta_phi", "prepare"),
            "target_leakage": float(prepare.get("target_leakage", 1e-2)),
        }
        if "target_leakage" not in document["prepare"]:
            defaults.append("prepare.target_leakage")
    elif task == "prepare":
        raise SchemaError("task 'prepare' requires a prepare section")

    output = document.get("output", {})
    if not isinstance(output, dict):
        raise SchemaError("config.output must be an object")
    _reject_unknown(output, _OUTPUT_KEYS, "output")
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise SchemaError(f"output.format must be csv or json, got {fmt!r}")
    if "format" not in output:
        defaults.append("output.format")

    return RunConfig(
        task=task,
        circuit=circuit,
        noise=noise,
        basis=basis,
        k=k,
        certify=certify,
        tol=tol,
        sweep=sweep,
        table1=table1,
        prepare=prepare,
        output_path=output.get("path"),
        output_format=fmt,
        applied_defaults=defaults,
    )


def apply_overrides(document: dict, overrides: list[str]) -> dict:
    """Apply repeatable --override key=value pairs with dotted paths."""
    for item in overrides:
        if "=" not in item:
            raise SchemaError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = document
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise SchemaError(f"override path {dotted!r} crosses a non-object")
        node[parts[-1]] = value
    return document


# ---------------------------------------------------------------------------
# Task execution
# ---------------------------------------------------------------------------


def _column_units(name: str) -> str:
    if name.startswith("Gamma_") or name.startswith("gamma_"):
        return name + "_per_s"
    if name.startswith("E") and name[1:].isdigit():
        return name + "_GHz"
    if name.startswith("gap_") or name.startswith("coeff_H_"):
        return name + "_GHz"
    if name in ("E_J", "E_C", "E_L", "E_Cc", "EJ_over_EC", "EJ_over_EL", "EJ_over_ECt"):
        return name if "_over_" in name else name + "_GHz"
    if name == "T":
        return "T_K"
    if name == "Z_line":
        return "Z_line_ohm"
    if name == "phi_ext":
        return "phi_ext_Phi0"
    return name


def _with_units(records: list[dict]) -> list[dict]:
    return [{_column_units(k): v for k, v in rec.items()} for rec in records]


def _metadata(config: RunConfig) -> dict:
    meta = {"resolved_config": config.resolved()}
    meta.update(convention_metadata())
    return meta


def _task_spectrum(config: RunConfig) -> Dataset:
    params = config.circuit
    if params.phi_ext % 1.0 != 0.0:
        print(
            "warning: phi_ext is not an integer flux; parity labels and "
            "protected-state checks are skipped",
            file=sys.stderr,
        )
    res = spectral_result(params, config.basis, config.k)
    records = [
        {"level": i, "energy_GHz": float(e), "parity": p}
        for i, (e, p) in enumerate(zip(res.energies, res.parities))
    ]
    return Dataset.from_records(records, _metadata(config))


def _task_qutrit_fit(config: RunConfig) -> Dataset:
    params = config.circuit
    spec = spectral_result(params, config.basis, config.k)
    qb = qutrit_basis_from_eigenstates(spec)
    h_op = build_hamiltonian(params, config.basis)
    n_op = build_charge_operator(config.basis, params)
    _, sin_op, _ = build_flux_operators(config.basis, params)
    records = []
    for op, tag in ((h_op, "H"), (n_op, "n"), (sin_op, "sin_theta")):
        dec = decompose_operator(op, qb, label=tag)
        rec = {"operator": tag, "residual": dec.residual}
        rec.update(
            {f"coeff_{TERM_COLUMN_NAMES[name]}": c for name, c in dec.coefficients.items()}
        )
        records.append(rec)
    return Dataset.from_records(records, _metadata(config))


def _rate_record(report) -> dict:
    rec = {f"{name}_per_s": value for name, value in report.rates().items()}
    rec["T1_ms"] = report.T1_ms
    return rec


def _task_rates(config: RunConfig) -> Dataset:
    report = reproduce_table1(config.circuit, config.noise, config.basis)
    rec = {"E_J_GHz": config.circuit.E_J, "E_C_GHz": config.circuit.E_C,
           "E_L_GHz": config.circuit.E_L}
    rec.update(_rate_record(report))
    return Dataset.from_records([rec], _metadata(config))


def _task_table1(config: RunConfig) -> Dataset:
    table = config.table1
    records = []
    for row in table["rows"]:
        params = row_circuit(
            E_J=table["E_J"],
            EJ_over_ECt=row["EJ_over_ECt"],
            EJ_over_EL=row["EJ_over_EL"],
            coupling_EC=table["coupling_EC"],
            Z_line=table["Z_line"],
            T=config.noise.T,
        )
        report = reproduce_table1(params, config.noise, config.basis)
        rec = {
            "E_J_GHz": table["E_J"],
            "EJ_over_ECt": row["EJ_over_ECt"],
            "EJ_over_EL": row["EJ_over_EL"],
        }
        rec.update(_rate_record(report))
        records.append(rec)
    return Dataset.from_records(records, _metadata(config))


def _task_sweep(config: RunConfig, curve_value: float | None = None) -> Dataset:
    sweep = config.sweep
    template = config.circuit
    if curve_value is not None:
        from fluxbic.experiments import apply_sweep_axis

        template = apply_sweep_axis(template, sweep["curves"]["axis"], curve_value)
    spec = SweepSpec(
        template=template,
        axis=sweep["axis"],
        values=tuple(sweep["values"]),
        outputs=tuple(sweep["outputs"]),
        noise=config.noise,
        basis=config.basis if config.basis.kind.value == "oscillator_ladder" else BasisSpec.ladder(200),
        grid_basis=config.basis if config.basis.kind.value == "phase_grid" else BasisSpec.grid(1024),
        certify=config.certify,
        certify_tol=config.tol,
    )
    rows = run_sweep(spec)
    meta = _metadata(config)
    if curve_value is not None:
        meta["curve"] = {sweep["curves"]["axis"]: curve_value}
    return Dataset.from_records(_with_units(rows), meta)


def _task_prepare(config: RunConfig) -> Dataset:
    est = preparation_estimate(
        config.circuit,
        config.prepare["delta_phi"],
        config.prepare["target_leakage"],
        config.basis,
    )
    rec = {
        "delta_phi_Phi0": est.delta_phi,
        "gap_a_GHz": est.gap_a,
        "delta_E_GHz": est.delta_E,
        "Gamma_LZ_per_ns": est.Gamma_LZ_per_ns,
        "t_adiabatic_ns": est.t_adiabatic,
    }
    return Dataset.from_records([rec], _metadata(config))


def _emit(dataset: Dataset, config: RunConfig, out_path: str | None, plot: bool,
          suffix: str = "") -> None:
    path = out_path or config.output_path
    if path is None:
        # Reproducibility contract: no data without its resolved-config echo.
        print(json.dumps(dataset.metadata, sort_keys=True), file=sys.stderr)
        sys.stdout.write(to_csv_text(dataset))
        if plot:
            print("warning: --plot requires a file output; skipped", file=sys.stderr)
        return
    path = Path(path)
    if suffix:
        path = path.with_name(path.stem + suffix + path.suffix)
    written = emit_dataset(dataset, config.output_format, path)
    print(f"wrote {written}", file=sys.stderr)
    if config.output_format == "csv":
        # CSV cannot carry the metadata block; echo it in a sidecar.
        sidecar = written.with_suffix(".meta.json")
        sidecar.write_text(
            json.dumps(dataset.metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"wrote {sidecar}", file=sys.stderr)
    if plot:
        from fluxbic.report import render_dataset

        render_path = render_dataset(dataset, written.with_suffix(".png"), title=config.task)
        if render_path is not None:
            print(f"wrote {render_path}", file=sys.stderr)


def run(argv: list[str] | None = None) -> int:
    """Console entry point wrapper."""
    return main(sys.argv[1:] if argv is None else argv)


def main(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="fluxbic",
        description="Fluxonium qutrit spectra, spin-1 fits and protected-state lifetimes",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--format", default=None, choices=("csv", "json"))
        p.add_argument(
            "--override", action="append", default=[], metavar="KEY=VALUE",
            help="dotted-path config override, repeatable",
        )
        p.add_argument("--plot", action="store_true", help="render a PNG next to the output")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        config_path = Path(args.config)
        if not config_path.exists():
            raise SchemaError(f"config file not found: {config_path}")
        try:
            document = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config is not valid JSON: {exc}") from exc
        document = apply_overrides(document, args.override)
        if args.format is not None:
            document.setdefault("output", {})["format"] = args.format
        config = parse_config(document, task=args.task)
    except (SchemaError, UnitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if config.task == "sweep" and config.sweep.get("curves"):
            curves = config.sweep["curves"]
            files = []
            for value in curves["values"]:
                dataset = _task_sweep(config, curve_value=float(value))
                suffix = f"_{curves['axis']}_{value:g}"
                _emit(dataset, config, args.out, args.plot, suffix=suffix)
                base = args.out or config.output_path
                if base:
                    p = Path(base)
                    files.append(str(p.with_name(p.stem + suffix + p.suffix)))
            base = args.out or config.output_path
            if base:
                manifest = Path(base).with_name(Path(base).stem + "_manifest.json")
                manifest.write_text(
                    json.dumps(
                        {"curve_axis": curves["axis"], "curve_values": curves["values"],
                         "files": files},
                        indent=2,
                    )
                    + "\n",
                    encoding="utf-8",
                )
                print(f"wrote {manifest}", file=sys.stderr)
            return 0
        runner = {
            "spectrum": _task_spectrum,
            "qutrit-fit": _task_qutrit_fit,
            "rates": _task_rates,
            "table1": _task_table1,
            "sweep": _task_sweep,
            "prepare": _task_prepare,
        }[config.task]
        dataset = runner(config)
        _emit(dataset, config, args.out, args.plot)
        return 0
    except (SchemaError, UnitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FluxbicError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
