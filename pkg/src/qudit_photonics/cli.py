"""Command-line front end.

Exit codes: 0 success, 1 verification mismatch, 2 usage or parse error.
Output directory: ``--out``, else ``$QUDIT_PHOTONICS_OUT``, else the config
file's ``out``, else ``./results``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, circuits, components, gates, io, montecarlo, resources
from .circuits import NetlistError
from .hilbert import TOL, equal_up_to_global_phase

ENV_OUT = "QUDIT_PHOTONICS_OUT"
DEFAULT_OUT = "results"
REPRODUCE_SEED = 42
CONFIG_FIELDS = ("gate", "netlist", "seed", "noise", "source", "rate", "out", "format", "workers", "d_max")

# reproduce-paper layout: directory -> what it reproduces
BUNDLE = {
    "phase_plates": "wave-plate angles for the four phase-plate settings",
    "netlists": "gate-section netlists for the nine presets",
    "truth_tables_x": "X-family truth tables and per-input efficiencies",
    "density_z4": "Z4 density matrix from tomography",
    "density_z4_powers": "Z4_sq and Z4_dag density matrices",
    "truth_table_cx4": "CX4 truth table",
    "truth_tables_cx_powers": "CX4_sq and CX4_dag truth tables",
    "efficiencies_cx": "CX-family per-input efficiencies",
    "fidelities": "equal-superposition tomography fidelities for all nine gates",
    "resources": "component counts versus dimension",
}


class UsageError(Exception):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class Mismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    gate: str | None = None
    netlist: str | None = None
    seed: int | None = None
    noise: object = None  # "default" | "zero" | path | dict
    source: dict | None = None
    rate: float | None = None
    out: str | None = None
    format: str = "both"
    workers: int | None = None
    d_max: int | None = None


def _read_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(exc.strerror or str(exc), path) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object", f"{path}:$")
    unknown = sorted(set(doc) - set(CONFIG_FIELDS))
    if unknown:
        raise UsageError(f"unknown config field(s) {unknown}", f"{path}:$.{unknown[0]}")
    try:
        io.validate(doc, "config")
    except io.SchemaError as exc:
        raise UsageError(str(exc), path) from None
    return doc


def resolve_config(args: argparse.Namespace, cfg: dict) -> RunConfig:
    vals = {}
    for f in CONFIG_FIELDS:
        v = getattr(args, f, None)
        vals[f] = v if v is not None else cfg.get(f)
    out = getattr(args, "out", None) or os.environ.get(ENV_OUT) or cfg.get("out") or DEFAULT_OUT
    vals["out"] = out
    vals["format"] = vals["format"] or "both"
    return RunConfig(**vals)


def resolve_models(rc: RunConfig, ideal: bool):
    """(source, noise) for a run; None, None when exact."""
    if ideal:
        return None, None
    spec = rc.noise if rc.noise is not None else "default"
    if spec == "default":
        noise, source = montecarlo.DEFAULT_NOISE, montecarlo.DEFAULT_SOURCE
    elif spec == "zero":
        noise, source = montecarlo.NoiseModel.zero(), montecarlo.NOISELESS_SOURCE
    else:
        where = "noise"
        doc = spec
        if isinstance(spec, str):
            where, doc = spec, _read_json(spec)
        if not isinstance(doc, dict):
            raise UsageError("noise config must be a JSON object", where)
        try:
            noise = montecarlo.NoiseModel.from_dict(doc)
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc), where) from None
        source = montecarlo.DEFAULT_SOURCE
    if rc.source:
        try:
            source = montecarlo.SourceModel.from_dict({**source.to_dict(), **rc.source})
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc), "source") from None
    if rc.rate is not None:
        source = montecarlo.with_rate(source, float(rc.rate))
    if rc.seed is None:
        raise UsageError("a --seed is required for sampled runs (there is no clock-based default)", "--seed")
    return source, noise


def _gate(rc: RunConfig) -> str:
    if not rc.gate:
        raise UsageError("a --gate preset is required", "--gate")
    if rc.gate not in gates.PRESETS:
        raise UsageError(f"unknown gate {rc.gate!r}; choose from {', '.join(gates.PRESETS)}", "--gate")
    return rc.gate


def load_netlist(path: str) -> circuits.Netlist:
    doc = _read_json(path)
    try:
        return circuits.netlist_from_dict(doc)
    except NetlistError as exc:
        raise UsageError(str(exc), path) from None


# ---------------------------------------------------------------------------
# documents


def _run_meta(gate, seed, source, noise) -> dict:
    return {
        "gate": gate,
        "mode": "ideal" if noise is None else "sampled",
        "seed": seed if noise is not None else None,
        "noise": noise.to_dict() if noise is not None else None,
        "source": source.to_dict() if source is not None else None,
    }


def truth_table_doc(gate, table: gates.TruthTable, seed=None, source=None, noise=None) -> dict:
    body = {**_run_meta(gate, seed, source, noise), **table.to_dict(), "max_off_target": table.max_off_target()}
    return io.envelope("truth_table", body)


def tomography_doc(gate, run: montecarlo.TomographyRun, seed=None, source=None, noise=None) -> dict:
    body = {**_run_meta(gate, seed, source, noise), **run.result.to_dict(run.fidelity),
            "measurements": [{"pair": list(m.mode_pair), "offset": m.reference_offset,
                              "probability": m.probability} for m in run.measurements],
            "classical_bound": gates.classical_bound()}
    return io.envelope("tomography", body)


def verify_netlist(net: circuits.Netlist, target: str):
    """Compare a compiled netlist with a preset's ideal gate (on the encoded H levels
    for single-qudit targets)."""
    u = circuits.compile_netlist(net)
    ideal = gates.ideal_gate(target)
    m = u if ideal.basis.dim == u.basis.dim else u.restrict()
    if m.basis.dim != ideal.basis.dim:
        raise UsageError(f"netlist dimension {u.basis.dim} does not fit target {target}", "--target")
    return equal_up_to_global_phase(m.matrix, ideal.matrix, TOL.exact), u


def phase_plate_doc() -> dict:
    rows = []
    for k, (q1, h, q2) in components.PHASE_PLATE_TABLE.items():
        theta = k * math.pi / 2
        res = equal_up_to_global_phase(components.phase_plate_arms(k), np.diag([1, np.exp(1j * theta)]), TOL.exact)
        rows.append({"theta_deg": 90.0 * k, "qwp1_deg": q1, "hwp_deg": h, "qwp2_deg": q2,
                     "max_deviation": res.deviation, "match": bool(res)})
    return io.envelope("phase_plates", {"rows": rows})


def operator_doc(name, u) -> dict:
    return io.envelope("operator", {"name": name, "labels": list(u.basis.labels),
                                    "real": u.matrix.real.tolist(), "imag": u.matrix.imag.tolist(),
                                    "unitarity_error": u.unitarity_error()})


def resources_doc(d_max: int) -> dict:
    return io.envelope("resources", {"d_max": d_max, "rows": resources.resource_table(d_max)})


# ---------------------------------------------------------------------------
# writers


def _wants(fmt: str, kind: str) -> bool:
    return fmt in (kind, "both")


def write_truth_table(out: Path, doc: dict, fmt: str) -> list[Path]:
    stem = f"{doc['gate']}_truth_table"
    files = []
    if _wants(fmt, "json"):
        files.append(io.write_json(out / f"{stem}.json", doc))
    if _wants(fmt, "csv"):
        rows = [[lab, *row] for lab, row in zip(doc["inputs"], doc["probabilities"])]
        files.append(io.write_csv(out / f"{stem}.csv", ["input", *doc["outputs"]], rows))
    return files


def write_efficiencies(path: Path, docs: list[dict]) -> Path:
    rows = [[d["gate"], t, inp, eff] for d in docs for inp, t, eff in zip(d["inputs"], d["targets"], d["efficiencies"])]
    rows += [[d["gate"], "", "average", d["average_efficiency"]] for d in docs]
    return io.write_csv(path, ["gate", "target", "input", "efficiency"], rows)


def write_tomography(out: Path, doc: dict, fmt: str) -> list[Path]:
    stem = doc["gate"]
    files = []
    if _wants(fmt, "json"):
        files.append(io.write_json(out / f"{stem}_tomography.json", doc))
    if _wants(fmt, "csv"):
        files.append(io.write_matrix_csv(out / f"{stem}_density_real.csv", np.array(doc["density_real"]), doc["labels"]))
        files.append(io.write_matrix_csv(out / f"{stem}_density_imag.csv", np.array(doc["density_imag"]), doc["labels"]))
        files.append(io.write_csv(out / f"{stem}_phases.csv", ["mode_1", "mode_2", "phase_rad"],
                                  [[*p["pair"], p["phase"]] for p in doc["phases"]]))
    return files


def write_resources(out: Path, doc: dict, fmt: str) -> list[Path]:
    files = []
    if _wants(fmt, "json"):
        files.append(io.write_json(out / "resources.json", doc))
    if _wants(fmt, "csv"):
        cols = resources.RESOURCE_COLUMNS
        files.append(io.write_csv(out / "resources.csv", cols, ([r[c] for c in cols] for r in doc["rows"])))
    return files


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args, rc: RunConfig) -> int:
    if bool(rc.gate) == bool(rc.netlist):
        raise UsageError("give exactly one of --gate or --netlist", "verify")
    if rc.gate:
        name = _gate(rc)
        net = circuits.paper_circuit(name)
        label = f"preset:{name}"
    else:
        net = load_netlist(rc.netlist)
        label = rc.netlist
    target = args.target or rc.gate or (net.name if net.name in gates.PRESETS else None)
    if target is None:
        raise UsageError("netlist name is not a preset; give --target", "--target")
    if target not in gates.PRESETS:
        raise UsageError(f"unknown target {target!r}", "--target")
    res, u = verify_netlist(net, target)
    doc = io.envelope("verify", {
        "source": label, "target": target, "match": bool(res),
        "max_deviation": res.deviation, "global_phase": res.phase, "tolerance": TOL.exact,
        "unitarity_error": u.unitarity_error(),
        "component_counts": dict(sorted(circuits.component_counts(net).items())),
    })
    status = "MATCH" if res else "MISMATCH"
    phase = "n/a" if res.phase is None else f"{res.phase:.12f} rad"
    print(f"{status} {label} vs {target}: max deviation {res.deviation:.3e}, global phase {phase}")
    if args.out:
        io.write_json(Path(rc.out) / f"verify_{target}.json", doc)
    return 0 if res else 1


def cmd_truth_table(args, rc: RunConfig) -> int:
    gate = _gate(rc)
    source, noise = resolve_models(rc, args.ideal)
    if noise is None:
        table = montecarlo.exact_truth_table(gate)
    else:
        table = montecarlo.run_truth_table_experiment(gate, source, noise, rc.seed, rc.workers)
    doc = truth_table_doc(gate, table, rc.seed, source, noise)
    write_truth_table(Path(rc.out), doc, rc.format)
    print(f"{gate} average efficiency {table.average_efficiency() * 100:.4f}%  "
          f"max off-target {table.max_off_target() * 100:.4f}%")
    return 0


def cmd_tomography(args, rc: RunConfig) -> int:
    gate = _gate(rc)
    source, noise = resolve_models(rc, args.ideal)
    if noise is None:
        run = montecarlo.noiseless_tomography(gate)
    else:
        run = montecarlo.run_tomography_experiment(gate, source, noise, rc.seed, rc.workers)
    doc = tomography_doc(gate, run, rc.seed, source, noise)
    write_tomography(Path(rc.out), doc, rc.format)
    print(f"{gate} fidelity {run.fidelity * 100:.4f}%  (classical bound {gates.classical_bound() * 100:.2f}%)")
    return 0


def cmd_resources(args, rc: RunConfig) -> int:
    d_max = rc.d_max if rc.d_max is not None else 8
    if d_max < 2:
        raise UsageError(f"--d-max must be >= 2, got {d_max}", "--d-max")
    doc = resources_doc(d_max)
    write_resources(Path(rc.out), doc, rc.format)
    for r in doc["rows"]:
        flag = f"  [{r['warning']}]" if r["warning"] else ""
        print(f"d={r['d']}: paper X/CX {r['paper_x_pbs']} PBS, Z {r['paper_z_hwp']} HWP + {r['paper_z_qwp']} QWP; "
              f"walk {r['walk_pbs']} PBS + {r['walk_hwp']} HWP{flag}")
    return 0


def cmd_counts(args, rc: RunConfig) -> int:
    gate = _gate(rc)
    source, noise = resolve_models(rc, False)
    if args.protocol == "truth-table":
        records = montecarlo.truth_table_records(gate, source, noise, rc.seed, rc.workers)
    else:
        records = montecarlo.run_tomography_experiment(gate, source, noise, rc.seed, rc.workers).records
    path = io.write_jsonl(Path(rc.out) / f"{gate}_{args.protocol}_counts.jsonl", [r.to_dict() for r in records])
    print(f"{len(records)} count records -> {path}")
    return 0


def cmd_netlist(args, rc: RunConfig) -> int:
    if args.action == "export":
        gate = _gate(rc)
        doc = circuits.netlist_to_dict(circuits.paper_circuit(gate))
        io.validate(doc)
        if args.file:
            io.write_json(args.file, doc)
        else:
            sys.stdout.write(io.dumps(doc))
        return 0
    if not args.file:
        raise UsageError("netlist compile needs a netlist file", "netlist compile")
    net = load_netlist(args.file)
    u = circuits.compile_netlist(net)
    doc = operator_doc(net.name, u)
    if args.out:
        io.write_json(Path(rc.out) / f"{net.name or 'netlist'}_operator.json", doc)
    else:
        sys.stdout.write(io.dumps(doc))
    return 0


def reproduce(out: Path, seed: int = REPRODUCE_SEED, workers: int | None = None) -> list[Path]:
    """Every figure and table bundle, default noise, one seed.  Byte-deterministic."""
    out = Path(out)
    source, noise = montecarlo.DEFAULT_SOURCE, montecarlo.DEFAULT_NOISE
    files: list[Path] = []

    pp = phase_plate_doc()
    files.append(io.write_json(out / "phase_plates" / "phase_plates.json", pp))
    files.append(io.write_csv(out / "phase_plates" / "phase_plates.csv",
                              ["theta_deg", "qwp1_deg", "hwp_deg", "qwp2_deg", "max_deviation"],
                              [[r["theta_deg"], r["qwp1_deg"], r["hwp_deg"], r["qwp2_deg"], r["max_deviation"]]
                               for r in pp["rows"]]))

    for gate in gates.PRESETS:
        net = circuits.paper_circuit(gate)
        files.append(io.write_json(out / "netlists" / f"{gate}.json", circuits.netlist_to_dict(net)))

    tables = {g: truth_table_doc(g, montecarlo.run_truth_table_experiment(g, source, noise, seed, workers),
                                 seed, source, noise) for g in gates.PRESETS}
    tomos = {g: tomography_doc(g, montecarlo.run_tomography_experiment(g, source, noise, seed, workers),
                               seed, source, noise) for g in gates.PRESETS}

    x_family = ["X4", "X4_sq", "X4_dag"]
    for g in x_family:
        files += write_truth_table(out / "truth_tables_x", tables[g], "both")
    files.append(write_efficiencies(out / "truth_tables_x" / "efficiencies.csv", [tables[g] for g in x_family]))
    files += write_tomography(out / "density_z4", tomos["Z4"], "both")
    for g in ("Z4_sq", "Z4_dag"):
        files += write_tomography(out / "density_z4_powers", tomos[g], "both")
    files += write_truth_table(out / "truth_table_cx4", tables["CX4"], "both")
    for g in ("CX4_sq", "CX4_dag"):
        files += write_truth_table(out / "truth_tables_cx_powers", tables[g], "both")
    files.append(write_efficiencies(out / "efficiencies_cx" / "efficiencies.csv",
                                    [tables[g] for g in ("CX4", "CX4_sq", "CX4_dag")]))

    for g in gates.PRESETS:
        if not g.startswith("Z"):
            files.append(io.write_json(out / "fidelities" / f"{g}_tomography.json", tomos[g]))
    summary = io.envelope("summary", {
        "seed": seed, "noise": noise.to_dict(), "source": source.to_dict(),
        "classical_bound": gates.classical_bound(),
        "gates": {g: {"average_efficiency": tables[g]["average_efficiency"],
                      "fidelity": tomos[g]["fidelity_vs_ideal"]} for g in gates.PRESETS},
    })
    files.append(io.write_json(out / "fidelities" / "summary.json", summary))
    files.append(io.write_csv(out / "fidelities" / "summary.csv", ["gate", "average_efficiency", "fidelity"],
                              [[g, v["average_efficiency"], v["fidelity"]] for g, v in summary["gates"].items()]))

    files += write_resources(out / "resources", resources_doc(16), "both")

    entries = []
    for f in sorted(files, key=lambda p: p.relative_to(out).as_posix()):
        data = f.read_bytes()
        entries.append({"path": f.relative_to(out).as_posix(), "sha256": hashlib.sha256(data).hexdigest(),
                        "bytes": len(data)})
    manifest = io.envelope("manifest", {"seed": seed, "version": __version__, "files": entries,
                                        "directories": dict(BUNDLE)})
    files.append(io.write_json(out / "manifest.json", manifest))
    return files


def cmd_reproduce(args, rc: RunConfig) -> int:
    seed = rc.seed if rc.seed is not None else REPRODUCE_SEED
    for gate in gates.PRESETS:
        res, _ = verify_netlist(circuits.paper_circuit(gate), gate)
        if not res:
            raise Mismatch(f"{gate} netlist does not match its ideal gate (deviation {res.deviation:.3e})")
    files = reproduce(Path(rc.out), seed, rc.workers)
    print(f"wrote {len(files)} files under {rc.out} (seed {seed})")
    return 0


# ---------------------------------------------------------------------------
# parser


def _run_options(sp, sampled=True):
    sp.add_argument("--gate", help="gate preset, one of " + ", ".join(gates.PRESETS))
    if sampled:
        sp.add_argument("--ideal", action="store_true", help="exact probabilities, no sampling")
        sp.add_argument("--noise", help="'default', 'zero', or a noise JSON file")
        sp.add_argument("--seed", type=int, help="required for sampled runs")
        sp.add_argument("--rate", type=float, help="heralded photons per second")
        sp.add_argument("--workers", type=int, help="parallel acquisitions")
    _out_options(sp)


def _out_options(sp):
    sp.add_argument("--out", help=f"output directory (else ${ENV_OUT}, else ./{DEFAULT_OUT})")
    sp.add_argument("--format", choices=("json", "csv", "both"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qudit-photonics", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file of default options; unknown fields are rejected")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify", help="compare a compiled circuit with its ideal gate")
    sp.add_argument("--gate")
    sp.add_argument("--netlist", help="netlist JSON file")
    sp.add_argument("--target", help="preset to compare against (default: --gate or the netlist name)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("truth-table", help="truth table, exact or sampled")
    _run_options(sp)
    sp.set_defaults(func=cmd_truth_table)

    sp = sub.add_parser("tomography", help="equal-superposition state tomography and fidelity")
    _run_options(sp)
    sp.set_defaults(func=cmd_tomography)

    sp = sub.add_parser("resources", help="component counts for d = 2..N")
    sp.add_argument("--d-max", dest="d_max", type=int)
    _out_options(sp)
    sp.set_defaults(func=cmd_resources)

    sp = sub.add_parser("counts", help="raw count records as JSON lines")
    _run_options(sp)
    sp.add_argument("--protocol", choices=("truth-table", "tomography"), default="truth-table")
    sp.set_defaults(func=cmd_counts)

    sp = sub.add_parser("netlist", help="export a preset netlist or compile a netlist file")
    sp.add_argument("action", choices=("export", "compile"))
    sp.add_argument("file", nargs="?", help="export: destination (default stdout); compile: source")
    sp.add_argument("--gate")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_netlist)

    sp = sub.add_parser("reproduce-paper", help="all figure and table data with default noise")
    sp.add_argument("--seed", type=int, help=f"default {REPRODUCE_SEED}")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve_config(args, load_config(args.config))
        if args.command == "truth-table" or args.command == "tomography":
            if args.ideal and args.noise is not None:
                raise UsageError("--ideal and --noise are mutually exclusive", "--ideal")
        return args.func(args, rc)
    except (UsageError, NetlistError, io.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Mismatch as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
