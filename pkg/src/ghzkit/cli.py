"""Command-line front end.

Exit codes: 0 success, 2 usage or input-parse error, 3 numeric-domain failure.
Every command that writes files also writes one ``*.manifest.json`` beside
them, holding the argument list, seed, tool version and SHA-256 digests of the
outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, basis, experiment, mixtures, qmath, witnesses

log = logging.getLogger("ghzkit")


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


# -- helpers -------------------------------------------------------------------


def _label(text: str) -> str:
    try:
        return basis.check_label(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _shots(text: str) -> int | None:
    if text.lower() in ("inf", "infinite", "analytic"):
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be a positive integer or 'inf', got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("shots must be positive")
    return n


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str, written: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    path.write_bytes(data)
    written[path.name] = hashlib.sha256(data).hexdigest()


def _manifest(path: Path, args, argv: list[str], written: dict) -> None:
    man = {
        "command": args.command,
        "args": list(argv),
        "seed": args.seed,
        "version": __version__,
        "outputs": dict(sorted(written.items())),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_dumps(man).encode("utf-8"))


def _emit(args, argv, text: str) -> None:
    """Print to stdout, or write ``--out`` plus its manifest."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    written: dict = {}
    _write(out, text, written)
    _manifest(out.with_name(out.name + ".manifest.json"), args, argv, written)


def load_states(text: str, source: str = "<input>"):
    """Parse a state file: one state JSON object, or a ``basis --all --format json`` collection.

    Returns a single state or a dict label -> state.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        if isinstance(obj, dict) and "states" in obj:
            return {k: qmath.state_from_json(v) for k, v in obj["states"].items()}
        return qmath.state_from_json(obj)
    except (ValueError, TypeError, KeyError) as e:
        raise UsageError(f"{source}: {e}") from None


# -- commands ------------------------------------------------------------------


def cmd_basis(args, argv) -> None:
    if args.all == (args.label is not None):
        raise UsageError("give exactly one of LABEL or --all")
    labels = basis.LABELS if args.all else (args.label,)
    if args.format == "json":
        if args.all:
            obj = {
                "states": {b: basis.basis_state(b).to_json() for b in labels},
                "twins": [list(p) for p in basis.twin_pairs()],
            }
        else:
            obj = basis.basis_state(args.label).to_json()
        text = _dumps(obj)
    else:
        rows = [f"{b}  {basis.ket_notation(b)}" if args.all else basis.ket_notation(b) for b in labels]
        if args.all:
            rows.append("")
            rows.append("twins:")
            rows += [f"{a} <-> {b}" for a, b in basis.twin_pairs()]
        text = "\n".join(rows) + "\n"
    _emit(args, argv, text)


def cmd_witness(args, argv) -> None:
    if (args.state_file is None) == (args.label is None):
        raise UsageError("give exactly one of a state file or --label")
    if args.label is not None:
        rho = basis.basis_state(args.label).projector()
    else:
        path = Path(args.state_file)
        try:
            text = path.read_text()
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror}") from None
        state = load_states(text, str(path))
        if isinstance(state, dict):
            raise UsageError(f"{path}: holds several states; pass a single state")
        rho = qmath.as_density(state)
        if rho.dim != 16:
            raise UsageError(f"{path}: witnesses need a four-qubit (16-dim) state, got {rho.dim}")
    if args.adapt == "auto":
        rep = witnesses.best_k_report(rho, args.variant)
    else:
        try:
            target = basis.check_label(args.adapt)
        except ValueError as e:
            raise UsageError(f"--adapt: {e}") from None
        rep = witnesses.witness_report(rho, target, args.variant)
    _emit(args, argv, rep.dumps() + "\n")


def cmd_phase_diagram(args, argv) -> None:
    if args.triple:
        scan = mixtures.scan_ternary(*args.triple, args.resolution)
    else:
        scan = mixtures.scan_binary(*args.pair, args.resolution)
    prefix = Path(args.out or "phase_diagram")
    written: dict = {}
    _write(prefix.with_name(prefix.name + ".csv"), mixtures.to_csv(scan), written)
    _write(prefix.with_name(prefix.name + ".svg"), mixtures.to_svg(scan), written)
    _manifest(prefix.with_name(prefix.name + ".manifest.json"), args, argv, written)
    counts = {c.value: sum(n.cls is c for n in scan.nodes) for c in mixtures.RegionClass}
    log.info("%d nodes: %s", len(scan.nodes), counts)


def _witness_summary(records, label: str | None) -> dict:
    """Linear witness from counts, adapted to ``label`` or maximized over all labels."""
    labels = [label] if label else list(basis.LABELS)
    best = None
    for b in labels:
        val, se = experiment.witness_from_counts(records, witnesses.adapt(witnesses.lin_I2_observable(), b))
        if best is None or val > best[1] + 1e-15:
            best = (b, val, se)
    return {"adapted_to": best[0], "lin_i2": best[1], "stderr": best[2]}


def _fqst_summary(records) -> tuple[dict, qmath.DensityMatrix]:
    rho = experiment.fqst(records)
    cls, ppt, rep = mixtures.classify(rho)
    out = {
        "report": rep.to_json(),
        "class": cls.value,
        "purity": qmath.purity(rho),
        "ppt_all": ppt.ppt_all,
        "min_pt_eig": ppt.min_eig,
    }
    return out, rho


def cmd_simulate(args, argv) -> None:
    try:
        noise = experiment.NoiseModel(args.noise, args.dark, args.shots, args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    budget = witnesses.measurement_budget(args.task)
    log.info("task=%s measurement budget=%d", args.task, budget)
    records = experiment.simulate(args.label, noise, args.task)
    outdir = Path(args.out or ".")
    written: dict = {}
    _write(outdir / f"counts_{args.label}.jsonl", experiment.dumps_records(records), written)
    report = {
        "label": args.label,
        "task": args.task,
        "budget": budget,
        "seed": args.seed,
        "noise": args.noise,
        "shots": args.shots,
        "dark_rate": args.dark,
    }
    if args.task == "witness":
        report["raw"] = _witness_summary(records, args.label)
        if args.dark > 0:
            corrected = [experiment.dark_correct(r) for r in records]
            report["dark_corrected"] = _witness_summary(corrected, args.label)
    else:
        summary, rho = _fqst_summary(records)
        report.update(summary)
        report["fidelity"] = qmath.fidelity_with_pure(rho, basis.basis_state(args.label))
        _write(outdir / f"rho_{args.label}.json", _dumps(rho.to_json()), written)
    _write(outdir / f"report_{args.label}.json", _dumps(report), written)
    _manifest(outdir / f"simulate_{args.label}.manifest.json", args, argv, written)
    if not args.quiet:
        sys.stdout.write(_dumps(report))


def _read_weights(path: Path) -> dict[str, float]:
    try:
        obj = json.loads(path.read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(obj, dict) or not obj:
        raise UsageError(f"{path}: expected an object mapping labels to weights")
    weights = {}
    for k, v in obj.items():
        try:
            weights[basis.check_label(k)] = float(v)
        except (ValueError, TypeError) as e:
            raise UsageError(f"{path}: {e}") from None
    total = sum(weights.values())
    if abs(total - 1) > 1e-9 or any(w < 0 for w in weights.values()):
        raise UsageError(f"{path}: weights must be nonnegative and sum to 1 (sum is {total!r})")
    return weights


def cmd_mix_counts(args, argv) -> None:
    weights = _read_weights(Path(args.weights))
    inputs = Path(args.inputs)
    sets = []
    for label in weights:
        path = inputs / f"counts_{label}.jsonl"
        try:
            sets.append(experiment.loads_records(path.read_text()))
        except OSError as e:
            raise UsageError(f"cannot read {path}: {e.strerror}") from None
        except ValueError as e:
            raise UsageError(f"{path}: {e}") from None
    try:
        records = experiment.weighted_mix_counts(sets, list(weights.values()))
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = {"weights": weights, "task": args.task}
    if args.task == "witness":
        report.update(_witness_summary(records, None))
    else:
        summary, _ = _fqst_summary(records)
        report.update(summary)
    _emit(args, argv, _dumps(report))


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master RNG seed (default 0)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file, directory or prefix")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="ghzkit", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"ghzkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("basis", parents=[common], help="print GHZ basis states")
    b.add_argument("label", nargs="?", type=_label)
    b.add_argument("--all", action="store_true")
    b.add_argument("--format", choices=("ket", "json"), default="ket")
    b.set_defaults(func=cmd_basis)

    w = sub.add_parser("witness", parents=[common], help="evaluate I2, I3, I4 and the linear witness")
    w.add_argument("state_file", nargs="?")
    w.add_argument("--label", type=_label)
    w.add_argument("--adapt", default="auto", help="basis label or 'auto' (maximize over labels)")
    w.add_argument("--variant", choices=witnesses.VARIANTS, default=witnesses.NORMALIZED)
    w.set_defaults(func=cmd_witness)

    d = sub.add_parser("phase-diagram", parents=[common], help="classify a grid of GHZ mixtures")
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--pair", nargs=2, type=_label, metavar=("A", "B"))
    g.add_argument("--triple", nargs=3, type=_label, metavar=("A", "B", "C"))
    d.add_argument("--resolution", type=int, default=100)
    d.set_defaults(func=cmd_phase_diagram)

    s = sub.add_parser("simulate", parents=[common], help="simulate preparation and counting")
    s.add_argument("--label", type=_label, required=True)
    s.add_argument("--noise", type=float, default=0.0, help="white-noise weight p")
    s.add_argument("--shots", type=_shots, default=None, help="shots per setting, or 'inf' (default)")
    s.add_argument("--dark", type=float, default=0.0, help="mean dark counts per outcome bin")
    s.add_argument("--task", choices=("witness", "fqst"), default="witness")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mix-counts", parents=[common], help="mix per-state count files and analyse")
    m.add_argument("--weights", required=True, help="JSON object label -> weight")
    m.add_argument("--inputs", required=True, help="directory holding counts_<label>.jsonl files")
    m.add_argument("--task", choices=("witness", "fqst"), default="witness")
    m.set_defaults(func=cmd_mix_counts)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    for name, default in (("seed", 0), ("out", None), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.command == "phase-diagram" and args.resolution < 2:
        print("ghzkit: error: --resolution must be at least 2", file=sys.stderr)
        return 2
    log.info("seed=%d", args.seed)
    try:
        args.func(args, argv)
    except UsageError as e:
        print(f"ghzkit: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"ghzkit: numeric error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
