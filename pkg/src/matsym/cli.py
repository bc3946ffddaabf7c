"""Command-line front end: synth, fit, predict, stiffness, subsets, report.

Every run writes a ``manifest.json`` next to its outputs recording the
invocation, configuration, input fingerprints and output fingerprints,
so identical invocations are verifiably identical.  Failures print a
single machine-parsable line ``<ErrorClass>: <message>`` on stderr.

Exit codes: 0 ok, 2 usage, 3 validation, 4 numeric failure, 5 I/O.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__, _svg, analysis, dataio, discovery, energy, stress
from ._kernels import backend_name
from .errors import DomainError, TrainingError, ValidationError
from .kinematics import FiberDirection, LoadingMode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

#: Replicates emitted per condition by `synth` when noise is requested.
SYNTH_REPLICATES = 10


class _CliError(Exception):
    def __init__(self, error_class: str, message: str, code: int):
        super().__init__(message)
        self.error_class = error_class
        self.code = code


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, argv, inputs, outputs, config) -> Path:
    manifest = {
        "schema_version": dataio.SCHEMA_VERSION,
        "command": command,
        "argv": list(argv),
        "package_version": __version__,
        "kernel_backend": backend_name(),
        "config": config,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {
            str(Path(p).relative_to(out_dir)): _sha256(Path(p)) for p in sorted(outputs)
        },
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _resolve_model(spec: str) -> tuple[str, energy.ModelWeights]:
    models = energy.reference_models()
    if spec in models:
        return spec, models[spec]
    path = Path(spec)
    if not path.exists():
        raise _CliError(
            "Validation",
            f"unknown model {spec!r}: not a built-in "
            f"({', '.join(sorted(models))}) and no such file",
            EXIT_VALIDATION,
        )
    return energy.load_model(path)


def _parse_case(text: str) -> tuple[LoadingMode, FiberDirection]:
    mode_s, sep, dir_s = text.partition(":")
    if not sep:
        raise _CliError(
            "Usage", f"--case must look like mode:direction, got {text!r}", EXIT_USAGE
        )
    return LoadingMode.from_label(mode_s), FiberDirection.from_label(dir_s)


def _load_data(data: str, permissive: bool) -> dataio.ExperimentSet:
    root = Path(data)
    if root.is_dir():
        files = sorted(p for p in root.glob("*.csv") if p.name != "stiffness_report.csv")
    elif root.exists():
        files = [root]
    else:
        raise _CliError("IO", f"no such data path: {data}", EXIT_IO)
    files = [p for p in files if not p.name.startswith("decomposition_")]
    if not files:
        raise _CliError("NoData", f"no CSV data files found under {data}", EXIT_VALIDATION)
    merged: dataio.ExperimentSet | None = None
    for path in files:
        loaded = dataio.load_csv(path, permissive=permissive)
        if merged is None:
            merged = loaded
        else:
            if loaded.material != merged.material:
                raise _CliError(
                    "Validation",
                    f"multiple materials in {data}: {merged.material!r} vs {loaded.material!r}",
                    EXIT_VALIDATION,
                )
            for exp in loaded.mean_experiments():
                merged.add(exp)
            for key, reps in loaded.replicates.items():
                for exp in reps:
                    merged.add(exp)
    return merged


def _case_limit(mode: LoadingMode) -> float:
    if mode is LoadingMode.TENSION:
        return dataio.PROTOCOL_STRETCH_MAX
    if mode is LoadingMode.COMPRESSION:
        return dataio.PROTOCOL_STRETCH_MIN
    return dataio.PROTOCOL_SHEAR_MAX


def _curve_chart(out_dir: Path, name: str, model, cases, experiment_set=None) -> Path:
    series = []
    for mode, direction in cases:
        samples = stress.predict_curve(
            model, stress.LoadingCase(mode, direction, _case_limit(mode)), 60
        )
        series.append(
            (
                f"{mode.label} {direction.label}",
                [s.loading for s in samples],
                [s.stress for s in samples],
            )
        )
    return _svg.write_chart(
        out_dir / name, series, "model stress response", "loading (lambda or gamma)", "stress [kPa]"
    )


def _cmd_synth(args, argv) -> int:
    name, model = _resolve_model(args.model)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.case:
        cases = []
        for text in args.case:
            mode, direction = _parse_case(text)
            cases.append(stress.LoadingCase(mode, direction, _case_limit(mode)))
    else:
        cases = dataio.full_protocol()
    replicates = SYNTH_REPLICATES if args.noise > 0.0 else 0
    dataset = dataio.synthesize(
        model,
        protocol=cases,
        n_points=args.points,
        noise=dataio.NoiseSpec(amplitude=args.noise, seed=args.seed),
        replicates=replicates,
        material=name,
    )
    data_path = dataio.write_csv(out_dir / f"data_{name}.csv", dataset)
    outputs = [data_path]
    if args.svg:
        outputs.append(_curve_chart(out_dir, f"curves_{name}.svg", model, [c[:2] for c in cases]))
    inputs = [] if args.model == name else [Path(args.model)]
    _write_manifest(
        out_dir,
        "synth",
        argv,
        inputs,
        outputs,
        {
            "model": name,
            "points": args.points,
            "noise": args.noise,
            "seed": args.seed,
            "replicates": replicates,
        },
    )
    return EXIT_OK


def _cmd_fit(args, argv) -> int:
    dataset = _load_data(args.data, args.permissive)
    exps = dataset.mean_experiments()
    if not exps:
        raise _CliError("NoData", f"no mean curves in {args.data}", EXIT_VALIDATION)
    config = discovery.TrainingConfig(
        alpha=args.alpha,
        epochs=args.epochs,
        threshold=args.threshold,
        seed=args.seed,
    )
    discovered = discovery.train(exps, config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = energy.save_model(
        out_dir / f"model_{dataset.material}.json",
        discovered.weights,
        name=dataset.material,
        meta={"active_terms": list(discovered.active_terms)},
    )
    report_path = discovery.write_fit_report(out_dir / "fit_report.json", discovered)
    outputs = [model_path, report_path]
    if args.svg:
        outputs.append(
            _curve_chart(
                out_dir,
                f"curves_{dataset.material}.svg",
                discovered.weights,
                [e.key for e in exps],
            )
        )
    inputs = sorted(str(p) for p in Path(args.data).glob("*.csv")) if Path(args.data).is_dir() else [args.data]
    _write_manifest(out_dir, "fit", argv, inputs, outputs, json.loads(json.dumps(vars(args), default=str)))
    return EXIT_OK


def _cmd_predict(args, argv) -> int:
    name, model = _resolve_model(args.model)
    mode, direction = _parse_case(args.case)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = stress.predict_curve(
        model, stress.LoadingCase(mode, direction, _case_limit(mode)), args.points
    )
    csv_path = stress.write_curve_csv(
        out_dir / f"prediction_{mode.label}_{direction.label}.csv",
        model,
        mode,
        direction,
        [s.loading for s in samples],
    )
    outputs = [csv_path]
    if args.svg:
        outputs.append(_curve_chart(out_dir, f"curves_{name}.svg", model, [(mode, direction)]))
    inputs = [] if args.model == name else [Path(args.model)]
    _write_manifest(
        out_dir,
        "predict",
        argv,
        inputs,
        outputs,
        {"model": name, "case": args.case, "points": args.points},
    )
    return EXIT_OK


def _cmd_stiffness(args, argv) -> int:
    dataset = _load_data(args.data, args.permissive)
    try:
        summaries_in = dataio.replicate_stiffness_summaries(dataset, FiberDirection.IN_PLANE)
        summaries_cross = dataio.replicate_stiffness_summaries(dataset, FiberDirection.CROSS_PLANE)
    except ValidationError as exc:
        raise _CliError("NoData", str(exc), EXIT_VALIDATION) from None
    report = analysis.anisotropy_report(summaries_in, summaries_cross)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = analysis.write_anisotropy_csv(out_dir / "stiffness_report.csv", report)
    summary = {
        "schema_version": dataio.SCHEMA_VERSION,
        "material": dataset.material,
        "classification": report.classification,
        "n_in_plane": len(summaries_in),
        "n_cross_plane": len(summaries_cross),
        "attributes": {
            comp.attribute: {
                "mean_in_plane_kPa": comp.mean_in_plane,
                "mean_cross_plane_kPa": comp.mean_cross_plane,
                "p": comp.welch.p,
                "significant_05": comp.welch.significant_05,
                "significant_01": comp.welch.significant_01,
            }
            for comp in report.comparisons
        },
    }
    json_path = out_dir / "stiffness_summary.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    inputs = sorted(str(p) for p in Path(args.data).glob("*.csv")) if Path(args.data).is_dir() else [args.data]
    _write_manifest(out_dir, "stiffness", argv, inputs, [csv_path, json_path], {})
    return EXIT_OK


def _cmd_subsets(args, argv) -> int:
    dataset = _load_data(args.data, args.permissive)
    exps = dataset.mean_experiments()
    if not exps:
        raise _CliError("NoData", f"no mean curves in {args.data}", EXIT_VALIDATION)
    config = discovery.TrainingConfig(epochs=args.epochs, seed=args.seed)
    fits = discovery.enumerate_subsets_bestfit(exps, args.max_terms, config)
    payload = {
        "schema_version": dataio.SCHEMA_VERSION,
        "material": dataset.material,
        "max_terms": args.max_terms,
        "ranking": [
            {
                "terms": list(fit.terms),
                "r2_mean": fit.r2_mean,
                "r2": {
                    f"{m.label}:{d.label}": value for (m, d), value in fit.r2.items()
                },
            }
            for fit in fits
        ],
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "subsets.json"
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    inputs = sorted(str(p) for p in Path(args.data).glob("*.csv")) if Path(args.data).is_dir() else [args.data]
    _write_manifest(
        out_dir, "subsets", argv, inputs, [json_path], {"max_terms": args.max_terms, "epochs": args.epochs}
    )
    return EXIT_OK


def _cmd_report(args, argv) -> int:
    dataset = _load_data(args.data, args.permissive)
    model = None
    name = None
    if args.model:
        name, model = _resolve_model(args.model)
    out_dir = Path(args.out)
    written = dataio.export_reports(dataset, model, out_dir)
    outputs = list(written.values())
    if args.svg and model is not None:
        outputs.append(
            _curve_chart(
                out_dir,
                f"curves_{dataset.material}.svg",
                model,
                [e.key for e in dataset.mean_experiments()],
            )
        )
    inputs = sorted(str(p) for p in Path(args.data).glob("*.csv")) if Path(args.data).is_dir() else [args.data]
    _write_manifest(out_dir, "report", argv, inputs, outputs, {"model": name})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matsym",
        description="Discover the effective material symmetry of soft fibrous solids "
        "from tension, compression and shear data.",
    )
    parser.add_argument("--version", action="version", version=f"matsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_out(p):
        p.add_argument("--out", required=True, help="output directory (default: required)")

    p = sub.add_parser("synth", help="generate synthetic test data from a model")
    p.add_argument("--model", required=True, help="built-in model name or model JSON file")
    add_common_out(p)
    p.add_argument("--points", type=int, default=25, help="samples per curve (default: 25)")
    p.add_argument("--noise", type=float, default=0.0,
                   help="relative noise amplitude; >0 also emits 10 replicates per case (default: 0)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: 0)")
    p.add_argument("--case", action="append",
                   help="mode:direction to synthesize (repeatable; default: all six)")
    p.add_argument("--svg", action="store_true", help="also emit an SVG chart")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="discover a sparse model from data")
    p.add_argument("--data", required=True, help="data CSV file or directory")
    add_common_out(p)
    p.add_argument("--alpha", type=float, default=0.05, help="L1 penalty (default: 0.05)")
    p.add_argument("--epochs", type=int, default=20000, help="training epochs (default: 20000)")
    p.add_argument("--seed", type=int, default=0, help="training seed (default: 0)")
    p.add_argument("--threshold", type=float, default=1e-3,
                   help="sparsification threshold in kPa (default: 1e-3)")
    p.add_argument("--permissive", action="store_true", help="accept out-of-protocol strains")
    p.add_argument("--svg", action="store_true", help="also emit an SVG chart")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict a stress curve from a model")
    p.add_argument("--model", required=True, help="built-in model name or model JSON file")
    p.add_argument("--case", required=True, help="mode:direction, e.g. tension:in-plane")
    add_common_out(p)
    p.add_argument("--points", type=int, default=25, help="grid points (default: 25)")
    p.add_argument("--svg", action="store_true", help="also emit an SVG chart")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("stiffness", help="stiffness extraction and Welch comparison")
    p.add_argument("--data", required=True, help="data CSV file or directory (needs replicates)")
    add_common_out(p)
    p.add_argument("--permissive", action="store_true", help="accept out-of-protocol strains")
    p.set_defaults(func=_cmd_stiffness)

    p = sub.add_parser("subsets", help="brute-force best-subset enumeration")
    p.add_argument("--data", required=True, help="data CSV file or directory")
    add_common_out(p)
    p.add_argument("--max-terms", type=int, default=2, help="largest subset size (default: 2)")
    p.add_argument("--epochs", type=int, default=20000, help="refit epochs (default: 20000)")
    p.add_argument("--seed", type=int, default=0, help="refit seed (default: 0)")
    p.add_argument("--permissive", action="store_true", help="accept out-of-protocol strains")
    p.set_defaults(func=_cmd_subsets)

    p = sub.add_parser("report", help="export the full report bundle for a dataset")
    p.add_argument("--data", required=True, help="data CSV file or directory")
    add_common_out(p)
    p.add_argument("--model", help="optional model for decomposition/fit reports")
    p.add_argument("--permissive", action="store_true", help="accept out-of-protocol strains")
    p.add_argument("--svg", action="store_true", help="also emit an SVG chart")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except _CliError as exc:
        print(f"{exc.error_class}: {exc}", file=sys.stderr)
        return exc.code
    except ValidationError as exc:
        print(f"Validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"Validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingError as exc:
        print(f"Numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FloatingPointError as exc:
        print(f"Numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"IO: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
