"""Dataset model, CSV ingestion, synthetic data and report export.

The on-disk dataset schema is a UTF-8 comma-separated file with header

    material,mode,direction,replicate,loading,stress_kPa

preceded by an optional ``# schema_version=1`` comment line.  The
``loading`` column stores the stretch lambda for tension/compression and
the shear strain gamma for shear; the ``replicate`` column is either an
integer id or ``mean`` for the averaged curve that model discovery
trains on.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import analysis
from .energy import ModelWeights, save_model
from .errors import DomainError, ValidationError
from .kinematics import FiberDirection, LoadingMode
from .stress import LoadingCase, predict_curve, reference_loading, write_curve_csv

__all__ = [
    "PROTOCOL_STRETCH_MIN",
    "PROTOCOL_STRETCH_MAX",
    "PROTOCOL_SHEAR_MAX",
    "CSV_HEADER",
    "SCHEMA_VERSION",
    "Experiment",
    "ExperimentSet",
    "NoiseSpec",
    "full_protocol",
    "load_csv",
    "write_csv",
    "synthesize",
    "replicate_stiffness_summaries",
    "export_reports",
]

# Test protocol bounds: 10% tension, 10% compression, 10% shear.
PROTOCOL_STRETCH_MIN = 0.9
PROTOCOL_STRETCH_MAX = 1.1
PROTOCOL_SHEAR_MAX = 0.1

CSV_HEADER = ["material", "mode", "direction", "replicate", "loading", "stress_kPa"]
SCHEMA_VERSION = 1

#: Default tolerance on the stress of the first (reference) sample, kPa.
REFERENCE_STRESS_TOL = 1e-6

#: Canonical condition order used for deterministic iteration and export.
CONDITION_ORDER = tuple(
    (mode, direction)
    for mode in (LoadingMode.TENSION, LoadingMode.COMPRESSION, LoadingMode.SHEAR)
    for direction in (FiberDirection.IN_PLANE, FiberDirection.CROSS_PLANE)
)


def _protocol_limit(mode: LoadingMode) -> float:
    if mode is LoadingMode.TENSION:
        return PROTOCOL_STRETCH_MAX
    if mode is LoadingMode.COMPRESSION:
        return PROTOCOL_STRETCH_MIN
    return PROTOCOL_SHEAR_MAX


def full_protocol() -> list[LoadingCase]:
    """The six standard loading cases at their protocol limits."""
    return [
        LoadingCase(mode, direction, _protocol_limit(mode))
        for mode, direction in CONDITION_ORDER
    ]


def _in_protocol_range(mode: LoadingMode, value: float) -> bool:
    if mode.is_uniaxial:
        return PROTOCOL_STRETCH_MIN <= value <= PROTOCOL_STRETCH_MAX
    return 0.0 <= value <= PROTOCOL_SHEAR_MAX


@dataclass(frozen=True)
class Experiment:
    """One loading mode + direction with ordered (loading, stress) samples.

    ``replicate`` is None for a mean curve, otherwise the replicate id.
    Loading starts at the reference state (lambda = 1 / gamma = 0, stress
    ~ 0) and is strictly monotone; strains stay within the protocol
    bounds unless ``permissive`` is set.
    """

    mode: LoadingMode
    direction: FiberDirection
    loading: np.ndarray
    stress: np.ndarray
    replicate: int | None = None
    material: str = "unknown"
    permissive: bool = False
    reference_tol: float = REFERENCE_STRESS_TOL

    def __post_init__(self):
        object.__setattr__(self, "mode", LoadingMode.from_label(self.mode))
        object.__setattr__(self, "direction", FiberDirection.from_label(self.direction))
        loading = np.array(self.loading, dtype=float)
        stress = np.array(self.stress, dtype=float)
        if loading.ndim != 1 or loading.shape != stress.shape:
            raise ValidationError("loading and stress must be equal-length 1-d arrays")
        if loading.size < 2:
            raise ValidationError("an experiment needs at least 2 samples")
        if not (np.all(np.isfinite(loading)) and np.all(np.isfinite(stress))):
            raise ValidationError("loading and stress must be finite")
        ref = reference_loading(self.mode)
        if abs(loading[0] - ref) > 1e-12:
            raise ValidationError(
                f"{self.mode.label} data must start at the reference state "
                f"(loading {ref}), got {loading[0]!r}"
            )
        steps = np.diff(loading)
        if self.mode is LoadingMode.COMPRESSION:
            if not np.all(steps < 0.0):
                raise ValidationError("compression loading must be strictly decreasing")
        else:
            if not np.all(steps > 0.0):
                raise ValidationError(f"{self.mode.label} loading must be strictly increasing")
        if not self.permissive:
            bad = [v for v in loading if not _in_protocol_range(self.mode, float(v))]
            if bad:
                raise ValidationError(
                    f"loading value {bad[0]!r} outside the protocol range for "
                    f"{self.mode.label} (pass permissive=True to accept)"
                )
        if abs(stress[0]) > self.reference_tol:
            raise ValidationError(
                f"stress at the reference state must be ~0 "
                f"(|{stress[0]!r}| > {self.reference_tol})"
            )
        loading.flags.writeable = False
        stress.flags.writeable = False
        object.__setattr__(self, "loading", loading)
        object.__setattr__(self, "stress", stress)

    @property
    def key(self) -> tuple[LoadingMode, FiberDirection]:
        return (self.mode, self.direction)

    @property
    def n_samples(self) -> int:
        return int(self.loading.size)

    def strain_stress(self) -> tuple[np.ndarray, np.ndarray]:
        """Strain-stress pairs: eps = lambda - 1 for uniaxial, gamma for shear."""
        if self.mode.is_uniaxial:
            return self.loading - 1.0, self.stress
        return self.loading, self.stress


@dataclass
class ExperimentSet:
    """Mean curves and optional replicate lists per (mode, direction)."""

    material: str
    curves: dict = field(default_factory=dict)
    replicates: dict = field(default_factory=dict)

    def add(self, experiment: Experiment) -> None:
        if experiment.material != self.material:
            raise ValidationError(
                f"experiment material {experiment.material!r} does not match "
                f"set material {self.material!r}"
            )
        key = experiment.key
        if experiment.replicate is None:
            if key in self.curves:
                raise ValidationError(
                    f"duplicate mean curve for {key[0].label} / {key[1].label}"
                )
            self.curves[key] = experiment
        else:
            self.replicates.setdefault(key, []).append(experiment)

    def mean_experiments(self) -> list[Experiment]:
        """Mean curves in canonical condition order."""
        return [self.curves[key] for key in CONDITION_ORDER if key in self.curves]

    def replicate_experiments(self, key) -> list[Experiment]:
        return sorted(self.replicates.get(key, []), key=lambda e: e.replicate)

    @property
    def n_conditions(self) -> int:
        return len(self.curves)


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative Gaussian stress noise: relative amplitude plus seed."""

    amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude >= 0.0:
            raise DomainError(f"noise amplitude must be >= 0, got {self.amplitude}")


def _parse_schema_comment(line: str) -> int | None:
    body = line.lstrip("#").strip()
    if body.startswith("schema_version"):
        _, _, value = body.partition("=")
        try:
            return int(value.strip())
        except ValueError:
            raise ValidationError(f"malformed schema_version comment: {line!r}") from None
    return None


def load_csv(path, permissive: bool = False, reference_tol: float = REFERENCE_STRESS_TOL) -> ExperimentSet:
    """Parse and validate a dataset CSV into an ExperimentSet.

    Errors carry the 1-based file line number of the offending row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        lines = fh.read().splitlines()

    line_no = 0
    for raw in lines:
        line_no += 1
        if raw.startswith("#"):
            version = _parse_schema_comment(raw)
            if version is not None and version != SCHEMA_VERSION:
                raise ValidationError(
                    f"{path}: unsupported schema_version {version} (expected {SCHEMA_VERSION})"
                )
            continue
        break
    header_line = line_no
    if header_line > len(lines):
        raise ValidationError(f"{path}: no samples (missing header)")
    header = next(csv.reader([lines[header_line - 1]]))
    if [h.strip() for h in header] != CSV_HEADER:
        raise ValidationError(
            f"{path}: malformed header {header!r}, expected {','.join(CSV_HEADER)}"
        )

    groups: dict = {}
    order: list = []
    seen_keys = set()
    material = None
    for offset, row in enumerate(csv.reader(lines[header_line:]), start=header_line + 1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(CSV_HEADER):
            raise ValidationError(f"{path}:{offset}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        mat, mode_s, dir_s, rep_s, loading_s, stress_s = (f.strip() for f in row)
        try:
            mode = LoadingMode.from_label(mode_s)
            direction = FiberDirection.from_label(dir_s)
        except DomainError as exc:
            raise ValidationError(f"{path}:{offset}: {exc}") from None
        if rep_s.lower() == "mean":
            replicate = None
        else:
            try:
                replicate = int(rep_s)
            except ValueError:
                raise ValidationError(
                    f"{path}:{offset}: replicate must be an integer or 'mean', got {rep_s!r}"
                ) from None
            if replicate < 1:
                raise ValidationError(f"{path}:{offset}: replicate ids start at 1, got {replicate}")
        try:
            loading = float(loading_s)
            stress = float(stress_s)
        except ValueError:
            raise ValidationError(
                f"{path}:{offset}: non-numeric loading/stress {loading_s!r}, {stress_s!r}"
            ) from None
        if not permissive and not _in_protocol_range(mode, loading):
            raise ValidationError(
                f"{path}:{offset}: loading {loading!r} outside the protocol range "
                f"for {mode.label} (use the permissive flag to accept)"
            )
        if material is None:
            material = mat
        elif mat != material:
            raise ValidationError(
                f"{path}:{offset}: multiple materials in one file ({material!r} and {mat!r})"
            )
        dup_key = (mode, direction, replicate, loading)
        if dup_key in seen_keys:
            raise ValidationError(
                f"{path}:{offset}: duplicate sample for {mode.label}/{direction.label}/"
                f"{rep_s} at loading {loading!r}"
            )
        seen_keys.add(dup_key)
        group = (mode, direction, replicate)
        if group not in groups:
            groups[group] = ([], [])
            order.append(group)
        groups[group][0].append(loading)
        groups[group][1].append(stress)

    if material is None:
        raise ValidationError(f"{path}: no samples")

    out = ExperimentSet(material=material)
    for group in order:
        mode, direction, replicate = group
        loading, stress = groups[group]
        try:
            exp = Experiment(
                mode=mode,
                direction=direction,
                loading=np.array(loading),
                stress=np.array(stress),
                replicate=replicate,
                material=material,
                permissive=permissive,
                reference_tol=reference_tol,
            )
        except ValidationError as exc:
            rep = "mean" if replicate is None else replicate
            raise ValidationError(
                f"{path}: invalid {mode.label}/{direction.label}/{rep} series: {exc}"
            ) from None
        out.add(exp)
    return out


def _experiment_rows(exp: Experiment):
    rep = "mean" if exp.replicate is None else str(exp.replicate)
    for x, s in zip(exp.loading, exp.stress):
        yield [exp.material, exp.mode.label, exp.direction.label, rep, repr(float(x)), repr(float(s))]


def write_csv(path, experiment_set: ExperimentSet) -> Path:
    """Write a dataset CSV (round-trips bit-exactly through load_csv)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for key in CONDITION_ORDER:
            if key in experiment_set.curves:
                writer.writerows(_experiment_rows(experiment_set.curves[key]))
            for exp in experiment_set.replicate_experiments(key):
                writer.writerows(_experiment_rows(exp))
    return path


def synthesize(
    model: ModelWeights,
    protocol: Sequence[LoadingCase] | None = None,
    n_points: int = 25,
    noise: NoiseSpec = NoiseSpec(),
    replicates: int = 0,
    material: str = "synthetic",
) -> ExperimentSet:
    """Virtual laboratory: sample the model on uniform grids per case.

    Stress noise is multiplicative Gaussian with the given relative
    amplitude; amplitude 0 reproduces the closed-form prediction exactly.
    The random stream is consumed in canonical case order (mean curve
    first, then replicates), so a fixed seed fixes the dataset.
    """
    if protocol is None:
        protocol = full_protocol()
    cases = [LoadingCase(*case).validated() for case in protocol]
    rng = np.random.default_rng(noise.seed)
    out = ExperimentSet(material=material)

    def noisy(stress: np.ndarray) -> np.ndarray:
        draw = rng.standard_normal(stress.size)
        return stress * (1.0 + noise.amplitude * draw)

    for case in cases:
        samples = predict_curve(model, case, n_points)
        loading = np.array([s.loading for s in samples])
        stress = np.array([s.stress for s in samples])
        out.add(
            Experiment(
                mode=case.mode,
                direction=case.direction,
                loading=loading,
                stress=noisy(stress),
                replicate=None,
                material=material,
            )
        )
        for rep in range(1, int(replicates) + 1):
            out.add(
                Experiment(
                    mode=case.mode,
                    direction=case.direction,
                    loading=loading,
                    stress=noisy(stress),
                    replicate=rep,
                    material=material,
                )
            )
    return out


def replicate_stiffness_summaries(
    experiment_set: ExperimentSet, direction
) -> list[analysis.StiffnessSummary]:
    """Per-replicate stiffness summaries for one direction.

    Uses replicate ids present in all three loading modes of that
    direction; compression strains are handled by magnitude inside the
    regression.
    """
    direction = FiberDirection.from_label(direction)
    by_mode = {}
    for mode in LoadingMode:
        reps = experiment_set.replicate_experiments((mode, direction))
        by_mode[mode] = {exp.replicate: exp for exp in reps}
    common = sorted(
        set(by_mode[LoadingMode.TENSION])
        & set(by_mode[LoadingMode.COMPRESSION])
        & set(by_mode[LoadingMode.SHEAR])
    )
    if not common:
        raise ValidationError(
            f"no replicate present in all three modes for {direction.label}"
        )
    summaries = []
    for rep in common:
        summaries.append(
            analysis.stiffness_summary(
                tension=by_mode[LoadingMode.TENSION][rep].strain_stress(),
                compression=by_mode[LoadingMode.COMPRESSION][rep].strain_stress(),
                shear=by_mode[LoadingMode.SHEAR][rep].strain_stress(),
                direction=direction,
            )
        )
    return summaries


def _fit_report_payload(model, experiment_set: ExperimentSet) -> dict:
    from . import discovery  # deferred: discovery imports this module

    if isinstance(model, discovery.DiscoveredModel):
        return discovery.fit_report_payload(model)
    exps = experiment_set.mean_experiments()
    r2 = {exp.key: discovery.r_squared(model, exp) for exp in exps}
    payload = {
        "schema_version": SCHEMA_VERSION,
        "active_terms": list(model.active_terms()),
        "r2": {
            f"{mode.label}:{direction.label}": {
                "raw": value,
                "display": max(value, 0.0),
            }
            for (mode, direction), value in r2.items()
        },
        "r2_mean": sum(r2.values()) / len(r2) if r2 else None,
    }
    return payload


def export_reports(experiment_set: ExperimentSet, model=None, out_dir=".") -> dict[str, Path]:
    """Write the standard report bundle; returns {logical name: path}.

    Always: the dataset CSV.  With a model (ModelWeights or
    DiscoveredModel): per-condition stress-decomposition CSVs, the model
    JSON and a fit-report JSON.  When replicates exist for both
    directions: the stiffness/Welch report CSV.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    data_path = out_dir / f"data_{experiment_set.material}.csv"
    written["data"] = write_csv(data_path, experiment_set)

    if model is not None:
        weights = getattr(model, "weights", model)
        if not isinstance(weights, ModelWeights):
            raise DomainError("model must be ModelWeights or DiscoveredModel")
        for exp in experiment_set.mean_experiments():
            name = f"decomposition_{exp.mode.label}_{exp.direction.label}.csv"
            written[f"decomposition:{exp.mode.label}:{exp.direction.label}"] = write_curve_csv(
                out_dir / name, weights, exp.mode, exp.direction, exp.loading
            )
        written["model"] = save_model(
            out_dir / f"model_{experiment_set.material}.json",
            weights,
            name=experiment_set.material,
        )
        report = _fit_report_payload(model, experiment_set)
        report_path = out_dir / "fit_report.json"
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        written["fit_report"] = report_path

    try:
        summaries_in = replicate_stiffness_summaries(experiment_set, FiberDirection.IN_PLANE)
        summaries_cross = replicate_stiffness_summaries(experiment_set, FiberDirection.CROSS_PLANE)
    except ValidationError:
        summaries_in = summaries_cross = None
    if summaries_in and summaries_cross and len(summaries_in) >= 2 and len(summaries_cross) >= 2:
        report = analysis.anisotropy_report(summaries_in, summaries_cross)
        written["stiffness_report"] = analysis.write_anisotropy_csv(
            out_dir / "stiffness_report.csv", report
        )
    return written
