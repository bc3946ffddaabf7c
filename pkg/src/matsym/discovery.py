"""Sparse model discovery: L1-regularized training of the twelve-term energy.

The loss pools every sample of every provided experiment,

    L = (1/n_data) sum_i ||P(F_i) - P_hat_i||^2 + alpha ||w||_1,

with the L1 penalty on the outer (kilopascal) weights only and a
regularization parameter of alpha = 0.05 by default.  Training is
full-batch Adam with projection onto the non-negative orthant,
deterministic given the configuration; outer weights below the
sparsification threshold are zeroed afterwards and the surviving terms
form the discovered model.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__ as _pkg_version
from ._kernels import active_backend, backend_name
from .dataio import Experiment, ExperimentSet
from .energy import N_TERMS, ModelWeights
from .errors import DomainError, TrainingError
from .kinematics import invariants_shear, invariants_uniaxial
from .stress import stress, stress_coefficients

__all__ = [
    "TrainingConfig",
    "DiscoveredModel",
    "SubsetFit",
    "loss",
    "loss_gradient",
    "train",
    "r_squared",
    "enumerate_subsets_bestfit",
    "fit_report_payload",
    "write_fit_report",
]

#: Largest number of subset refits enumerate_subsets_bestfit will attempt.
SUBSET_LIMIT = 1024


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters of a discovery run.

    ``seed`` fixes noise draws in surrounding tooling and is recorded in
    the provenance; initialization itself is deterministic (all weights
    at ``init_scale``).
    """

    alpha: float = 0.05
    epochs: int = 20000
    learning_rate: float = 1e-3
    threshold: float = 1e-3
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if int(self.epochs) < 1:
            raise DomainError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0.0:
            raise DomainError(f"learning rate must be positive, got {self.learning_rate}")
        if not self.threshold >= 0.0:
            raise DomainError(f"threshold must be >= 0, got {self.threshold}")
        if not self.init_scale > 0.0:
            raise DomainError(f"initialization scale must be positive, got {self.init_scale}")


@dataclass(frozen=True)
class DiscoveredModel:
    """Sparsified weights plus goodness of fit and provenance."""

    weights: ModelWeights
    r2: dict
    r2_mean: float
    active_terms: tuple[int, ...]
    provenance: dict
    loss_trace: tuple[float, ...]


@dataclass(frozen=True)
class SubsetFit:
    """One brute-force refit restricted to a term subset."""

    terms: tuple[int, ...]
    weights: ModelWeights
    r2: dict
    r2_mean: float


def _as_experiments(experiments) -> list[Experiment]:
    if isinstance(experiments, ExperimentSet):
        exps = experiments.mean_experiments()
    elif isinstance(experiments, Experiment):
        exps = [experiments]
    else:
        exps = list(experiments)
    if not exps:
        raise DomainError("at least one experiment is required")
    for exp in exps:
        if not isinstance(exp, Experiment):
            raise DomainError(f"expected Experiment, got {type(exp).__name__}")
    return exps


def experiment_design(experiments) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pack experiments into kernel arrays (features, coefficients, stresses)."""
    exps = _as_experiments(experiments)
    feats = []
    coefs = []
    ys = []
    for exp in exps:
        for x, s in zip(exp.loading, exp.stress):
            x = float(x)
            if exp.mode.is_uniaxial:
                inv = invariants_uniaxial(x, exp.direction)
            else:
                inv = invariants_shear(x, exp.direction)
            feats.append(
                [inv.i1 - 3.0, inv.i2 - 3.0, max(inv.i4 - 1.0, 0.0), max(inv.i5 - 1.0, 0.0)]
            )
            coefs.append(stress_coefficients(exp.mode, exp.direction, x))
            ys.append(float(s))
    return (
        np.ascontiguousarray(feats, dtype=float),
        np.ascontiguousarray(coefs, dtype=float),
        np.ascontiguousarray(ys, dtype=float),
    )


def loss(model: ModelWeights, experiments, alpha: float) -> float:
    """Mean squared stress error over all pooled samples plus alpha*||w||_1."""
    if not alpha >= 0.0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    feat, coef, y = experiment_design(experiments)
    value, _, _ = active_backend().loss_and_gradient(
        feat, coef, y, np.ones(N_TERMS), model.outer, model.inner, float(alpha)
    )
    return float(value)


def loss_gradient(model: ModelWeights, experiments, alpha: float) -> np.ndarray:
    """Gradient of the loss as a 24-vector [d/dw_1..12, d/dw*_1..12].

    Analytic chain rule through the closed-form stresses; the L1
    subgradient at w_k = 0 is taken as 0.
    """
    if not alpha >= 0.0:
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    feat, coef, y = experiment_design(experiments)
    _, dw, dws = active_backend().loss_and_gradient(
        feat, coef, y, np.ones(N_TERMS), model.outer, model.inner, float(alpha)
    )
    return np.concatenate([dw, dws])


def r_squared(model: ModelWeights, experiment: Experiment) -> float:
    """Coefficient of determination of the model on one experiment.

    1 - SS_res/SS_tot with SS_tot about the mean measured stress; may be
    negative.  Clamp at 0 for display only, keeping the raw value.
    """
    if not isinstance(experiment, Experiment):
        raise DomainError("r_squared expects a single Experiment")
    measured = experiment.stress
    if measured.size < 2:
        raise DomainError("r_squared needs at least 2 samples")
    ss_tot = float(np.sum((measured - measured.mean()) ** 2))
    if ss_tot == 0.0:
        raise DomainError("r_squared is undefined for zero stress variance")
    predicted = np.array(
        [stress(model, experiment.mode, experiment.direction, float(x)) for x in experiment.loading]
    )
    ss_res = float(np.sum((predicted - measured) ** 2))
    return 1.0 - ss_res / ss_tot


def _trace_stride(epochs: int) -> int:
    # keep the recorded trace at <= 1000 points including the final loss
    return max(1, math.ceil(epochs / 999))


def _data_fingerprint(feat, coef, y) -> str:
    digest = hashlib.sha256()
    for arr in (feat, coef, y):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


def _fit(feat, coef, y, mask, alpha, config: TrainingConfig):
    kern = active_backend()
    w0 = np.full(N_TERMS, config.init_scale)
    ws0 = np.full(N_TERMS, config.init_scale)
    w, ws, trace = kern.train_adam(
        feat,
        coef,
        y,
        np.asarray(mask, dtype=float),
        w0,
        ws0,
        float(alpha),
        float(config.learning_rate),
        int(config.epochs),
        _trace_stride(int(config.epochs)),
    )
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(ws)) and np.isfinite(trace[-1])):
        n_finite = int(np.sum(np.isfinite(trace)))
        raise TrainingError(
            f"training diverged: non-finite loss after {n_finite} recorded steps "
            f"(last finite loss {trace[n_finite - 1] if n_finite else float('nan')!r})"
        )
    return w, ws, trace


def train(experiments, config: TrainingConfig = TrainingConfig(), eval_experiments=None) -> DiscoveredModel:
    """Discover a sparse model from the given experiments.

    Deterministic given data and configuration.  R2 is reported per
    experiment of ``eval_experiments`` (default: the training
    experiments) plus their arithmetic mean.
    """
    exps = _as_experiments(experiments)
    feat, coef, y = experiment_design(exps)
    w, ws, trace = _fit(feat, coef, y, np.ones(N_TERMS), config.alpha, config)

    keep = w > config.threshold
    weights = ModelWeights(np.where(keep, w, 0.0), np.where(keep, ws, 0.0))

    eval_exps = exps if eval_experiments is None else _as_experiments(eval_experiments)
    r2 = {exp.key: r_squared(weights, exp) for exp in eval_exps}
    r2_mean = float(np.mean(list(r2.values())))

    provenance = {
        "config": asdict(config),
        "experiments": [f"{m.label}:{d.label}" for m, d in (e.key for e in exps)],
        "n_data": int(y.size),
        "data_sha256": _data_fingerprint(feat, coef, y),
        "material": exps[0].material,
        "package_version": _pkg_version,
        "kernel_backend": backend_name(),
    }
    return DiscoveredModel(
        weights=weights,
        r2=r2,
        r2_mean=r2_mean,
        active_terms=weights.active_terms(),
        provenance=provenance,
        loss_trace=tuple(float(v) for v in trace),
    )


def enumerate_subsets_bestfit(
    experiments,
    max_terms: int,
    config: TrainingConfig = TrainingConfig(),
    limit: int = SUBSET_LIMIT,
) -> list[SubsetFit]:
    """Brute-force refits (alpha = 0) on every term subset up to max_terms.

    Returns fits ranked by mean R2 (ties broken toward fewer terms); the
    model-selection oracle against which L1 discovery is compared.
    """
    max_terms = int(max_terms)
    if not 0 <= max_terms <= N_TERMS:
        raise DomainError(f"max_terms must be in 0..{N_TERMS}, got {max_terms}")
    subsets = [
        subset
        for size in range(max_terms + 1)
        for subset in itertools.combinations(range(1, N_TERMS + 1), size)
    ]
    if len(subsets) > limit:
        raise DomainError(
            f"combinatorial limit exceeded: {len(subsets)} subsets > limit {limit}"
        )
    exps = _as_experiments(experiments)
    feat, coef, y = experiment_design(exps)

    fits = []
    for subset in subsets:
        mask = np.zeros(N_TERMS)
        for k in subset:
            mask[k - 1] = 1.0
        if subset:
            w, ws, _ = _fit(feat, coef, y, mask, 0.0, config)
        else:
            w = np.zeros(N_TERMS)
            ws = np.zeros(N_TERMS)
        weights = ModelWeights(w, ws)
        r2 = {exp.key: r_squared(weights, exp) for exp in exps}
        fits.append(
            SubsetFit(
                terms=subset,
                weights=weights,
                r2=r2,
                r2_mean=float(np.mean(list(r2.values()))),
            )
        )
    fits.sort(key=lambda f: (-f.r2_mean, len(f.terms), f.terms))
    return fits


def fit_report_payload(model: DiscoveredModel) -> dict:
    """JSON-ready fit report: R2 per experiment, active terms, loss trace."""
    return {
        "schema_version": 1,
        "active_terms": list(model.active_terms),
        "r2": {
            f"{mode.label}:{direction.label}": {"raw": value, "display": max(value, 0.0)}
            for (mode, direction), value in model.r2.items()
        },
        "r2_mean": model.r2_mean,
        "provenance": model.provenance,
        "loss_trace": list(model.loss_trace),
    }


def write_fit_report(path, model: DiscoveredModel) -> Path:
    path = Path(path)
    path.write_text(json.dumps(fit_report_payload(model), indent=2, sort_keys=True) + "\n")
    return path
