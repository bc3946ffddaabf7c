"""Closed-form Piola stresses for the two test geometries.

With the incompressibility pressure eliminated through the traction-free
lateral boundary, the measurable stress components are linear in the
energy gradient:

uniaxial, in-plane fiber
    P11 = 2 [dpsi/dI1 + (1/lam) dpsi/dI2] [lam - 1/lam^2]
          + 2 lam dpsi/dI4 + 4 lam^3 dpsi/dI5
uniaxial, cross-plane fiber
    P11 = 2 [dpsi/dI1 + (1/lam) dpsi/dI2] [lam - 1/lam^2]
    (reduces exactly to the isotropic form, no fiber contribution)
shear, in-plane fiber
    P12 = 2 gamma [dpsi/dI1 + dpsi/dI2 + dpsi/dI5]
shear, cross-plane fiber
    P12 = 2 gamma [dpsi/dI1 + dpsi/dI2 + dpsi/dI4]
          + [6 gamma + 4 gamma^3] dpsi/dI5

Compression shares the uniaxial expression (lam < 1); fiber terms
self-deactivate through the Macaulay brackets of the energy.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .energy import N_TERMS, TERM_COLUMN, TERM_KIND, ModelWeights, energy_gradient
from .errors import DomainError
from .kinematics import (
    FiberDirection,
    InvariantSet,
    LoadingMode,
    invariants_shear,
    invariants_uniaxial,
)

__all__ = [
    "LoadingCase",
    "StressSample",
    "stress_coefficients",
    "uniaxial_stress",
    "shear_stress",
    "pressure",
    "stress",
    "stress_decomposition",
    "predict_curve",
    "reference_loading",
    "curve_csv_header",
    "write_curve_csv",
]


class LoadingCase(NamedTuple):
    """One loading condition: mode, fiber direction and target loading value."""

    mode: LoadingMode
    direction: FiberDirection
    loading: float

    def validated(self) -> "LoadingCase":
        mode = LoadingMode.from_label(self.mode)
        direction = FiberDirection.from_label(self.direction)
        value = float(self.loading)
        if not math.isfinite(value):
            raise DomainError(f"loading must be finite, got {value!r}")
        if mode is LoadingMode.TENSION and value < 1.0:
            raise DomainError(f"tension requires stretch >= 1, got {value}")
        if mode is LoadingMode.COMPRESSION and not 0.0 < value <= 1.0:
            raise DomainError(f"compression requires 0 < stretch <= 1, got {value}")
        if mode is LoadingMode.SHEAR and value < 0.0:
            raise DomainError(f"shear requires strain >= 0, got {value}")
        return LoadingCase(mode, direction, value)


class StressSample(NamedTuple):
    """A (loading, stress) pair; loading is lambda or gamma, stress in kPa."""

    loading: float
    stress: float


def reference_loading(mode) -> float:
    """Loading value of the undeformed reference state (1 uniaxial, 0 shear)."""
    return 1.0 if LoadingMode.from_label(mode).is_uniaxial else 0.0


def _invariants(mode: LoadingMode, direction: FiberDirection, loading: float) -> InvariantSet:
    if mode.is_uniaxial:
        return invariants_uniaxial(loading, direction)
    return invariants_shear(loading, direction)


def stress_coefficients(mode, direction, loading: float) -> np.ndarray:
    """Coefficients c such that the measured stress is c . grad(psi).

    The four entries multiply (dpsi/dI1, dpsi/dI2, dpsi/dI4, dpsi/dI5) in
    the closed forms above; they encode the geometry and the eliminated
    pressure.
    """
    mode = LoadingMode.from_label(mode)
    direction = FiberDirection.from_label(direction)
    loading = float(loading)
    if mode.is_uniaxial:
        if loading <= 0.0:
            raise DomainError(f"stretch must be positive, got {loading}")
        lam = loading
        iso = 2.0 * (lam - 1.0 / (lam * lam))
        if direction is FiberDirection.IN_PLANE:
            return np.array([iso, iso / lam, 2.0 * lam, 4.0 * lam ** 3])
        return np.array([iso, iso / lam, 0.0, 0.0])
    gamma = loading
    if gamma < 0.0:
        raise DomainError(f"shear strain must be non-negative, got {gamma}")
    dg = 2.0 * gamma
    if direction is FiberDirection.IN_PLANE:
        return np.array([dg, dg, 0.0, dg])
    return np.array([dg, dg, dg, 6.0 * gamma + 4.0 * gamma ** 3])


def uniaxial_stress(model: ModelWeights, stretch: float, direction) -> float:
    """Nominal stress P11 in kPa for uniaxial tension/compression."""
    direction = FiberDirection.from_label(direction)
    coef = stress_coefficients(LoadingMode.TENSION, direction, stretch)
    grad = energy_gradient(model, invariants_uniaxial(stretch, direction))
    return float(coef @ np.asarray(grad))


def shear_stress(model: ModelWeights, gamma: float, direction) -> float:
    """Nominal shear stress P12 in kPa for simple shear."""
    direction = FiberDirection.from_label(direction)
    coef = stress_coefficients(LoadingMode.SHEAR, direction, gamma)
    grad = energy_gradient(model, invariants_shear(gamma, direction))
    return float(coef @ np.asarray(grad))


def pressure(model: ModelWeights, stretch: float) -> float:
    """Lagrange-multiplier pressure of the uniaxial closed form, kPa.

    p = (2/lam) dpsi/dI1 + [2 lam - 2/lam^2] dpsi/dI2, from the zero
    normal stress condition P22 = P33 = 0.  Exposed for verification of
    the pressure-eliminated stresses.
    """
    stretch = float(stretch)
    if stretch <= 0.0:
        raise DomainError(f"stretch must be positive, got {stretch}")
    grad = energy_gradient(model, invariants_uniaxial(stretch, FiberDirection.IN_PLANE))
    lam = stretch
    return (2.0 / lam) * grad.di1 + (2.0 * lam - 2.0 / (lam * lam)) * grad.di2


def stress(model: ModelWeights, mode, direction, loading: float) -> float:
    """Measured stress component (P11 or P12 by mode) in kPa."""
    mode = LoadingMode.from_label(mode)
    if mode.is_uniaxial:
        return uniaxial_stress(model, loading, direction)
    return shear_stress(model, loading, direction)


def stress_decomposition(model: ModelWeights, mode, direction, loading: float) -> np.ndarray:
    """Per-term stress contributions (12,), summing to the total stress."""
    mode = LoadingMode.from_label(mode)
    direction = FiberDirection.from_label(direction)
    coef = stress_coefficients(mode, direction, loading)
    inv = _invariants(mode, direction, loading)
    feats = (
        inv.i1 - 3.0,
        inv.i2 - 3.0,
        max(inv.i4 - 1.0, 0.0),
        max(inv.i5 - 1.0, 0.0),
    )
    parts = np.zeros(N_TERMS)
    for idx in range(N_TERMS):
        w = float(model.outer[idx])
        if w == 0.0:
            continue
        ws = float(model.inner[idx])
        col = TERM_COLUMN[idx]
        x = feats[col]
        kind = TERM_KIND[idx]
        if kind == 0:
            g = ws
        elif kind == 1:
            g = ws * math.exp(ws * x)
        elif kind == 2:
            g = 2.0 * ws * x
        else:
            g = 2.0 * ws * x * math.exp(ws * x * x)
        parts[idx] = w * coef[col] * g
    return parts


def predict_curve(model: ModelWeights, case: LoadingCase, n_points: int) -> list[StressSample]:
    """Stress samples on a uniform, inclusive grid from the reference state.

    The grid runs from lambda = 1 (or gamma = 0) to the case's loading
    value; compression grids are decreasing.
    """
    case = LoadingCase(*case).validated()
    n_points = int(n_points)
    if n_points < 2:
        raise DomainError(f"a curve needs at least 2 points, got {n_points}")
    start = reference_loading(case.mode)
    grid = np.linspace(start, case.loading, n_points)
    return [
        StressSample(float(x), stress(model, case.mode, case.direction, float(x)))
        for x in grid
    ]


def curve_csv_header() -> list[str]:
    """Header of the per-term stress decomposition CSV."""
    return ["loading", "stress_kPa", "mode", "direction"] + [
        f"term_{k:02d}" for k in range(1, N_TERMS + 1)
    ]


def write_curve_csv(
    path,
    model: ModelWeights,
    mode,
    direction,
    loadings: Sequence[float] | Iterable[float],
) -> Path:
    """Write a stress curve with per-term decomposition columns to CSV."""
    mode = LoadingMode.from_label(mode)
    direction = FiberDirection.from_label(direction)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(curve_csv_header())
        for x in loadings:
            parts = stress_decomposition(model, mode, direction, float(x))
            writer.writerow(
                [repr(float(x)), repr(float(parts.sum())), mode.label, direction.label]
                + [repr(float(p)) for p in parts]
            )
    return path
