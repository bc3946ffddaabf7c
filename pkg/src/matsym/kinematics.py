"""Finite-deformation kinematics for the two test geometries.

Uniaxial tension/compression and simple shear are described by their
deformation gradients F (incompressible, det F = 1).  The response is
measured through four scalar invariants of C = F^t F,

- ``I1 = F : F``                      total stretch,
- ``I2 = [I1^2 - C : C] / 2``         shear-like distortion,
- ``I4 = C : N``                      fiber stretch squared,
- ``I5 = C^2 : N``                    nonlinear fiber stretch,

with N = n0 (x) n0 the structural tensor of the fiber direction n0.
The third invariant is identically one and is not carried around.

Each invariant has a closed form per geometry and fiber orientation; the
general matrix evaluation (:func:`invariants_from_gradient`) is shipped as
well and anchors the closed forms.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "LoadingMode",
    "FiberDirection",
    "InvariantSet",
    "InvariantDerivatives",
    "uniaxial_gradient",
    "shear_gradient",
    "invariants_from_gradient",
    "invariants_uniaxial",
    "invariants_shear",
    "invariant_derivatives",
]

#: |det F - 1| accepted by the matrix-oracle evaluation.
DET_TOL = 1e-9


class LoadingMode(enum.Enum):
    """Loading mode of a mechanical test."""

    TENSION = "tension"
    COMPRESSION = "compression"
    SHEAR = "shear"

    @property
    def is_uniaxial(self) -> bool:
        return self is not LoadingMode.SHEAR

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def from_label(cls, label) -> "LoadingMode":
        if isinstance(label, cls):
            return label
        try:
            return cls(str(label).strip().lower())
        except ValueError:
            raise DomainError(f"unknown loading mode {label!r}") from None


class FiberDirection(enum.Enum):
    """Orientation of the structural direction relative to the loading axis.

    IN_PLANE aligns the fiber with the loading axis e1 (uniaxial) and with
    the shear plane (simple shear, I4 = 1).  CROSS_PLANE is the orthogonal
    configuration e2, giving I4 = 1/lambda in uniaxial tests and
    I4 = 1 + gamma^2 in shear.
    """

    IN_PLANE = "in-plane"
    CROSS_PLANE = "cross-plane"

    @property
    def label(self) -> str:
        return self.value

    @property
    def unit_vector(self) -> np.ndarray:
        n = np.zeros(3)
        n[0 if self is FiberDirection.IN_PLANE else 1] = 1.0
        return n

    @classmethod
    def from_label(cls, label) -> "FiberDirection":
        if isinstance(label, cls):
            return label
        key = str(label).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown fiber direction {label!r}") from None


class InvariantSet(NamedTuple):
    """Values of I1, I2, I4, I5 at one deformation state (I3 = 1)."""

    i1: float
    i2: float
    i4: float
    i5: float


class InvariantDerivatives(NamedTuple):
    """Derivatives of I1, I2, I4, I5 with respect to the loaded component of F.

    The loaded component is F11 for uniaxial tests and F12 for shear, all
    other entries held fixed.
    """

    di1: float
    di2: float
    di4: float
    di5: float


def _check_finite(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


def uniaxial_gradient(stretch: float) -> np.ndarray:
    """Deformation gradient diag(lambda, 1/sqrt(lambda), 1/sqrt(lambda)).

    Covers tension (lambda > 1) and compression (lambda < 1); det F = 1.
    """
    stretch = _check_finite(stretch, "stretch")
    if stretch <= 0.0:
        raise DomainError(f"stretch must be positive, got {stretch}")
    lateral = 1.0 / math.sqrt(stretch)
    return np.diag([stretch, lateral, lateral])


def shear_gradient(gamma: float) -> np.ndarray:
    """Simple-shear deformation gradient: identity plus gamma at entry (1,2)."""
    gamma = _check_finite(gamma, "gamma")
    F = np.eye(3)
    F[0, 1] = gamma
    return F


def invariants_from_gradient(F, direction) -> InvariantSet:
    """Evaluate the invariants of an arbitrary incompressible gradient.

    General matrix route: I1 = F:F, I2 = [I1^2 - C:C]/2, I4 = C:N,
    I5 = C^2:N with C = F^t F.  Serves as the oracle for the closed-form
    paths.  Requires |det F - 1| <= 1e-9.
    """
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3):
        raise DomainError(f"deformation gradient must be 3x3, got shape {F.shape}")
    det = float(np.linalg.det(F))
    if abs(det - 1.0) > DET_TOL:
        raise DomainError(f"gradient is not incompressible: det F = {det!r}")
    direction = FiberDirection.from_label(direction)
    C = F.T @ F
    i1 = float(np.trace(C))
    i2 = 0.5 * (i1 * i1 - float((C * C).sum()))
    cn = C @ direction.unit_vector
    i4 = float(direction.unit_vector @ cn)
    i5 = float(cn @ cn)
    return InvariantSet(i1, i2, i4, i5)


def invariants_uniaxial(stretch: float, direction) -> InvariantSet:
    """Closed-form invariants for uniaxial tension/compression at stretch lambda."""
    stretch = _check_finite(stretch, "stretch")
    if stretch <= 0.0:
        raise DomainError(f"stretch must be positive, got {stretch}")
    direction = FiberDirection.from_label(direction)
    lam = stretch
    i1 = lam * lam + 2.0 / lam
    i2 = 2.0 * lam + 1.0 / (lam * lam)
    if direction is FiberDirection.IN_PLANE:
        i4 = lam * lam
        i5 = lam ** 4
    else:
        i4 = 1.0 / lam
        i5 = 1.0 / (lam * lam)
    return InvariantSet(i1, i2, i4, i5)


def invariants_shear(gamma: float, direction) -> InvariantSet:
    """Closed-form invariants for simple shear at strain gamma."""
    gamma = _check_finite(gamma, "gamma")
    direction = FiberDirection.from_label(direction)
    g2 = gamma * gamma
    i1 = 3.0 + g2
    i2 = 3.0 + g2
    if direction is FiberDirection.IN_PLANE:
        i4 = 1.0
        i5 = 1.0 + g2
    else:
        i4 = 1.0 + g2
        i5 = (1.0 + g2) ** 2 + g2
    return InvariantSet(i1, i2, i4, i5)


def invariant_derivatives(mode, direction, loading: float) -> InvariantDerivatives:
    """Closed-form derivatives of the invariants along the loaded F component.

    Uniaxial (w.r.t. F11): dI1 = 2*lam, dI2 = 4; in-plane dI4 = 2*lam,
    dI5 = 4*lam^3; cross-plane dI4 = dI5 = 0.  Shear (w.r.t. F12):
    dI1 = dI2 = 2*gamma; in-plane dI4 = 0, dI5 = 2*gamma; cross-plane
    dI4 = 2*gamma, dI5 = 6*gamma + 4*gamma^3.
    """
    mode = LoadingMode.from_label(mode)
    direction = FiberDirection.from_label(direction)
    loading = _check_finite(loading, "loading")
    if mode.is_uniaxial:
        if loading <= 0.0:
            raise DomainError(f"stretch must be positive, got {loading}")
        lam = loading
        di1 = 2.0 * lam
        di2 = 4.0
        if direction is FiberDirection.IN_PLANE:
            return InvariantDerivatives(di1, di2, 2.0 * lam, 4.0 * lam ** 3)
        return InvariantDerivatives(di1, di2, 0.0, 0.0)
    gamma = loading
    dg = 2.0 * gamma
    if direction is FiberDirection.IN_PLANE:
        return InvariantDerivatives(dg, dg, 0.0, dg)
    return InvariantDerivatives(dg, dg, dg, 6.0 * gamma + 4.0 * gamma ** 3)
