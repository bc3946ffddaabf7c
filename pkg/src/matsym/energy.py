"""Twelve-term free-energy network over the invariants I1, I2, I4, I5.

The energy is a non-negative combination of fixed activation terms.
Terms 1..4 act on x = I1 - 3, terms 5..8 identically on x = I2 - 3:

====  ==========================
k     psi_k / w_k
====  ==========================
1, 5  w* x
2, 6  exp(w* x) - 1
3, 7  w* x^2
4, 8  exp(w* x^2) - 1
====  ==========================

Terms 9..10 act on the Macaulay-bracketed fiber stretch <I4 - 1> and
terms 11..12 on <I5 - 1>, as w* <.>^2 and exp(w* <.>^2) - 1, so fiber
terms only engage when the fibers are stretched.  Every term carries a
unit-less inner weight w* and an outer weight w in kilopascal; the energy
is psi = sum_k w_k * term_k, zero at the undeformed state by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

from .errors import DomainError, ValidationError
from .kinematics import InvariantSet

__all__ = [
    "N_TERMS",
    "TERM_LABELS",
    "ModelWeights",
    "EnergyGradient",
    "reference_models",
    "term_energy",
    "energy",
    "energy_gradient",
    "weight_gradient",
    "save_model",
    "load_model",
]

N_TERMS = 12

# Feature column per term: 0 -> I1-3, 1 -> I2-3, 2 -> <I4-1>, 3 -> <I5-1>.
TERM_COLUMN = (0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 3, 3)

# Activation kind per term: 0 linear identity, 1 linear exponential,
# 2 quadratic identity, 3 quadratic exponential.  Fiber terms are always
# quadratic in the bracketed argument.
TERM_KIND = (0, 1, 2, 3, 0, 1, 2, 3, 2, 3, 2, 3)

TERM_LABELS = (
    "(I1-3)",
    "exp(w*(I1-3))-1",
    "(I1-3)^2",
    "exp(w*(I1-3)^2)-1",
    "(I2-3)",
    "exp(w*(I2-3))-1",
    "(I2-3)^2",
    "exp(w*(I2-3)^2)-1",
    "<I4-1>^2",
    "exp(w*<I4-1>^2)-1",
    "<I5-1>^2",
    "exp(w*<I5-1>^2)-1",
)

MODEL_SCHEMA_VERSION = 1


def _features(inv: InvariantSet) -> tuple[float, float, float, float]:
    return (
        inv.i1 - 3.0,
        inv.i2 - 3.0,
        max(inv.i4 - 1.0, 0.0),
        max(inv.i5 - 1.0, 0.0),
    )


def _check_term(k: int) -> int:
    if not isinstance(k, (int, np.integer)) or not 1 <= int(k) <= N_TERMS:
        raise DomainError(f"term index must be in 1..{N_TERMS}, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class ModelWeights:
    """Twelve (outer, inner) weight pairs defining the free energy.

    ``outer`` carries kilopascal, ``inner`` is unit-less; both are
    non-negative, which guarantees psi >= 0 and a stress-free reference.
    """

    outer: np.ndarray
    inner: np.ndarray

    def __post_init__(self):
        for name in ("outer", "inner"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (N_TERMS,):
                raise DomainError(f"{name} weights must have shape ({N_TERMS},), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} weights must be finite")
            if np.any(arr < 0.0):
                raise DomainError(f"{name} weights must be non-negative")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls) -> "ModelWeights":
        return cls(np.zeros(N_TERMS), np.zeros(N_TERMS))

    @classmethod
    def from_terms(cls, terms: Mapping[int, tuple[float, float]]) -> "ModelWeights":
        """Build weights from {k: (outer_kPa, inner)} with all other terms zero."""
        outer = np.zeros(N_TERMS)
        inner = np.zeros(N_TERMS)
        for k, (w, w_star) in terms.items():
            k = _check_term(k)
            outer[k - 1] = w
            inner[k - 1] = w_star
        return cls(outer, inner)

    @property
    def products(self) -> np.ndarray:
        """Per-term outer*inner products (the effective coefficient of identity terms)."""
        return self.outer * self.inner

    def active_terms(self, threshold: float = 0.0) -> tuple[int, ...]:
        """1-based indices of terms whose outer weight exceeds ``threshold``."""
        return tuple(int(k) for k in np.flatnonzero(self.outer > threshold) + 1)

    def to_json_dict(self, name: str = "model", meta: Mapping | None = None) -> dict:
        payload = {
            "name": name,
            "weights": [
                {"k": k + 1, "w_kPa": float(self.outer[k]), "w_star": float(self.inner[k])}
                for k in range(N_TERMS)
            ],
            "meta": {"schema_version": MODEL_SCHEMA_VERSION, **(dict(meta) if meta else {})},
        }
        return payload

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "ModelWeights":
        try:
            entries = payload["weights"]
        except (KeyError, TypeError):
            raise ValidationError("model document lacks a 'weights' field") from None
        outer = np.zeros(N_TERMS)
        inner = np.zeros(N_TERMS)
        seen = set()
        for entry in entries:
            try:
                k = _check_term(entry["k"])
                w = float(entry["w_kPa"])
                w_star = float(entry["w_star"])
            except (KeyError, TypeError, ValueError, DomainError) as exc:
                raise ValidationError(f"malformed weight entry {entry!r}: {exc}") from None
            if k in seen:
                raise ValidationError(f"duplicate weight entry for term {k}")
            seen.add(k)
            outer[k - 1] = w
            inner[k - 1] = w_star
        return cls(outer, inner)


class EnergyGradient(NamedTuple):
    """Partial derivatives of the energy with respect to the invariants, kPa."""

    di1: float
    di2: float
    di4: float
    di5: float


def reference_models() -> dict[str, ModelWeights]:
    """The three built-in discovered models, keyed by material name.

    mycelium:          psi = 5.07 kPa [I1-3] + 1.64 kPa <I5-1>^2
    fruiting_body:     psi = 4.42 kPa [I1-3] + 0.69 kPa [exp(0.70 <I5-1>^2) - 1]
    protein_mycelium:  psi = 14.30 kPa [I1-3]
    """
    return {
        "mycelium": ModelWeights.from_terms({1: (2.2540, 2.2503), 11: (1.2800, 1.2790)}),
        "fruiting_body": ModelWeights.from_terms({1: (2.0377, 2.1712), 12: (0.6881, 0.7002)}),
        "protein_mycelium": ModelWeights.from_terms({1: (3.4689, 4.1216)}),
    }


def term_energy(k: int, inv: InvariantSet, w_inner: float) -> float:
    """Energy of term ``k`` per unit outer weight (psi_k = w_k * term_energy)."""
    k = _check_term(k)
    w_inner = float(w_inner)
    if not math.isfinite(w_inner) or w_inner < 0.0:
        raise DomainError(f"inner weight must be finite and non-negative, got {w_inner!r}")
    x = _features(inv)[TERM_COLUMN[k - 1]]
    kind = TERM_KIND[k - 1]
    if kind == 0:
        return w_inner * x
    if kind == 1:
        return math.exp(w_inner * x) - 1.0
    if kind == 2:
        return w_inner * x * x
    return math.exp(w_inner * x * x) - 1.0


def energy(model: ModelWeights, inv: InvariantSet) -> float:
    """Free energy psi in kPa; zero at the undeformed state for any weights."""
    return sum(
        float(model.outer[k]) * term_energy(k + 1, inv, float(model.inner[k]))
        for k in range(N_TERMS)
        if model.outer[k] != 0.0
    )


def energy_gradient(model: ModelWeights, inv: InvariantSet) -> EnergyGradient:
    """Analytic (d psi / d I1, I2, I4, I5) in kPa.

    Fiber components vanish for I4 <= 1 / I5 <= 1 through the Macaulay
    brackets.
    """
    feats = _features(inv)
    grad = [0.0, 0.0, 0.0, 0.0]
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
        grad[col] += w * g
    return EnergyGradient(*grad)


def weight_gradient(model: ModelWeights, inv: InvariantSet) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of psi with respect to the weights.

    Returns ``(d_outer, d_inner)``: d psi / d w_k (unit-less, equal to the
    per-term energies) and d psi / d w*_k (kPa).
    """
    feats = _features(inv)
    d_outer = np.zeros(N_TERMS)
    d_inner = np.zeros(N_TERMS)
    for idx in range(N_TERMS):
        ws = float(model.inner[idx])
        w = float(model.outer[idx])
        x = feats[TERM_COLUMN[idx]]
        kind = TERM_KIND[idx]
        if kind == 0:
            d_outer[idx] = ws * x
            d_inner[idx] = w * x
        elif kind == 1:
            e = math.exp(ws * x)
            d_outer[idx] = e - 1.0
            d_inner[idx] = w * x * e
        elif kind == 2:
            d_outer[idx] = ws * x * x
            d_inner[idx] = w * x * x
        else:
            e = math.exp(ws * x * x)
            d_outer[idx] = e - 1.0
            d_inner[idx] = w * x * x * e
    return d_outer, d_inner


def save_model(path, model: ModelWeights, name: str = "model", meta: Mapping | None = None) -> Path:
    """Write the model JSON document {name, weights, meta} to ``path``."""
    path = Path(path)
    path.write_text(json.dumps(model.to_json_dict(name, meta), indent=2, sort_keys=True) + "\n")
    return path


def load_model(path) -> tuple[str, ModelWeights]:
    """Read a model JSON document; returns (name, weights)."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid model JSON in {path}: {exc}") from None
    name = str(payload.get("name", path.stem))
    return name, ModelWeights.from_json_dict(payload)
