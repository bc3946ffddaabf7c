"""Small-strain stiffness extraction and Welch comparison of directions.

Stiffnesses come from through-origin linear regression, E = (e.s)/(e.e),
on strain-stress pairs up to 10% strain; the shear modulus is converted
to a stiffness through E_shr = 2[1+nu] mu = 3 mu for an incompressible
solid.  Directional means are compared with Welch's t-test; the two-
tailed p value is computed from the regularized incomplete beta function
so no external statistical dependency is needed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError
from .kinematics import FiberDirection

__all__ = [
    "StiffnessSummary",
    "WelchResult",
    "AnisotropyReport",
    "regress_stiffness",
    "shear_stiffness",
    "stiffness_summary",
    "welch_t_test",
    "student_t_two_tailed_p",
    "betainc_regularized",
    "anisotropy_report",
    "write_anisotropy_csv",
]

#: Regression window: points with strain magnitude above this are dropped.
STRAIN_WINDOW = 0.10

STIFFNESS_ATTRIBUTES = ("tension", "compression", "shear", "mean")

CLASS_ANISOTROPIC = "anisotropic"
CLASS_ISOTROPIC = "isotropic (not rejected)"


@dataclass(frozen=True)
class StiffnessSummary:
    """Per-sample stiffness attributes for one direction, kPa."""

    e_ten: float
    e_com: float
    e_shr: float
    direction: FiberDirection
    n_points: int = 0

    @property
    def e_mean(self) -> float:
        return (self.e_ten + self.e_com + self.e_shr) / 3.0

    def attribute(self, name: str) -> float:
        return {
            "tension": self.e_ten,
            "compression": self.e_com,
            "shear": self.e_shr,
            "mean": self.e_mean,
        }[name]


@dataclass(frozen=True)
class WelchResult:
    """Welch's t-test outcome: statistic, Welch-Satterthwaite df, two-tailed p."""

    t: float
    df: float
    p: float

    @property
    def significant_05(self) -> bool:
        return self.p < 0.05

    @property
    def significant_01(self) -> bool:
        return self.p < 0.01


def _pairs(strain, stress) -> tuple[np.ndarray, np.ndarray]:
    strain = np.asarray(strain, dtype=float).ravel()
    stress = np.asarray(stress, dtype=float).ravel()
    if strain.size != stress.size:
        raise DomainError("strain and stress must have equal length")
    if strain.size == 0:
        raise DomainError("regression needs at least one sample")
    if not (np.all(np.isfinite(strain)) and np.all(np.isfinite(stress))):
        raise DomainError("strain and stress must be finite")
    return strain, stress


def regress_stiffness(strain, stress) -> float:
    """Through-origin least-squares slope E = (e.s)/(e.e), kPa."""
    strain, stress = _pairs(strain, stress)
    denom = float(strain @ strain)
    if denom == 0.0:
        raise DomainError("all strains are zero; stiffness is undefined")
    return float(strain @ stress) / denom


def shear_stiffness(gamma, tau) -> float:
    """Shear stiffness E_shr = 3 (g.t)/(g.g), kPa (incompressible, nu = 1/2)."""
    return 3.0 * regress_stiffness(gamma, tau)


def _windowed(strain, stress, window):
    strain, stress = _pairs(strain, stress)
    keep = np.abs(strain) <= window
    return strain[keep], stress[keep]


def stiffness_summary(
    tension,
    compression,
    shear,
    direction,
    window: float = STRAIN_WINDOW,
) -> StiffnessSummary:
    """Build a summary from (strain, stress) pairs of the three modes.

    ``tension``/``compression``/``shear`` are (strain, stress) array
    pairs; compression is regressed on magnitudes so E_com is positive.
    Points beyond the strain window are excluded.
    """
    direction = FiberDirection.from_label(direction)
    eps_t, sig_t = _windowed(*tension, window)
    eps_c, sig_c = _windowed(*compression, window)
    gam, tau = _windowed(*shear, window)
    e_ten = regress_stiffness(eps_t, sig_t)
    e_com = regress_stiffness(np.abs(eps_c), np.abs(sig_c))
    e_shr = shear_stiffness(gam, tau)
    return StiffnessSummary(
        e_ten=e_ten,
        e_com=e_com,
        e_shr=e_shr,
        direction=direction,
        n_points=int(eps_t.size + eps_c.size + gam.size),
    )


def _betacf(a: float, b: float, x: float, tol: float, max_iter: int) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise DomainError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def betainc_regularized(a: float, b: float, x: float, tol: float = 1e-12) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError("incomplete beta requires positive parameters")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x, tol, 300) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x, tol, 300) / b


def student_t_two_tailed_p(t: float, df: float) -> float:
    """Two-tailed p value of the Student-t distribution.

    p = I_x(df/2, 1/2) with x = df / (df + t^2); p = 1 at t = 0.
    """
    if df <= 0.0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if not math.isfinite(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return betainc_regularized(0.5 * df, 0.5, x)


def welch_t_test(a, b) -> WelchResult:
    """Welch's unequal-variance t-test between two sample vectors.

    t = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b) with n-1 sample
    variances; degrees of freedom by Welch-Satterthwaite; two-tailed p.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise DomainError("Welch's t-test needs at least 2 samples per group")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("samples must be finite")
    na, nb = a.size, b.size
    va = float(np.var(a, ddof=1)) / na
    vb = float(np.var(b, ddof=1)) / nb
    pooled = va + vb
    mean_diff = float(a.mean() - b.mean())
    if pooled == 0.0:
        if mean_diff == 0.0:
            raise DomainError("degenerate samples: zero pooled variance and equal means")
        return WelchResult(t=math.copysign(math.inf, mean_diff), df=math.nan, p=0.0)
    t = mean_diff / math.sqrt(pooled)
    df = pooled * pooled / (va * va / (na - 1) + vb * vb / (nb - 1))
    return WelchResult(t=t, df=df, p=student_t_two_tailed_p(t, df))


@dataclass(frozen=True)
class AttributeComparison:
    """Welch comparison of one stiffness attribute between directions."""

    attribute: str
    mean_in_plane: float
    sd_in_plane: float
    mean_cross_plane: float
    sd_cross_plane: float
    welch: WelchResult


@dataclass(frozen=True)
class AnisotropyReport:
    """Per-attribute Welch table plus the symmetry classification."""

    comparisons: tuple[AttributeComparison, ...]
    classification: str

    def comparison(self, attribute: str) -> AttributeComparison:
        for comp in self.comparisons:
            if comp.attribute == attribute:
                return comp
        raise KeyError(attribute)


def anisotropy_report(
    in_plane: Sequence[StiffnessSummary],
    cross_plane: Sequence[StiffnessSummary],
) -> AnisotropyReport:
    """Compare the two directions attribute by attribute.

    Classified "anisotropic" when any attribute differs at p < 0.05,
    otherwise "isotropic (not rejected)".
    """
    if len(in_plane) < 2 or len(cross_plane) < 2:
        raise DomainError("anisotropy comparison needs >= 2 samples per direction")
    comparisons = []
    for attr in STIFFNESS_ATTRIBUTES:
        a = np.array([s.attribute(attr) for s in in_plane])
        b = np.array([s.attribute(attr) for s in cross_plane])
        comparisons.append(
            AttributeComparison(
                attribute=attr,
                mean_in_plane=float(a.mean()),
                sd_in_plane=float(a.std(ddof=1)),
                mean_cross_plane=float(b.mean()),
                sd_cross_plane=float(b.std(ddof=1)),
                welch=welch_t_test(a, b),
            )
        )
    anis = any(c.welch.significant_05 for c in comparisons)
    return AnisotropyReport(
        comparisons=tuple(comparisons),
        classification=CLASS_ANISOTROPIC if anis else CLASS_ISOTROPIC,
    )


def write_anisotropy_csv(path, report: AnisotropyReport) -> Path:
    """Tabular report: one row per attribute with means, sd, t, df, p, flags."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "attribute",
                "mean_in_plane_kPa",
                "sd_in_plane_kPa",
                "mean_cross_plane_kPa",
                "sd_cross_plane_kPa",
                "t",
                "df",
                "p",
                "significant_05",
                "significant_01",
            ]
        )
        for comp in report.comparisons:
            writer.writerow(
                [
                    comp.attribute,
                    repr(comp.mean_in_plane),
                    repr(comp.sd_in_plane),
                    repr(comp.mean_cross_plane),
                    repr(comp.sd_cross_plane),
                    repr(comp.welch.t),
                    repr(comp.welch.df),
                    repr(comp.welch.p),
                    comp.welch.significant_05,
                    comp.welch.significant_01,
                ]
            )
    return path
