"""The statistics and bounds of the three local-realism tests:
visibilities V_A/V_B with the F bound, the fringe-shape statistic
Delta_min with the D(eta) bound, and the single-ratio Clauser-Horne
statistic with its 1/4 bound.

Uncertainty conventions
-----------------------
Counting-statistics sigmas propagate to visibilities through the
correlated contrast formula (shared denominator).  The first test's
ratio and violation use linear (absolute) error addition rather than
quadrature: that is the convention the reference result tables follow,
and it is what the reproduction checks pin down.  eta is treated as
exact (nominal data-sheet efficiency).  All sigmas are statistical only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PI, AngleScan, UncertainValue, as_efficiency, scan_grid, uv_contrast
from .errors import DivisionError, DomainError, GridError, StatisticsError


@dataclass(frozen=True)
class VisibilityPair:
    V_A: UncertainValue
    V_B: UncertainValue


@dataclass(frozen=True)
class SantosIResult:
    ratio: UncertainValue          # V_B / V_A
    bound_F: UncertainValue
    violation: UncertainValue      # F - ratio; > 0 falsifies the family
    significance: float
    visibilities: VisibilityPair

    def to_dict(self) -> dict:
        return {
            "test": "visibility-ratio",
            "V_A": _uv(self.visibilities.V_A),
            "V_B": _uv(self.visibilities.V_B),
            "ratio": _uv(self.ratio),
            "bound_F": _uv(self.bound_F),
            "violation": _uv(self.violation),
            "significance": self.significance,
        }


@dataclass(frozen=True)
class SantosIIResult:
    V_fringe: UncertainValue
    delta_min: UncertainValue
    bound_D: UncertainValue
    violation: UncertainValue      # D - Delta_min; > 0 falsifies the family
    significance: float
    n: int

    def to_dict(self) -> dict:
        return {
            "test": "fringe-shape",
            "n": self.n,
            "V_fringe": _uv(self.V_fringe),
            "delta_min": _uv(self.delta_min),
            "bound_D": _uv(self.bound_D),
            "violation": _uv(self.violation),
            "significance": self.significance,
        }


@dataclass(frozen=True)
class CHResult:
    statistic: UncertainValue
    violation: UncertainValue      # statistic - 1/4
    significance: float
    r_tot_convention: str          # "measured" | "four-times-scan-mean"
    bound: float = 0.25

    def to_dict(self) -> dict:
        return {
            "test": "clauser-horne",
            "statistic": _uv(self.statistic),
            "bound": self.bound,
            "violation": _uv(self.violation),
            "significance": self.significance,
            "r_tot_convention": self.r_tot_convention,
        }


def _uv(u: UncertainValue) -> dict:
    return {"value": u.value, "sigma": u.sigma}


def _significance(violation: UncertainValue) -> float:
    if violation.sigma > 0.0:
        return violation.value / violation.sigma
    return math.inf if violation.value > 0 else (-math.inf if violation.value < 0 else 0.0)


def visibility_VA(scan: AngleScan) -> UncertainValue:
    """(R(0) - R(pi/2)) / (R(0) + R(pi/2))."""
    return uv_contrast(scan.rate_at(0.0), scan.rate_at(PI / 2))


def visibility_VB(scan: AngleScan) -> UncertainValue:
    """sqrt(2) * (R(pi/8) - R(3pi/8)) / (R(pi/8) + R(3pi/8))."""
    return uv_contrast(scan.rate_at(PI / 8), scan.rate_at(3 * PI / 8)).scaled(math.sqrt(2.0))


def sinc2_threshold(eta) -> float:
    """sin^2(pi eta / 2) / (pi eta / 2)^2."""
    x = PI * as_efficiency(eta).eta / 2.0
    return (math.sin(x) / x) ** 2


def bound_F(eta, V_B: UncertainValue) -> UncertainValue:
    """F = 1 + cos^2(pi eta/2) [V_B - sin^2(pi eta/2)/(pi eta/2)^2].

    eta is exact; sigma comes from V_B through the linear coefficient.
    """
    e = as_efficiency(eta).eta
    c2 = math.cos(PI * e / 2.0) ** 2
    value = 1.0 + c2 * (V_B.value - sinc2_threshold(e))
    return UncertainValue(value, c2 * V_B.sigma)


def santos1_from_visibilities(V_A: UncertainValue, V_B: UncertainValue,
                              eta) -> SantosIResult:
    """Assemble the first test directly from measured visibilities."""
    if V_A.value == 0.0:
        raise DivisionError("V_A is zero; visibility ratio undefined")
    ratio_v = V_B.value / V_A.value
    # linear error addition (reference-table convention)
    ratio_s = abs(ratio_v) * (abs(V_A.sigma / V_A.value)
                              + (abs(V_B.sigma / V_B.value) if V_B.value else 0.0))
    ratio = UncertainValue(ratio_v, ratio_s)
    F = bound_F(eta, V_B)
    violation = UncertainValue(F.value - ratio.value, F.sigma + ratio.sigma)
    return SantosIResult(ratio=ratio, bound_F=F, violation=violation,
                         significance=_significance(violation),
                         visibilities=VisibilityPair(V_A, V_B))


def evaluate_santos1(scan: AngleScan, eta) -> SantosIResult:
    """First test from a coincidence scan (needs the 0, pi/8, 3pi/8 and
    pi/2 grid points, i.e. n divisible by 8)."""
    return santos1_from_visibilities(visibility_VA(scan), visibility_VB(scan), eta)


def fringe_V(scan: AngleScan) -> UncertainValue:
    """V = 2 * sum R(phi_j) cos(2 phi_j) / sum R(phi_j)."""
    grid = scan_grid(scan.n)
    cos2 = [math.cos(2 * a) for a in grid]
    total = sum(scan.values)
    if total == 0.0:
        raise DivisionError("total scan rate is zero")
    num = sum(r * c for r, c in zip(scan.values, cos2))
    v = 2.0 * num / total
    # dV/dR_j = (2 cos(2 phi_j) - V) / total
    var = sum(((2.0 * c - v) / total * s) ** 2
              for c, s in zip(cos2, scan.sigmas))
    return UncertainValue(v, math.sqrt(var))


def bound_D(eta, V: UncertainValue) -> UncertainValue:
    """D(eta) = 4/(3 pi) sqrt(2/(3 eta) - 1/2 - sinc^4) (V - sinc^2)_+^{3/2}
    with sinc^2 = sin^2(pi eta/2)/(pi eta/2)^2 and the bracket clamped
    at zero."""
    e = as_efficiency(eta).eta
    t = sinc2_threshold(e)
    radicand = 2.0 / (3.0 * e) - 0.5 - t * t
    if radicand < 0.0:
        raise DomainError(f"D(eta) radicand negative for eta={e}")
    pref = 4.0 / (3.0 * PI) * math.sqrt(radicand)
    bracket = V.value - t
    if bracket <= 0.0:
        return UncertainValue(0.0, 0.0)
    value = pref * bracket ** 1.5
    sigma = pref * 1.5 * math.sqrt(bracket) * V.sigma
    return UncertainValue(value, sigma)


def delta_min(scan: AngleScan, radicand_floor: float = -1e-12) -> UncertainValue:
    """Scale-free departure of the scan from a pure cos(2 phi) fringe.

    Delta^2 = n sum R^2 / S^2 - 2 (sum R cos 2 phi)^2 / S^2 - 1, S = sum R.
    A radicand within radicand_floor of zero clamps to zero; anything
    more negative raises (non-fringe pathology or broken propagation).
    The sigma here is the delta method on Delta^2; callers with
    per-acquisition data should prefer the resampling estimate.
    """
    n = scan.n
    grid = scan_grid(n)
    cos2 = [math.cos(2 * a) for a in grid]
    R = scan.values
    S = sum(R)
    if S <= 0.0:
        raise DivisionError("total scan rate must be positive")
    sumsq = sum(r * r for r in R)
    C = sum(r * c for r, c in zip(R, cos2))
    # Equivalent orthogonal-residual form of
    #   n sum R^2 / S^2 - 2 C^2 / S^2 - 1:
    # on the uniform grid (sum cos = 0, sum cos^2 = n/2) this is
    # n/S^2 times the squared residual after removing the mean and the
    # cos(2 phi) component, which cannot cancel catastrophically.
    mean = S / n
    amp = 2.0 * C / n
    resid = sum((r - mean - amp * c) ** 2 for r, c in zip(R, cos2))
    d2 = n * resid / S**2
    if d2 < radicand_floor:
        raise StatisticsError(f"Delta^2 = {d2} below the clamp floor")
    d2 = max(d2, 0.0)
    # propagate on Delta^2, then to Delta
    var_d2 = 0.0
    for rj, cj, sj in zip(R, cos2, scan.sigmas):
        grad = (2.0 * n * rj / S**2 - 2.0 * n * sumsq / S**3
                - 4.0 * C * cj / S**2 + 4.0 * C**2 / S**3)
        var_d2 += (grad * sj) ** 2
    d = math.sqrt(d2)
    if d > 1e-8:
        sigma = math.sqrt(var_d2) / (2.0 * d)
    else:
        # sqrt is non-differentiable at zero; quote the scale instead
        sigma = math.sqrt(math.sqrt(var_d2)) if var_d2 > 0 else 0.0
    return UncertainValue(d, sigma)


def evaluate_santos2(scan: AngleScan, eta,
                     delta_sigma: float | None = None) -> SantosIIResult:
    """Second test from a coincidence scan.  delta_sigma, when given,
    overrides the delta-method sigma of Delta_min (per-acquisition
    resampling from the pipeline)."""
    V = fringe_V(scan)
    d = delta_min(scan)
    if delta_sigma is not None:
        d = UncertainValue(d.value, delta_sigma)
    D = bound_D(eta, V)
    violation = UncertainValue(D.value - d.value,
                               math.hypot(D.sigma, d.sigma))
    return SantosIIResult(V_fringe=V, delta_min=d, bound_D=D,
                          violation=violation,
                          significance=_significance(violation), n=scan.n)


def ch_statistic(scan: AngleScan,
                 r_tot: UncertainValue | None = None) -> CHResult:
    """|R(pi/8) - R(3pi/8)| / R_tot against the 1/4 bound.

    R_tot defaults to four times the scan mean (equals the
    polarizers-removed rate for the ideal model); pass a measured value
    to override.
    """
    x = scan.rate_at(PI / 8)
    y = scan.rate_at(3 * PI / 8)
    diff = x.value - y.value
    sign = 1.0 if diff >= 0 else -1.0
    if r_tot is not None:
        if r_tot.value == 0.0:
            raise DivisionError("R_tot is zero")
        v = abs(diff) / r_tot.value
        s = math.hypot(math.hypot(x.sigma, y.sigma) / r_tot.value,
                       abs(diff) * r_tot.sigma / r_tot.value**2)
        convention = "measured"
    else:
        total = 4.0 * sum(scan.values) / scan.n
        if total == 0.0:
            raise DivisionError("scan mean is zero; R_tot undefined")
        v = abs(diff) / total
        # gradient over every rate: the numerator angles also feed R_tot
        ix, iy = scan.index_of(PI / 8), scan.index_of(3 * PI / 8)
        var = 0.0
        for j, s_j in enumerate(scan.sigmas):
            g = -v * (4.0 / scan.n) / total
            if j == ix:
                g += sign / total
            elif j == iy:
                g -= sign / total
            var += (g * s_j) ** 2
        s = math.sqrt(var)
        convention = "four-times-scan-mean"
    stat = UncertainValue(v, s)
    violation = UncertainValue(v - 0.25, s)
    return CHResult(statistic=stat, violation=violation,
                    significance=_significance(violation),
                    r_tot_convention=convention)
