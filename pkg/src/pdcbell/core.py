"""Shared domain types: angles, detector efficiency, count records,
angle scans, experiment configuration and uncertainty arithmetic.

Everything here is an immutable value; all operations are pure.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from .errors import DivisionError, DomainError

PI = math.pi


def normalize_angle(theta: float) -> "Angle":
    """Map any real angle onto the canonical polarizer range [0, pi)."""
    if not math.isfinite(theta):
        raise DomainError(f"angle must be finite, got {theta!r}")
    r = math.fmod(theta, PI)
    if r < 0.0:
        r += PI
    if r >= PI:  # fmod rounding at the boundary
        r -= PI
    return Angle(r, _normalized=True)


def fold_half_pi(x: float) -> float:
    """Period-pi angular distance: the fold of |a - b| into [0, pi/2]."""
    d = math.fmod(abs(x), PI)
    return min(d, PI - d)


@dataclass(frozen=True)
class Angle:
    """A polarizer angle, canonically stored in radians in [0, pi)."""

    radians: float
    _normalized: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not self._normalized:
            norm = normalize_angle(self.radians)
            object.__setattr__(self, "radians", norm.radians)

    def __float__(self) -> float:
        return self.radians

    def __add__(self, other) -> "Angle":
        return normalize_angle(self.radians + float(other))

    def __sub__(self, other) -> "Angle":
        return normalize_angle(self.radians - float(other))


@dataclass(frozen=True)
class DetectionEfficiency:
    """Detector efficiency eta in (0, 1]."""

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"efficiency must be in (0, 1], got {self.eta}")

    def __float__(self) -> float:
        return self.eta


def as_efficiency(eta) -> DetectionEfficiency:
    if isinstance(eta, DetectionEfficiency):
        return eta
    return DetectionEfficiency(float(eta))


@dataclass(frozen=True)
class UncertainValue:
    """A scalar statistic with a one-sigma standard deviation.

    Propagation is first order (delta method) with independence assumed
    unless a dedicated correlated form is used (see `contrast`).
    """

    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")

    def __add__(self, other: "UncertainValue") -> "UncertainValue":
        return UncertainValue(self.value + other.value,
                              math.hypot(self.sigma, other.sigma))

    def __sub__(self, other: "UncertainValue") -> "UncertainValue":
        return UncertainValue(self.value - other.value,
                              math.hypot(self.sigma, other.sigma))

    def scaled(self, k: float) -> "UncertainValue":
        return UncertainValue(k * self.value, abs(k) * self.sigma)


def uv_ratio(a: UncertainValue, b: UncertainValue) -> UncertainValue:
    """a / b with first-order propagation, independence assumed."""
    if b.value == 0.0:
        raise DivisionError("denominator value is zero")
    v = a.value / b.value
    # sigma^2 = (sa/b)^2 + (a*sb/b^2)^2
    s = math.hypot(a.sigma / b.value, a.value * b.sigma / b.value**2)
    return UncertainValue(v, s)


def uv_contrast(x: UncertainValue, y: UncertainValue) -> UncertainValue:
    """(x - y)/(x + y) with the shared-denominator covariance handled
    explicitly (the ratio-of-sums special case)."""
    s = x.value + y.value
    if s == 0.0:
        raise DivisionError("contrast denominator x + y is zero")
    v = (x.value - y.value) / s
    # d/dx = 2y/s^2, d/dy = -2x/s^2
    sig = 2.0 * math.hypot(y.value * x.sigma, x.value * y.sigma) / s**2
    return UncertainValue(v, sig)


@dataclass(frozen=True)
class CountRecord:
    """Raw counts for one acquisition: singles per arm, TAC valid starts
    and coincidences, over a known duration."""

    singles_t: int
    singles_r: int
    coincidences: int
    valid_starts: int
    duration_s: float
    label: str = "signal"

    def __post_init__(self):
        for name in ("singles_t", "singles_r", "coincidences", "valid_starts"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.duration_s <= 0.0:
            raise DomainError("duration_s must be > 0")
        if self.coincidences > self.valid_starts:
            raise DomainError("coincidences cannot exceed valid starts")
        if self.coincidences > min(self.singles_t, self.singles_r):
            raise DomainError("coincidences cannot exceed singles on either arm")

    @property
    def coincidence_rate(self) -> float:
        return self.coincidences / self.duration_s


def scan_grid(n: int) -> list[float]:
    """The uniform angle-difference grid phi_j = pi*(j-1)/n, j = 1..n."""
    if n < 4:
        raise DomainError(f"scan grid needs n >= 4, got {n}")
    return [PI * j / n for j in range(n)]


@dataclass(frozen=True)
class AngleScan:
    """Coincidence rates (with sigma) on the uniform grid phi_j = pi*(j-1)/n."""

    n: int
    rates: tuple[UncertainValue, ...]

    def __post_init__(self):
        if self.n < 4:
            raise DomainError(f"AngleScan needs n >= 4, got {self.n}")
        if len(self.rates) != self.n:
            raise DomainError("rates length must equal n")
        object.__setattr__(self, "rates", tuple(self.rates))

    @classmethod
    def from_values(cls, values, sigmas=None) -> "AngleScan":
        values = list(values)
        if sigmas is None:
            sigmas = [0.0] * len(values)
        return cls(len(values), tuple(UncertainValue(v, s)
                                      for v, s in zip(values, sigmas)))

    @property
    def angles(self) -> list[Angle]:
        return [Angle(a) for a in scan_grid(self.n)]

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.rates]

    @property
    def sigmas(self) -> list[float]:
        return [r.sigma for r in self.rates]

    def index_of(self, phi: float, tol: float = 1e-9) -> int:
        """Index of grid point phi, or raise."""
        from .errors import GridError

        target = normalize_angle(phi).radians
        for j, a in enumerate(scan_grid(self.n)):
            if abs(a - target) <= tol:
                return j
        raise GridError(f"angle {phi} is not on the n={self.n} grid")

    def rate_at(self, phi: float) -> UncertainValue:
        return self.rates[self.index_of(phi)]


def scan_validate(scan: AngleScan, tol: float = 1e-12) -> bool:
    """True iff the grid matches phi_j = pi*(j-1)/n within tol and all
    rates are nonnegative.  Pure predicate; never raises."""
    try:
        grid = scan_grid(scan.n)
        for a, b in zip((x.radians for x in scan.angles), grid):
            if abs(a - b) > tol:
                return False
        return all(r.value >= 0.0 for r in scan.rates)
    except Exception:
        return False


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of the pulsed coincidence experiment."""

    pair_rate_R0: float = 2000.0          # pairs / s
    eta_t: DetectionEfficiency = DetectionEfficiency(0.62)
    eta_r: DetectionEfficiency = DetectionEfficiency(0.62)
    state_visibility_V: float = 0.978
    repetition_rate: float = 70e6         # Hz
    window_ns: float = 20.0
    acquisitions: int = 30
    acquisition_duration_s: float = 30.0
    background_rate: float = 0.0          # uncorrelated counts/s per arm
    seed: int = 0

    def __post_init__(self):
        if self.pair_rate_R0 < 0:
            raise DomainError("pair_rate_R0 must be >= 0")
        if not (0.0 <= self.state_visibility_V <= 1.0):
            raise DomainError("state_visibility_V must be in [0, 1]")
        if self.repetition_rate <= 0:
            raise DomainError("repetition_rate must be > 0")
        if self.window_ns <= 0:
            raise DomainError("window_ns must be > 0")
        if self.acquisitions < 1:
            raise DomainError("acquisitions must be >= 1")
        if self.acquisition_duration_s <= 0:
            raise DomainError("acquisition_duration_s must be > 0")
        if self.background_rate < 0:
            raise DomainError("background_rate must be >= 0")
        period_ns = 1e9 / self.repetition_rate
        if self.window_ns > period_ns:
            warnings.warn(
                f"coincidence window {self.window_ns} ns exceeds the pulse "
                f"period {period_ns:.3g} ns; the window is applied literally",
                stacklevel=2,
            )

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    @property
    def pairs_per_pulse_mean(self) -> float:
        return self.pair_rate_R0 / self.repetition_rate
