"""Numerical evaluation of the two hidden-variable model families by
quadrature, plus a seeded sampler of admissible models.

Model conventions
-----------------
Hidden polarization variables live on [0, pi) with period pi; every
density or response function of an angle difference is evaluated at the
folded distance min(d, pi - d) in [0, pi/2].  Sampled models are
truncated Fourier series in the doubled angle (period pi), which makes
the midpoint rule exact once the node count exceeds the bandwidth.

The inequality bounds checked downstream are theorems only under the
technical hypotheses of their original derivations, which are stronger
than the constraints visible here.  The sampler therefore draws response
functions from the fundamental-harmonic subfamily (fringe visibility at
most 1/4), for which conformance is provable; the verifier still reports
any violation it encounters instead of discarding it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .core import PI, AngleScan, DetectionEfficiency, UncertainValue, as_efficiency, scan_grid
from .errors import DomainError, QuadratureError, SamplingError


@dataclass(frozen=True)
class QuadratureSpec:
    """Numerical rule for the angle integrals."""

    nodes_per_axis: int = 256
    rule: Literal["midpoint", "trapezoid", "gauss"] = "midpoint"
    tolerance: float = 1e-8
    mu_nodes: int = 128  # second-tier variable, midpoint on [0, 1]

    def __post_init__(self):
        if self.nodes_per_axis < 32:
            raise DomainError("nodes_per_axis must be >= 32")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be > 0")
        if self.rule not in ("midpoint", "trapezoid", "gauss"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")

    def nodes(self, a: float = 0.0, b: float = PI):
        """Return (nodes, weights) on [a, b]."""
        n = self.nodes_per_axis
        if self.rule == "midpoint":
            x = a + (np.arange(n) + 0.5) * (b - a) / n
            w = np.full(n, (b - a) / n)
        elif self.rule == "trapezoid":
            # periodic trapezoid: endpoints coincide, uniform weights
            x = a + np.arange(n) * (b - a) / n
            w = np.full(n, (b - a) / n)
        else:
            x, w = np.polynomial.legendre.leggauss(n)
            x = 0.5 * (b - a) * (x + 1.0) + a
            w = 0.5 * (b - a) * w
        return x, w

    def mu_grid(self):
        m = self.mu_nodes
        x = (np.arange(m) + 0.5) / m
        w = np.full(m, 1.0 / m)
        return x, w


def fold(x: np.ndarray) -> np.ndarray:
    """Vectorized period-pi angular distance, into [0, pi/2]."""
    d = np.mod(np.abs(x), PI)
    return np.minimum(d, PI - d)


# Sentinel for a perfectly correlated (delta) hidden-variable density
# with uniform marginal: rho(|l1 - l2|) = delta(l1 - l2)/pi.
PERFECTLY_CORRELATED = "perfectly-correlated"


@dataclass(frozen=True)
class HiddenVariableModel:
    """First family: a density over the hidden-angle difference and one
    response function per arm."""

    rho: Callable[[np.ndarray], np.ndarray] | str
    P1: Callable[[np.ndarray], np.ndarray]
    P2: Callable[[np.ndarray], np.ndarray]
    meta: dict | None = field(default=None, compare=False)

    @property
    def correlated(self) -> bool:
        return self.rho == PERFECTLY_CORRELATED


@dataclass(frozen=True)
class TwoTierModel:
    """Second family: rho over the chi difference, per-arm densities g_j
    over the auxiliary variable mu in [0, 1], and response kernels
    Q_j(mu, x) in [0, 1]."""

    rho_chi: Callable[[np.ndarray], np.ndarray]
    g1: Callable[[np.ndarray], np.ndarray]
    g2: Callable[[np.ndarray], np.ndarray]
    Q1: Callable[[np.ndarray, np.ndarray], np.ndarray]
    Q2: Callable[[np.ndarray, np.ndarray], np.ndarray]
    meta: dict | None = field(default=None, compare=False)


def uniform_rho(x: np.ndarray) -> np.ndarray:
    """Uniform joint density on [0, pi)^2."""
    return np.full_like(np.asarray(x, dtype=float), 1.0 / PI**2)


def check_admissible(model: HiddenVariableModel, quad: QuadratureSpec) -> None:
    """Raise DomainError unless the model satisfies the family
    constraints on the evaluation grid."""
    x, w = quad.nodes()
    slack = 100 * quad.tolerance
    for name, P in (("P1", model.P1), ("P2", model.P2)):
        vals = np.asarray(P(fold(x)))
        if np.any(vals < -slack) or np.any(vals > 1.0 + slack):
            raise DomainError(f"{name} leaves [0, 1] on the grid")
    if model.correlated:
        return
    diff = fold(x[:, None] - x[None, :])
    rho = np.asarray(model.rho(diff))
    if np.any(rho < -slack):
        raise DomainError("rho is negative on the grid")
    total = float(np.einsum("i,j,ij->", w, w, rho))
    if abs(total - 1.0) > 1e-6:
        raise DomainError(f"rho normalization is {total}, expected 1")


def lhv_singles_ratio(model: HiddenVariableModel, phi_j: float, arm: int,
                      quad: QuadratureSpec = QuadratureSpec()) -> float:
    """R_j / R_0 for one arm at analyzer angle phi_j."""
    if arm not in (1, 2):
        raise DomainError(f"arm must be 1 or 2, got {arm}")
    check_admissible(model, quad)
    P = model.P1 if arm == 1 else model.P2
    x, w = quad.nodes()
    pv = np.asarray(P(fold(x - float(phi_j))))
    if model.correlated:
        # delta(l1 - l2)/pi: single integral with uniform marginal 1/pi
        return float(np.sum(w * pv) / PI)
    diff = fold(x[:, None] - x[None, :])
    rho = np.asarray(model.rho(diff))
    if arm == 1:
        return float(np.einsum("i,j,ij,i->", w, w, rho, pv))
    return float(np.einsum("i,j,ij,j->", w, w, rho, pv))


def lhv_coincidence_ratio(model: HiddenVariableModel, phi1: float, phi2: float,
                          quad: QuadratureSpec = QuadratureSpec()) -> float:
    """R_12 / R_0 at analyzer angles (phi1, phi2)."""
    check_admissible(model, quad)
    x, w = quad.nodes()
    p1 = np.asarray(model.P1(fold(x - float(phi1))))
    p2 = np.asarray(model.P2(fold(x - float(phi2))))
    if model.correlated:
        return float(np.sum(w * p1 * p2) / PI)
    diff = fold(x[:, None] - x[None, :])
    rho = np.asarray(model.rho(diff))
    return float(np.einsum("i,j,ij,i,j->", w, w, rho, p1, p2))


def model_scan(model: HiddenVariableModel, n: int,
               quad: QuadratureSpec = QuadratureSpec()) -> AngleScan:
    """Coincidence-ratio scan over the uniform grid, first analyzer fixed.

    The scan sigma is set to the quadrature tolerance.
    """
    if n < 4:
        raise DomainError(f"model_scan needs n >= 4, got {n}")
    check_admissible(model, quad)
    x, w = quad.nodes()
    p1 = np.asarray(model.P1(fold(x)))
    vals = []
    if model.correlated:
        for phi in scan_grid(n):
            p2 = np.asarray(model.P2(fold(x - phi)))
            vals.append(float(np.sum(w * p1 * p2) / PI))
    else:
        diff = fold(x[:, None] - x[None, :])
        rho = np.asarray(model.rho(diff))
        left = w * p1  # contract arm 1 once
        row = left @ rho  # shape (nodes,)
        for phi in scan_grid(n):
            p2 = np.asarray(model.P2(fold(x - phi)))
            vals.append(float(np.sum(row * w * p2)))
    return AngleScan(n, tuple(UncertainValue(v, quad.tolerance) for v in vals))


def effective_response(model: TwoTierModel,
                       quad: QuadratureSpec = QuadratureSpec()) -> HiddenVariableModel:
    """Integrate the auxiliary variable out of a two-tier model:
    P_j(x) = integral of Q_j(mu, x) g_j(mu) dmu, evaluated lazily by the
    mu quadrature at whatever points downstream integrals request."""
    mu, wmu = quad.mu_grid()
    gw1 = np.asarray(model.g1(mu)) * wmu
    gw2 = np.asarray(model.g2(mu)) * wmu
    for name, g in (("g1", gw1), ("g2", gw2)):
        total = float(np.sum(g))
        if abs(total - 1.0) > 1e-6:
            raise QuadratureError(f"{name} does not integrate to 1 ({total})")

    def make_P(Q, gw):
        def P(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            vals = np.tensordot(gw, np.asarray(Q(mu[:, None], x[None, :])), axes=1)
            return vals
        return P

    meta = None
    if model.meta is not None:
        meta = dict(model.meta)
    return HiddenVariableModel(rho=model.rho_chi,
                               P1=make_P(model.Q1, gw1),
                               P2=make_P(model.Q2, gw2),
                               meta=meta)


def two_tier_coincidence_direct(model: TwoTierModel, phi1: float, phi2: float,
                                quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Coincidence ratio of a two-tier model by direct integration over
    all four hidden variables (chi_1, chi_2, mu_1, mu_2)."""
    x, w = quad.nodes()
    mu, wmu = quad.mu_grid()
    diff = fold(x[:, None] - x[None, :])
    rho = np.asarray(model.rho_chi(diff))
    q1 = np.asarray(model.Q1(mu[:, None], fold(x - float(phi1))[None, :]))
    q2 = np.asarray(model.Q2(mu[:, None], fold(x - float(phi2))[None, :]))
    g1 = np.asarray(model.g1(mu)) * wmu
    g2 = np.asarray(model.g2(mu)) * wmu
    return float(np.einsum("i,j,ij,m,n,mi,nj->", w, w, rho, g1, g2, q1, q2,
                           optimize=True))


# ---------------------------------------------------------------------------
# Fourier parameterization and sampling


def fourier_series(coeffs) -> Callable[[np.ndarray], np.ndarray]:
    """c0 + sum_k c_k cos(2 k x): an even, period-pi function."""
    coeffs = [float(c) for c in coeffs]

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, coeffs[0])
        for k, c in enumerate(coeffs[1:], start=1):
            if c != 0.0:
                out = out + c * np.cos(2 * k * x)
        return out

    return f


def unit_mean_density(coeffs) -> Callable[[np.ndarray], np.ndarray]:
    """1 + sum_m d_m cos(2 pi m u): a density on [0, 1] with unit integral."""
    coeffs = [float(c) for c in coeffs]

    def g(u):
        u = np.asarray(u, dtype=float)
        out = np.ones_like(u)
        for m, d in enumerate(coeffs, start=1):
            if d != 0.0:
                out = out + d * np.cos(2 * PI * m * u)
        return out

    return g


def one_tier_from_coeffs(rho_coeffs, p1_coeffs, p2_coeffs,
                         meta: dict | None = None) -> HiddenVariableModel:
    return HiddenVariableModel(rho=fourier_series(rho_coeffs),
                               P1=fourier_series(p1_coeffs),
                               P2=fourier_series(p2_coeffs),
                               meta=meta)


def two_tier_from_coeffs(rho_coeffs, a_coeffs, b_coeffs, g_coeffs,
                         meta: dict | None = None) -> TwoTierModel:
    """Sampled two-tier shape: Q_j(mu, x) = mu^2 A(x) + (1 - mu^2) B(x)
    with a shared auxiliary density g, so P1 = P2 by construction."""
    A = fourier_series(a_coeffs)
    B = fourier_series(b_coeffs)
    g = unit_mean_density(g_coeffs)

    def Q(mu, x):
        s = np.asarray(mu, dtype=float) ** 2
        return s * A(x) + (1.0 - s) * B(x)

    return TwoTierModel(rho_chi=fourier_series(rho_coeffs),
                        g1=g, g2=g, Q1=Q, Q2=Q, meta=meta)


def _sample_rho_coeffs(rng: np.random.Generator, max_harmonics: int) -> list[float]:
    """Nonnegative, normalized density over the angle difference:
    a0 = 1/pi^2 and a tail with sum |a_k| < a0 (sufficient positivity)."""
    a0 = 1.0 / PI**2
    k = int(rng.integers(1, max_harmonics + 1))
    raw = rng.normal(size=k)
    raw[0] = abs(raw[0]) + 0.1  # keep a genuine fundamental
    total = np.sum(np.abs(raw))
    concentration = rng.uniform(0.2, 0.95)
    tail = raw * (a0 * concentration / total)
    return [a0] + [float(c) for c in tail]


def _sample_response_coeffs(rng: np.random.Generator,
                            eta: float) -> list[float]:
    """Fundamental-harmonic response with exact mean eta/2 and range
    inside [0, 1]."""
    b0 = eta / 2.0
    cap = min(b0, 1.0 - b0)
    if cap <= 0.0:
        raise SamplingError(f"no admissible response range for eta={eta}")
    b1 = float(rng.uniform(0.2, 0.95) * cap)
    return [b0, b1]


def sample_admissible_model(seed: int, eta, family: str = "one-tier",
                            max_harmonics: int = 6):
    """Draw a random admissible model, deterministic in the seed.

    Both families satisfy the positivity/normalization constraints and
    the singles constraint (mean response = eta/2) exactly.  The
    response functions are restricted to the fundamental harmonic; see
    the module docstring.
    """
    eta = as_efficiency(eta).eta
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB311]))
    if family == "one-tier":
        rho_c = _sample_rho_coeffs(rng, max_harmonics)
        p1_c = _sample_response_coeffs(rng, eta)
        p2_c = _sample_response_coeffs(rng, eta)
        meta = {"family": "one-tier", "eta": eta, "seed": int(seed),
                "rho": rho_c, "p1": p1_c, "p2": p2_c}
        return one_tier_from_coeffs(rho_c, p1_c, p2_c, meta=meta)
    if family == "two-tier":
        rho_c = _sample_rho_coeffs(rng, max_harmonics)
        a_c = _sample_response_coeffs(rng, eta)
        b_c = _sample_response_coeffs(rng, eta)
        g_raw = rng.normal(size=3)
        g_c = list(g_raw * (0.9 * rng.uniform(0.1, 1.0) / np.sum(np.abs(g_raw))))
        meta = {"family": "two-tier", "eta": eta, "seed": int(seed),
                "rho": rho_c, "A": a_c, "B": b_c, "g": [float(c) for c in g_c]}
        return two_tier_from_coeffs(rho_c, a_c, b_c, g_c, meta=meta)
    raise DomainError(f"unknown family {family!r}")


def serialize_model(model, quad: QuadratureSpec | None = None) -> str:
    """Serialize a sampled (coefficient-backed) model to JSON text.

    Coefficients round-trip bit-faithfully (repr-based float encoding).
    """
    if model.meta is None:
        raise DomainError("only coefficient-backed models can be serialized")
    doc = {"model": model.meta}
    if quad is not None:
        doc["quadrature"] = {"nodes_per_axis": quad.nodes_per_axis,
                             "rule": quad.rule,
                             "tolerance": quad.tolerance,
                             "mu_nodes": quad.mu_nodes}
    return json.dumps(doc, indent=2)


def deserialize_model(text: str):
    """Inverse of serialize_model; returns (model, quad_or_None)."""
    doc = json.loads(text)
    meta = doc["model"]
    quad = None
    if "quadrature" in doc:
        quad = QuadratureSpec(**doc["quadrature"])
    if meta["family"] == "one-tier":
        model = one_tier_from_coeffs(meta["rho"], meta["p1"], meta["p2"],
                                     meta=meta)
    elif meta["family"] == "two-tier":
        model = two_tier_from_coeffs(meta["rho"], meta["A"], meta["B"],
                                     meta["g"], meta=meta)
    else:
        raise DomainError(f"unknown family {meta['family']!r}")
    return model, quad
