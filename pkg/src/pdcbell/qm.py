"""Quantum-mechanical predictions: the 50/50 beamsplitter transform,
post-selection onto different output paths, analyzer projection
probabilities, and the idealized rate model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import (PI, Angle, AngleScan, ExperimentConfig, UncertainValue,
                   scan_grid)
from .errors import DomainError, PostSelectionEmptyError

# Spatial modes: "in" is the single input port of the splitter,
# "r"/"t" the reflected and transmitted output arms.
PATHS = ("in", "r", "t")
POLS = ("H", "V")

Mode = tuple[str, str]  # (path, polarization)


def _check_mode(m: Mode) -> Mode:
    path, pol = m
    if path not in PATHS or pol not in POLS:
        raise DomainError(f"malformed mode {m!r}")
    return (path, pol)


@dataclass
class TwoPhotonState:
    """Two-photon state as a symmetric amplitude map over ordered pairs
    of (path, polarization) modes.

    The ordered (distinguishable-label) representation is kept symmetric
    under photon exchange, so bosonic states are represented faithfully
    and the squared norm is the plain L2 norm of the amplitude map.
    """

    amplitudes: dict[tuple[Mode, Mode], complex] = field(default_factory=dict)

    def __post_init__(self):
        sym: dict[tuple[Mode, Mode], complex] = {}
        for (m1, m2), a in self.amplitudes.items():
            m1, m2 = _check_mode(tuple(m1)), _check_mode(tuple(m2))
            if a == 0:
                continue
            half = a / 2.0
            sym[(m1, m2)] = sym.get((m1, m2), 0.0) + half
            sym[(m2, m1)] = sym.get((m2, m1), 0.0) + half
        self.amplitudes = {k: v for k, v in sym.items() if v != 0}

    @classmethod
    def from_kets(cls, kets: dict[tuple[Mode, Mode], complex]) -> "TwoPhotonState":
        """Build a state from physical (normalized) two-photon kets.

        A ket over two distinct modes is the symmetrized pair, so its
        amplitude splits as a/sqrt(2) onto each ordering; a doubly
        occupied mode maps directly.
        """
        ordered: dict[tuple[Mode, Mode], complex] = {}
        for (m1, m2), a in kets.items():
            m1, m2 = tuple(m1), tuple(m2)
            if m1 == m2:
                ordered[(m1, m2)] = ordered.get((m1, m2), 0.0) + a
            else:
                h = a / math.sqrt(2.0)
                ordered[(m1, m2)] = ordered.get((m1, m2), 0.0) + h
                ordered[(m2, m1)] = ordered.get((m2, m1), 0.0) + h
        return cls(ordered)

    @classmethod
    def input_pair(cls, pol1: str, pol2: str) -> "TwoPhotonState":
        """Two photons entering the splitter's single input port."""
        return cls.from_kets({(("in", pol1), ("in", pol2)): 1.0})

    def norm(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values())

    def amplitude(self, m1: Mode, m2: Mode) -> complex:
        return self.amplitudes.get((tuple(m1), tuple(m2)), 0.0)

    def physical_amplitude(self, m1: Mode, m2: Mode) -> complex:
        """Amplitude of the normalized physical ket |m1 m2>.

        For distinct modes this is sqrt(2) times the ordered amplitude
        (the ket is the symmetrized pair); for equal modes it is the
        ordered amplitude itself.
        """
        a = self.amplitude(m1, m2)
        if tuple(m1) == tuple(m2):
            return a
        return a * math.sqrt(2.0)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Polarizer axes on the transmitted and reflected arms."""

    theta_t: Angle
    theta_r: Angle

    @classmethod
    def from_radians(cls, theta_t: float, theta_r: float) -> "AnalyzerSetting":
        return cls(Angle(theta_t), Angle(theta_r))

    @property
    def phi(self) -> Angle:
        """Angle between the two polarization axes."""
        return self.theta_r - self.theta_t


def apply_beamsplitter(state: TwoPhotonState) -> TwoPhotonState:
    """Send a two-photon state through the lossless symmetric 50/50
    splitter: each input-port photon goes to (|r> + |t>)/sqrt(2) with
    polarization untouched.  Norm is preserved.

    The all-real phase convention reproduces the standard expansion
    |HV> -> (|H_r V_r> + |H_t V_t> + |V_r H_t> + |H_r V_t>)/2 verbatim.
    """
    out: dict[tuple[Mode, Mode], complex] = {}
    for (m1, m2), a in state.amplitudes.items():
        for m in (m1, m2):
            if m[0] != "in":
                raise DomainError(
                    f"beamsplitter input must occupy the input port, got {m}")
        for p1 in ("r", "t"):
            for p2 in ("r", "t"):
                key = ((p1, m1[1]), (p2, m2[1]))
                out[key] = out.get(key, 0.0) + a / 2.0
    return TwoPhotonState(out)


def postselect_different_paths(
        state: TwoPhotonState) -> tuple[TwoPhotonState, float]:
    """Restrict to one photon in r and one in t; renormalize.

    Returns the renormalized state and the kept-subspace probability.
    Raises when the kept subspace carries no weight.
    """
    kept = {k: a for k, a in state.amplitudes.items()
            if {k[0][0], k[1][0]} == {"r", "t"}}
    total = state.norm()
    weight = sum(abs(a) ** 2 for a in kept.values())
    if total <= 0.0 or weight / max(total, 1e-300) < 1e-30:
        raise PostSelectionEmptyError("no amplitude with photons on both arms")
    prob = weight / total
    scale = 1.0 / math.sqrt(weight)
    return TwoPhotonState({k: a * scale for k, a in kept.items()}), prob


def bell_psi_plus() -> TwoPhotonState:
    """(|V_r H_t> + |H_r V_t>)/sqrt(2), in the symmetric representation."""
    s = 1.0 / math.sqrt(2.0)
    return TwoPhotonState.from_kets({
        (("r", "V"), ("t", "H")): s,
        (("r", "H"), ("t", "V")): s,
    })


def coincidence_probability(state: TwoPhotonState,
                            setting: AnalyzerSetting) -> float:
    """Probability that the r photon passes the analyzer at theta_r and
    the t photon passes the analyzer at theta_t.

    The state must live in the different-path subspace (same-path
    components are orthogonal to the projector and contribute nothing).
    """
    tr = setting.theta_t.radians
    rr = setting.theta_r.radians
    vt = {"H": math.cos(tr), "V": math.sin(tr)}
    vr = {"H": math.cos(rr), "V": math.sin(rr)}
    amp = 0.0 + 0.0j
    for (m1, m2), a in state.amplitudes.items():
        if m1[0] == "r" and m2[0] == "t":
            amp += a * vr[m1[1]] * vt[m2[1]]
    # the symmetrized projector contributes both orderings: sqrt(2) overall
    return abs(amp * math.sqrt(2.0)) ** 2


def predicted_rates(cfg: ExperimentConfig,
                    phi: float | Angle) -> tuple[float, float, float]:
    """Idealized rate model: singles eta/2 * R0 per arm and coincidences
    (eta_t eta_r / 4) * R0 * (1 + V cos 2 phi)."""
    p = float(phi)
    r0 = cfg.pair_rate_R0
    et, er = cfg.eta_t.eta, cfg.eta_r.eta
    singles_t = 0.5 * et * r0
    singles_r = 0.5 * er * r0
    coinc = 0.25 * et * er * r0 * (1.0 + cfg.state_visibility_V * math.cos(2 * p))
    return singles_t, singles_r, coinc


def fringe_curve(cfg: ExperimentConfig, n: int) -> AngleScan:
    """Predicted coincidence-rate scan on the n-point grid, zero sigma."""
    if n < 4:
        raise DomainError(f"fringe_curve needs n >= 4, got {n}")
    rates = [UncertainValue(predicted_rates(cfg, a)[2], 0.0)
             for a in scan_grid(n)]
    return AngleScan(n, tuple(rates))
