"""Data ingestion, background subtraction, aggregation across
acquisitions, fringe fitting and report assembly.

Record files are CSV with one row per acquisition per angle:

    angle_rad,label,singles_t,singles_r,coincidences,valid_starts,duration_s

(header required, UTF-8, "." decimal separator, label either "signal"
or "background").
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass

from .core import (AngleScan, CountRecord, UncertainValue, normalize_angle,
                   scan_grid)
from .errors import DomainError, GridError, ParseError
from .eventsim import SimulatedRun, simulate_scan
from .inequalities import (ch_statistic, evaluate_santos1, evaluate_santos2)

CSV_HEADER = ["angle_rad", "label", "singles_t", "singles_r",
              "coincidences", "valid_starts", "duration_s"]


@dataclass(frozen=True)
class AngleGroup:
    """All acquisitions recorded at one analyzer-difference angle."""

    angle: float
    records: tuple[CountRecord, ...]


@dataclass(frozen=True)
class IngestedRecords:
    signal: tuple[AngleGroup, ...]       # sorted by angle
    background: tuple[CountRecord, ...]  # may be empty

    @property
    def n(self) -> int:
        return len(self.signal)


def records_to_rows(signal: list[SimulatedRun],
                    background: SimulatedRun | None) -> list[dict]:
    """Flatten simulation output into CSV-schema rows."""
    rows = []
    for run in signal:
        for rec in run.records:
            rows.append({"angle_rad": run.angle, "label": rec.label,
                         "singles_t": rec.singles_t, "singles_r": rec.singles_r,
                         "coincidences": rec.coincidences,
                         "valid_starts": rec.valid_starts,
                         "duration_s": rec.duration_s})
    if background is not None:
        for rec in background.records:
            rows.append({"angle_rad": 0.0, "label": "background",
                         "singles_t": rec.singles_t, "singles_r": rec.singles_r,
                         "coincidences": rec.coincidences,
                         "valid_starts": rec.valid_starts,
                         "duration_s": rec.duration_s})
    return rows


def write_records_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in CSV_HEADER})


def rows_to_csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_HEADER})
    return buf.getvalue()


def parse_rows(rows: list[dict]) -> IngestedRecords:
    """Validate schema rows (already dict-shaped) and group by angle."""
    signal: dict[float, list[CountRecord]] = {}
    background: list[CountRecord] = []
    for i, row in enumerate(rows, start=2):  # 1-based, after the header
        try:
            angle = normalize_angle(float(row["angle_rad"])).radians
            label = str(row["label"]).strip()
            counts = {k: int(row[k]) for k in
                      ("singles_t", "singles_r", "coincidences", "valid_starts")}
            duration = float(row["duration_s"])
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed row: {exc}", line=i) from exc
        if label not in ("signal", "background"):
            raise ParseError(f"unknown label {label!r}", line=i)
        try:
            rec = CountRecord(duration_s=duration, label=label, **counts)
        except DomainError as exc:
            raise ParseError(str(exc), line=i) from exc
        if label == "background":
            background.append(rec)
        else:
            signal.setdefault(angle, []).append(rec)
    if not signal:
        raise ParseError("no signal records in input")
    groups = tuple(AngleGroup(a, tuple(signal[a])) for a in sorted(signal))
    return IngestedRecords(signal=groups, background=tuple(background))


def ingest_records(path) -> IngestedRecords:
    """Parse a records CSV file; malformed rows are rejected with their
    line number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty input file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"bad header {header!r}, expected {CSV_HEADER}",
                             line=1)
        rows = [dict(zip(CSV_HEADER, row)) for row in reader if row]
    if not rows:
        raise ParseError("no data rows in input")
    return parse_rows(rows)


def aggregate_acquisitions(records, field: str = "coincidences") -> UncertainValue:
    """Mean rate across acquisitions with sigma = sample std / sqrt(N);
    a single record falls back to the Poisson sigma sqrt(C)/T."""
    records = list(records)
    if not records:
        raise DomainError("cannot aggregate an empty record list")
    rates = [getattr(r, field) / r.duration_s for r in records]
    n = len(rates)
    mean = sum(rates) / n
    if n == 1:
        counts = getattr(records[0], field)
        return UncertainValue(mean, math.sqrt(counts) / records[0].duration_s)
    var = sum((r - mean) ** 2 for r in rates) / (n - 1)
    return UncertainValue(mean, math.sqrt(var / n))


def subtract_background(signal: UncertainValue,
                        background: UncertainValue) -> UncertainValue:
    """Signal rate minus background rate, sigmas in quadrature.
    Negative results are legal (statistical fluctuation)."""
    return signal - background


def build_scan(ingested: IngestedRecords, subtract: bool = True,
               per_angle_background: bool = False) -> AngleScan:
    """Aggregate per-angle rates into an AngleScan on the uniform grid."""
    n = ingested.n
    grid = scan_grid(n)
    angles = [g.angle for g in ingested.signal]
    for a, b in zip(angles, grid):
        if abs(a - b) > 1e-9:
            raise GridError(f"angles {angles} do not form the n={n} grid")
    bg = None
    if subtract and ingested.background:
        bg = aggregate_acquisitions(ingested.background)
    rates = []
    for j, group in enumerate(ingested.signal):
        r = aggregate_acquisitions(group.records)
        if bg is not None:
            if per_angle_background:
                # future per-angle measurements would slot in here; with a
                # single background run the same estimate applies to all
                pass
            r = subtract_background(r, bg)
        rates.append(r)
    return AngleScan(n, tuple(rates))


def per_acquisition_deltas(ingested: IngestedRecords,
                           subtract: bool = True) -> list[float]:
    """Delta_min evaluated on each acquisition's own scan; feeds the
    resampling sigma.  Requires equally many acquisitions per angle."""
    from .inequalities import delta_min

    counts = {len(g.records) for g in ingested.signal}
    if len(counts) != 1:
        return []
    n_acq = counts.pop()
    if n_acq < 2:
        return []
    bg_rate = 0.0
    if subtract and ingested.background:
        bg_rate = aggregate_acquisitions(ingested.background).value
    out = []
    for qi in range(n_acq):
        vals = []
        for group in ingested.signal:
            rec = group.records[qi]
            vals.append(rec.coincidences / rec.duration_s - bg_rate)
        try:
            scan = AngleScan.from_values(vals)
            out.append(delta_min(scan, radicand_floor=-math.inf).value)
        except DomainError:
            return []
    return out


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    offset: float
    correlation_r: float      # NaN when undefined (flat fit)
    r_defined: bool

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "offset": self.offset,
                "correlation_r": self.correlation_r,
                "r_defined": self.r_defined}


def fit_cos_squared(scan: AngleScan) -> FitResult:
    """Least-squares fit of a*cos^2(phi) + b; correlation_r is the
    Pearson correlation between fitted and observed rates."""
    import numpy as np

    phi = np.array(scan_grid(scan.n))
    y = np.array(scan.values, dtype=float)
    x = np.cos(phi) ** 2
    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = a * x + b
    sf, sy = float(np.std(fitted)), float(np.std(y))
    if sf <= 0.0 or sy <= 0.0:
        return FitResult(float(a), float(b), float("nan"), False)
    r = float(np.corrcoef(fitted, y)[0, 1])
    return FitResult(float(a), float(b), r, True)


def _verdicts(scan: AngleScan, eta, ingested: IngestedRecords,
              subtracted: bool, r_tot: UncertainValue | None) -> dict:
    deltas = per_acquisition_deltas(ingested, subtract=subtracted)
    delta_sigma = None
    if len(deltas) >= 2:
        m = sum(deltas) / len(deltas)
        var = sum((d - m) ** 2 for d in deltas) / (len(deltas) - 1)
        delta_sigma = math.sqrt(var / len(deltas))
    s1 = evaluate_santos1(scan, eta)
    s2 = evaluate_santos2(scan, eta, delta_sigma=delta_sigma)
    ch = ch_statistic(scan, r_tot=r_tot)
    return {"santos1": s1.to_dict(), "santos2": s2.to_dict(),
            "ch": ch.to_dict()}


def run_report(ingested: IngestedRecords, eta,
               r_tot: UncertainValue | None = None,
               provenance: dict | None = None) -> dict:
    """Full report: per-angle scan, cos^2 fit, and all three verdicts in
    both background-subtraction variants.  Pure function of its inputs."""
    scan_sub = build_scan(ingested, subtract=True)
    scan_raw = build_scan(ingested, subtract=False)
    report = {
        "provenance": provenance or {},
        "eta": float(eta) if not hasattr(eta, "eta") else eta.eta,
        "n": ingested.n,
        "acquisitions_per_angle": [len(g.records) for g in ingested.signal],
        "background_records": len(ingested.background),
        "scan": {
            "phi_rad": [a.radians for a in scan_sub.angles],
            "subtracted": {"rate": scan_sub.values, "sigma": scan_sub.sigmas},
            "unsubtracted": {"rate": scan_raw.values, "sigma": scan_raw.sigmas},
        },
        "fit": {
            "subtracted": fit_cos_squared(scan_sub).to_dict(),
            "unsubtracted": fit_cos_squared(scan_raw).to_dict(),
        },
        "verdicts": {
            "background_subtracted": _verdicts(scan_sub, eta, ingested,
                                               True, r_tot),
            "unsubtracted": _verdicts(scan_raw, eta, ingested, False, r_tot),
        },
    }
    return report


def plot_data_rows(ingested: IngestedRecords) -> list[dict]:
    """phi_rad, rate, sigma, model_rate rows for external plotting."""
    scan = build_scan(ingested, subtract=True)
    fit = fit_cos_squared(scan)
    import numpy as np

    rows = []
    for a, r, s in zip(scan.angles, scan.values, scan.sigmas):
        model = fit.amplitude * float(np.cos(a.radians)) ** 2 + fit.offset
        rows.append({"phi_rad": a.radians, "rate": r, "sigma": s,
                     "model_rate": model})
    return rows


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def round_sig(x, digits: int = 6):
    """Recursively round floats to `digits` significant digits for
    report serialization."""
    if isinstance(x, float):
        if math.isfinite(x) and x != 0.0:
            return float(f"{x:.{digits}g}")
        return x
    if isinstance(x, dict):
        return {k: round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    return x


def simulate_records(cfg, n: int, seed: int, workers: int = 1) -> list[dict]:
    """Run the full simulated protocol and return CSV-schema rows."""
    signal, background = simulate_scan(cfg, n, seed, workers=workers)
    return records_to_rows(signal, background)
