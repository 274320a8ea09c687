"""Metrology harness: transfer sweeps, code-density DNL/INL, single-shot
precision and the resistive-sensor front end."""

import csv
import math
import statistics
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Optional

import numpy as np

from .dtdc import TdcConfig, convert
from .errors import InvalidConfig, NonPositiveInterval, RangeExceeded
from .fine import RNG_ALGORITHM

CURVE_COLUMNS = ("t_in_fs", "phase_fs", "d_out", "time_fs")
DENSITY_COLUMNS = ("bin", "count", "dnl", "inl")
SENSOR_COLUMNS = ("r_ohm", "t_fs", "d_out", "time_fs", "status")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def draw_phases(t_clk: int, n: int, seed: int) -> list[int]:
    """``n`` start phases drawn uniformly from the integers ``[0, t_clk)``."""
    return [int(x) for x in make_rng(seed).integers(0, t_clk, size=n)]


@dataclass(frozen=True)
class CurvePoint:
    t_in: int
    phase: int
    d_out: int
    time_fs: int


@dataclass
class TransferCurve:
    points: list[CurvePoint]
    seed: Optional[int] = None
    rng: Optional[str] = None

    def transitions(self) -> list[int]:
        """``t_in`` values at which the code changes."""
        return [b.t_in for a, b in zip(self.points, self.points[1:]) if b.d_out != a.d_out]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for p in self.points:
            w.writerow((p.t_in, p.phase, p.d_out, p.time_fs))


def transfer_sweep(
    cfg: TdcConfig,
    t_min: int,
    t_max: int,
    step: int,
    phase: int = 0,
    seed: Optional[int] = None,
    mode: str = "behavioral",
) -> TransferCurve:
    """Convert ``t_min, t_min + step, ... <= t_max``.

    With ``seed`` set every sample gets its own uniformly drawn start phase;
    otherwise all samples start at ``phase``.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    if t_max < t_min:
        raise ValueError("t_max must be >= t_min")
    t_ins = list(range(t_min, t_max + 1, step))
    phases = draw_phases(cfg.t_clk, len(t_ins), seed) if seed is not None else [phase] * len(t_ins)
    pts = []
    for t_in, ph in zip(t_ins, phases):
        r = convert(ph, ph + t_in, cfg, mode)
        pts.append(CurvePoint(t_in, ph, r.d_out, r.time_fs))
    return TransferCurve(pts, seed, RNG_ALGORITHM if seed is not None else None)


@dataclass
class DensityReport:
    bin_edges: list[int]
    counts: list[int]
    dnl: list[float]
    inl: list[float]
    n_samples: int
    seed: Optional[int] = None
    rng: Optional[str] = None

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def max_abs_dnl(self) -> float:
        return max(abs(x) for x in self.dnl)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DENSITY_COLUMNS)
        for i, (c, d, s) in enumerate(zip(self.counts, self.dnl, self.inl)):
            w.writerow((self.bin_edges[i], c, repr(d), repr(s)))


def density_from_counts(counts, seed=None, rng=None) -> DensityReport:
    """DNL/INL from an exact histogram; ratios are formed only at the end."""
    counts = [int(c) for c in counts]
    n = sum(counts)
    if n < 1:
        raise ValueError("histogram is empty")
    n_bins = len(counts)
    dnl_exact = [Fraction(c * n_bins, n) - 1 for c in counts]
    inl_exact = []
    acc = Fraction(0)
    for d in dnl_exact:
        acc += d
        inl_exact.append(acc)
    return DensityReport(
        bin_edges=list(range(n_bins + 1)),
        counts=counts,
        dnl=[float(d) for d in dnl_exact],
        inl=[float(s) for s in inl_exact],
        n_samples=n,
        seed=seed,
        rng=rng,
    )


def code_density(cfg: TdcConfig, t_fixed: int, n_samples: int, seed: int, mode: str = "behavioral") -> DensityReport:
    """Histogram the start interpolator's sub-period code under uniform phase.

    Each sample converts ``[phase, phase + t_fixed)`` with a fresh phase; the
    binned value is ``n_f1 mod scale_k``, one bin per tap.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    k = cfg.scale_k
    counts = [0] * k
    for ph in draw_phases(cfg.t_clk, n_samples, seed):
        counts[convert(ph, ph + t_fixed, cfg, mode).n_f1 % k] += 1
    return density_from_counts(counts, seed, RNG_ALGORITHM)


def dnl_bound(n_samples: int, n_bins: int, sigmas: float = 3.0, familywise: bool = True) -> float:
    """Multinomial noise bound on max|DNL| for an ideal converter.

    Per bin the DNL has standard deviation ``sqrt((1 - p) / (n p))`` with
    ``p = 1/n_bins``.  With ``familywise`` the per-bin z-score is widened
    (Sidak) so that the chance of *any* bin exceeding the bound equals the
    two-sided tail of ``sigmas`` for a single bin.
    """
    p = 1.0 / n_bins
    sd = math.sqrt((1 - p) / (n_samples * p))
    z = sigmas
    if familywise:
        nd = statistics.NormalDist()
        alpha = 2 * (1 - nd.cdf(sigmas))
        per_bin = 1 - (1 - alpha) ** (1 / n_bins)
        z = nd.inv_cdf(1 - per_bin / 2)
    return z * sd


def single_shot_precision(
    cfg: TdcConfig,
    t_in: int,
    n_trials: int,
    seed: Optional[int] = None,
    phase: Optional[int] = None,
    mode: str = "behavioral",
) -> tuple[float, float]:
    """Mean and population standard deviation of ``time_fs`` over repeated shots.

    Phases are random (seeded) unless a fixed ``phase`` is given.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be >= 2")
    if phase is None:
        if seed is None:
            raise ValueError("random phases need a seed")
        phases = draw_phases(cfg.t_clk, n_trials, seed)
    else:
        phases = [phase] * n_trials
    times = [convert(ph, ph + t_in, cfg, mode).time_fs for ph in phases]
    mean = Fraction(sum(times), n_trials)
    var = sum((Fraction(t) - mean) ** 2 for t in times) / n_trials
    return float(mean), math.sqrt(var)


@dataclass(frozen=True)
class SensorModel:
    """Resistance-to-period front end, ``T = alpha * R``; ``alpha`` in fs per Ohm."""

    alpha: float
    r_min: float
    r_max: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidConfig(f"alpha must be > 0, got {self.alpha}")
        if self.r_min < 0 or self.r_min > self.r_max:
            raise InvalidConfig(f"need 0 <= r_min <= r_max, got {self.r_min}, {self.r_max}")

    def period(self, r) -> int:
        t = Decimal(repr(float(self.alpha))) * Decimal(repr(float(r)))
        return int(t.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


@dataclass(frozen=True)
class SensorPoint:
    r: float
    t: int
    d_out: Optional[int]
    time_fs: Optional[int]
    status: str = "ok"


def sensor_resistances(model: SensorModel, n_points: int, spacing: str = "linear") -> list[float]:
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if model.r_min == model.r_max or n_points == 1:
        return [float(model.r_min)]
    if spacing == "log":
        if model.r_min <= 0:
            raise InvalidConfig("log spacing needs r_min > 0")
        return [float(x) for x in np.geomspace(model.r_min, model.r_max, n_points)]
    if spacing != "linear":
        raise ValueError(f"spacing must be 'linear' or 'log', got {spacing!r}")
    return [float(x) for x in np.linspace(model.r_min, model.r_max, n_points)]


def sensor_sweep(
    model: SensorModel,
    cfg: TdcConfig,
    n_points: int,
    spacing: str = "linear",
    t_start: int = 0,
    flag_errors: bool = False,
    mode: str = "behavioral",
) -> list[SensorPoint]:
    """Map resistances to periods and convert each one.

    Out-of-range or non-positive periods raise, unless ``flag_errors`` is set,
    in which case the row carries a status instead of a code.
    """
    out = []
    for r in sensor_resistances(model, n_points, spacing):
        t = model.period(r)
        try:
            res = convert(t_start, t_start + t, cfg, mode)
        except (RangeExceeded, NonPositiveInterval) as exc:
            if not flag_errors:
                raise
            out.append(SensorPoint(r, t, None, None, type(exc).__name__))
            continue
        out.append(SensorPoint(r, t, res.d_out, res.time_fs, "overflow" if res.overflow else "ok"))
    return out


def write_sensor_csv(points: list[SensorPoint], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SENSOR_COLUMNS)
    for p in points:
        w.writerow((repr(p.r), p.t, "" if p.d_out is None else p.d_out, "" if p.time_fs is None else p.time_fs, p.status))
