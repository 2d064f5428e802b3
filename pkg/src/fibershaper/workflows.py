"""Experiment workflows: distance sweeps, reach, and format comparison.

These compose the model stack (coefficients -> optimal launch -> rate) or
the simulator into the row-oriented results the CLI serializes. Reach is
defined as the largest distance at which a format still sustains a target
rate, found by interpolating its sweep.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import caching
from .air import gh_air
from .constellations import Constellation4D, normalize_unit_energy
from .errors import ConfigError
from .fibersim import SimConfig, ssfm_air
from .linkmodel import (LinkConfig, TxConfig, compute_nli_coefficients,
                        optimal_launch, watts_to_dbm)
from .optimizer import target_distance

_BACKENDS = ("model", "ssfm")


@dataclass(frozen=True)
class SweepRow:
    n_spans: int
    distance_km: float
    p_opt_dbm: float
    snr_4d_db: float
    air_bit_per_4d: float
    backend: str


@dataclass
class SweepResult:
    constellation: str
    link_hash: str
    rows: list

    def __post_init__(self):
        spans = [r.n_spans for r in self.rows]
        if spans != sorted(spans):
            self.rows = sorted(self.rows, key=lambda r: r.n_spans)

    def distances(self) -> np.ndarray:
        return np.array([r.distance_km for r in self.rows])

    def rates(self) -> np.ndarray:
        return np.array([r.air_bit_per_4d for r in self.rows])


@dataclass(frozen=True)
class FormatComparison:
    name: str
    reach_km: float
    rate_at_reference: float
    rate_gain: float
    reach_gain_pct: float


@dataclass
class CompareReport:
    reference: str
    reference_distance_km: float
    rate_threshold: float
    entries: list
    sweeps: dict


def link_fingerprint(link: LinkConfig, tx: TxConfig) -> str:
    return caching.config_hash({"link": asdict(link), "tx": asdict(tx)})


def sweep_distance(C: Constellation4D, link: LinkConfig, tx: TxConfig,
                   span_range: Sequence[int], backend: str = "model", *,
                   sim: Optional[SimConfig] = None, cache_dir=None,
                   points_per_dim: int = 8) -> SweepResult:
    """Rate vs distance at per-distance optimal launch power.

    The ssfm backend reuses the model's optimal power (re-optimizing power
    inside the simulator would be prohibitively slow) and bumps the rng seed
    per row so rows are statistically independent.
    """
    spans = sorted(set(int(n) for n in span_range))
    if not spans:
        raise ConfigError("span_range is empty")
    if spans[0] < 1:
        raise ConfigError("span counts must be positive")
    if backend not in _BACKENDS:
        raise ConfigError(f"backend must be one of {_BACKENDS}")
    sim = SimConfig() if sim is None else sim

    Cn = normalize_unit_energy(C)
    rows = []
    for n in spans:
        coeffs = compute_nli_coefficients(link, tx, n, cache_dir=cache_dir)
        p_opt, profile, snr4d = optimal_launch(
            Cn, link, tx, n, coeffs=coeffs, cache_dir=cache_dir)
        if backend == "model":
            rate = gh_air(Cn, profile, points_per_dim).rate_bit_per_4d
        else:
            from dataclasses import replace
            est = ssfm_air(Cn, link, tx, n, p_opt,
                           replace(sim, rng_seed=sim.rng_seed + n))
            rate = est.rate_bit_per_4d
        rows.append(SweepRow(
            n_spans=n,
            distance_km=n * link.span_length_km,
            p_opt_dbm=watts_to_dbm(p_opt),
            snr_4d_db=10.0 * math.log10(snr4d),
            air_bit_per_4d=rate,
            backend=backend,
        ))
    name = C.name or "unnamed"
    return SweepResult(constellation=name,
                       link_hash=link_fingerprint(link, tx), rows=rows)


def reach(sweep: SweepResult, rate_threshold: float) -> float:
    """Distance (km) where the sweep's rate crosses the threshold.

    Uses the last crossing (rates from simulation can jitter), linearly
    interpolated in distance between the bracketing rows.
    """
    rows = sweep.rows
    if len(rows) < 2:
        raise ConfigError("reach needs at least two sweep rows")
    d = sweep.distances()
    r = sweep.rates()
    if r[0] < rate_threshold:
        raise ConfigError(
            f"threshold {rate_threshold} already unmet at the shortest "
            f"distance {d[0]:.0f} km; extend the sweep downward")
    for i in range(len(rows) - 2, -1, -1):
        if r[i] >= rate_threshold >= r[i + 1]:
            if r[i] == r[i + 1]:
                return float(d[i + 1])
            frac = (rate_threshold - r[i]) / (r[i + 1] - r[i])
            return float(d[i] + frac * (d[i + 1] - d[i]))
    raise ConfigError(
        f"threshold {rate_threshold} still met at the longest distance "
        f"{d[-1]:.0f} km; extend the sweep upward")


def rate_at_distance(sweep: SweepResult, distance_km: float) -> float:
    """Linearly interpolated rate at a distance inside the sweep range."""
    d = sweep.distances()
    if not d[0] <= distance_km <= d[-1]:
        raise ConfigError(
            f"distance {distance_km:.0f} km outside sweep range "
            f"[{d[0]:.0f}, {d[-1]:.0f}]")
    return float(np.interp(distance_km, d, sweep.rates()))


def compare_sweeps(sweeps: Sequence[SweepResult],
                   rate_threshold: float) -> CompareReport:
    """Pairwise gains of each sweep against the first one.

    The reference distance is the first format's reach at the threshold;
    rate gains are evaluated there, reach gains as percentages of the
    reference reach.
    """
    sweeps = list(sweeps)
    if len(sweeps) < 2:
        raise ConfigError("compare needs at least two sweeps")
    ref_reach = reach(sweeps[0], rate_threshold)
    entries = []
    ref_rate = rate_at_distance(sweeps[0], ref_reach)
    for sw in sweeps:
        rk = reach(sw, rate_threshold)
        rate_ref = rate_at_distance(sw, ref_reach)
        entries.append(FormatComparison(
            name=sw.constellation,
            reach_km=rk,
            rate_at_reference=rate_ref,
            rate_gain=rate_ref - ref_rate,
            reach_gain_pct=100.0 * (rk - ref_reach) / ref_reach,
        ))
    return CompareReport(
        reference=sweeps[0].constellation,
        reference_distance_km=ref_reach,
        rate_threshold=rate_threshold,
        entries=entries,
        sweeps={sw.constellation: sw for sw in sweeps},
    )


def _auto_span_window(n_lo: int, n_hi: int) -> list:
    lo = max(1, int(math.floor(0.85 * n_lo)))
    hi = int(math.ceil(1.15 * n_hi)) + 1
    step = max(1, (hi - lo) // 12)
    spans = list(range(lo, hi + 1, step))
    if spans[-1] < hi:
        spans.append(hi)
    return spans


def compare(formats: Sequence[Constellation4D], link: LinkConfig,
            tx: TxConfig, rate_threshold: float, *,
            span_range: Optional[Sequence[int]] = None,
            backend: str = "model", sim: Optional[SimConfig] = None,
            cache_dir=None, points_per_dim: int = 8) -> CompareReport:
    """Sweep every format and report gains against the first one.

    Without an explicit span_range, each format gets a window covering both
    its own threshold crossing and the reference format's, so reach and the
    reference-distance rate are always interpolable.
    """
    formats = list(formats)
    if len(formats) < 2:
        raise ConfigError("compare needs at least two formats")
    cards = {C.M for C in formats}
    if len(cards) != 1:
        raise ConfigError(f"mixed constellation sizes {sorted(cards)}")

    if span_range is None:
        stars = [
            target_distance(C, link, tx, rate_threshold,
                            cache_dir=cache_dir,
                            points_per_dim=points_per_dim)
            for C in formats
        ]
        windows = [
            _auto_span_window(min(s, stars[0]), max(s, stars[0]))
            for s in stars
        ]
    else:
        windows = [list(span_range)] * len(formats)

    sweeps = []
    seen = set()
    for C, w in zip(formats, windows):
        sw = sweep_distance(C, link, tx, w, backend, sim=sim,
                            cache_dir=cache_dir,
                            points_per_dim=points_per_dim)
        if sw.constellation in seen:
            sw.constellation = f"{sw.constellation}#{len(seen)}"
        seen.add(sw.constellation)
        sweeps.append(sw)
    return compare_sweeps(sweeps, rate_threshold)
