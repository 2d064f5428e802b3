"""Gradient shaping of 4D constellations against the link model.

The shaping problem is: maximize the quadrature rate over the 4M point
coordinates subject to unit mean energy, where the decoding-metric noise is
not fixed but must equal the noise the trial constellation itself produces
at its own optimal launch power. That constraint pins down the covariance
completely, so it is eliminated: every iterate recomputes optimal launch and
noise from the link model, then takes a projected-gradient step on the
energy sphere with a backtracking line search on the composite objective.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .air import gh_air, gh_air_gradient
from .constellations import Constellation4D, normalize_unit_energy
from .errors import ConfigError, NumericalError
from .linkmodel import (LinkConfig, NoiseProfile, TxConfig,
                        compute_nli_coefficients, optimal_launch,
                        watts_to_dbm)

_STATUSES = ("converged", "max-iterations", "step-collapse")


@dataclass(frozen=True)
class StepRule:
    """Backtracking line-search parameters.

    `initial_step` caps the step size; after an accepted step the next trial
    starts from the last accepted size times `growth` (capped again), so the
    search adapts without rescanning from the cap every iteration.
    """

    initial_step: float = 0.25
    shrink: float = 0.5
    growth: float = 1.5
    sufficient_increase: float = 1e-4
    max_backtracks: int = 40
    min_step: float = 1e-12

    def __post_init__(self):
        if self.initial_step <= 0 or self.min_step <= 0:
            raise ConfigError("step sizes must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ConfigError("shrink must lie in (0, 1)")
        if self.growth < 1.0:
            raise ConfigError("growth must be at least 1")
        if self.sufficient_increase <= 0:
            raise ConfigError("sufficient_increase must be positive")
        if self.max_backtracks < 1:
            raise ConfigError("max_backtracks must be at least 1")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 200
    gradient_tolerance: float = 1e-4
    step_rule: StepRule = field(default_factory=StepRule)
    constraint_mode: str = "eliminate"  # or "frozen"
    snr_refresh_every: int = 1
    rng_seed: int = 2021
    points_per_dim: int = 8
    multi_start: int = 1
    perturb_scale: float = 0.02
    min_pairwise_distance: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be at least 1")
        if self.gradient_tolerance <= 0:
            raise ConfigError("gradient_tolerance must be positive")
        if self.constraint_mode not in ("eliminate", "frozen"):
            raise ConfigError("constraint_mode must be eliminate or frozen")
        if self.snr_refresh_every < 1:
            raise ConfigError("snr_refresh_every must be at least 1")
        if self.multi_start < 1:
            raise ConfigError("multi_start must be at least 1")
        if self.perturb_scale < 0:
            raise ConfigError("perturb_scale must be nonnegative")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective_bit_per_4d: float
    grad_norm: float
    p_opt_dbm: float
    snr_4d_db: float
    step_size: float


@dataclass
class OptimizationTrace:
    rows: list
    status: str

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ConfigError(f"unknown terminal status {self.status!r}")

    def objectives(self) -> np.ndarray:
        return np.array([r.objective_bit_per_4d for r in self.rows])

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]


def _min_pairwise_distance(points: np.ndarray) -> float:
    d = points[:, None, :] - points[None, :, :]
    dist2 = np.sum(d * d, axis=2)
    np.fill_diagonal(dist2, np.inf)
    return math.sqrt(float(dist2.min()))


def _project_sphere(points: np.ndarray) -> np.ndarray:
    # retraction onto mean_energy == 1, i.e. ||vec||^2 == M
    M = points.shape[0]
    nrm2 = float(np.sum(points * points))
    if nrm2 <= 0:
        raise NumericalError("iterate collapsed to the origin")
    return points * math.sqrt(M / nrm2)


def _operating_point(C: Constellation4D, link, tx, n_spans, coeffs,
                     cache_dir) -> tuple:
    p_opt, profile, snr4d = optimal_launch(
        C, link, tx, n_spans, coeffs=coeffs, cache_dir=cache_dir)
    return p_opt, profile, snr4d


def _single_run(C0: Constellation4D, link, tx, n_spans,
                cfg: OptimizerConfig, coeffs, cache_dir):
    rule = cfg.step_rule
    x = normalize_unit_energy(C0).points.copy()
    label = C0.name or "seed"

    def iterate(points: np.ndarray) -> Constellation4D:
        return Constellation4D(points=points, name=label)

    Ccur = iterate(x)
    p_opt, profile, snr4d = _operating_point(
        Ccur, link, tx, n_spans, coeffs, cache_dir)
    frozen_profile = profile if cfg.constraint_mode == "frozen" else None

    def objective_at(C: Constellation4D, profile: NoiseProfile) -> float:
        val = gh_air(C, profile, cfg.points_per_dim).rate_bit_per_4d
        if not math.isfinite(val):
            err = NumericalError(
                f"non-finite objective for iterate of {label!r}")
            err.iterate = C.points.copy()
            raise err
        return val

    obj = objective_at(Ccur, profile)
    rows = []
    best = (obj, Ccur)
    step = rule.initial_step
    status = "max-iterations"

    for it in range(cfg.max_iterations + 1):
        grad = gh_air_gradient(Ccur, profile, cfg.points_per_dim)
        # tangent component on the energy sphere
        radial = float(np.sum(grad * Ccur.points)) / float(
            np.sum(Ccur.points * Ccur.points))
        gt = grad - radial * Ccur.points
        gnorm = float(np.linalg.norm(gt))
        rows.append(TraceRow(
            iteration=it,
            objective_bit_per_4d=obj,
            grad_norm=gnorm,
            p_opt_dbm=watts_to_dbm(profile.launch_power_w),
            snr_4d_db=10.0 * math.log10(snr4d),
            step_size=0.0 if it == 0 else rows[-1].step_size,
        ))
        if gnorm <= cfg.gradient_tolerance:
            status = "converged"
            break
        if it == cfg.max_iterations:
            status = "max-iterations"
            break

        # backtracking on the composite objective: the trial constellation
        # is renormalized, its operating point refreshed (unless frozen),
        # and the step accepted only on sufficient increase
        alpha = min(rule.initial_step, step * rule.growth)
        accepted = False
        for _ in range(rule.max_backtracks):
            trial_pts = _project_sphere(Ccur.points + alpha * gt)
            if _min_pairwise_distance(trial_pts) < cfg.min_pairwise_distance:
                alpha *= rule.shrink
                continue
            Ctrial = iterate(trial_pts)
            if frozen_profile is not None:
                t_profile, t_popt, t_snr = (frozen_profile,
                                            frozen_profile.launch_power_w,
                                            snr4d)
            elif it % cfg.snr_refresh_every == 0:
                t_popt, t_profile, t_snr = _operating_point(
                    Ctrial, link, tx, n_spans, coeffs, cache_dir)
            else:
                t_profile, t_popt, t_snr = profile, p_opt, snr4d
            t_obj = objective_at(Ctrial, t_profile)
            if t_obj >= obj + rule.sufficient_increase * alpha * gnorm**2:
                accepted = True
                break
            alpha *= rule.shrink
            if alpha < rule.min_step:
                break
        if not accepted:
            status = "step-collapse"
            break

        Ccur, obj, profile, p_opt, snr4d = Ctrial, t_obj, t_profile, t_popt, t_snr
        step = alpha
        rows[-1] = replace(rows[-1], step_size=alpha)
        if obj > best[0]:
            best = (obj, Ccur)

    # replace the last row's step with the final accepted size for context
    trace = OptimizationTrace(rows=rows, status=status)
    return best[1], best[0], trace


def optimize(C0: Constellation4D, link: LinkConfig, tx: TxConfig,
             n_spans: int, cfg: Optional[OptimizerConfig] = None, *,
             coeffs=None, cache_dir=None):
    """Shape C0 against the link; returns (best constellation, trace).

    With multi_start > 1 the search also runs from randomly perturbed copies
    of the seed (deterministic given rng_seed) and keeps the best final
    objective; the returned trace belongs to the winning run.
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    if coeffs is None:
        coeffs = compute_nli_coefficients(
            link, tx, n_spans, cache_dir=cache_dir)

    seeds = [normalize_unit_energy(C0)]
    if cfg.multi_start > 1:
        rng = np.random.default_rng(cfg.rng_seed)
        base = seeds[0].points
        scale = cfg.perturb_scale * math.sqrt(np.mean(base**2))
        for _ in range(cfg.multi_start - 1):
            pts = base + rng.normal(0.0, scale, base.shape)
            seeds.append(Constellation4D(
                points=_project_sphere(pts), name=C0.name))

    results = [
        _single_run(s, link, tx, n_spans, cfg, coeffs, cache_dir)
        for s in seeds
    ]
    best_C, best_obj, best_trace = max(results, key=lambda r: r[1])
    final = normalize_unit_energy(best_C)
    return final, best_trace


def select_seed(formats: Sequence[Constellation4D], link: LinkConfig,
                tx: TxConfig, n_spans: int, *, coeffs=None, cache_dir=None,
                points_per_dim: int = 8) -> Constellation4D:
    """Best catalog member by model rate at its own optimal launch power.

    Ties go to the lower optimal power, then to catalog order.
    """
    formats = list(formats)
    if not formats:
        raise ConfigError("empty format list")
    cards = {C.M for C in formats}
    if len(cards) != 1:
        raise ConfigError(f"mixed constellation sizes {sorted(cards)}")
    if coeffs is None:
        coeffs = compute_nli_coefficients(
            link, tx, n_spans, cache_dir=cache_dir)

    best = None
    for idx, C in enumerate(formats):
        Cn = normalize_unit_energy(C)
        p_opt, profile, _ = optimal_launch(
            Cn, link, tx, n_spans, coeffs=coeffs, cache_dir=cache_dir)
        rate = gh_air(Cn, profile, points_per_dim).rate_bit_per_4d
        key = (rate, -p_opt, -idx)
        if best is None or key > best[0]:
            best = (key, C)
    return best[1]


def _rate_at_distance(C, link, tx, n_spans, cache_dir, points_per_dim):
    coeffs = compute_nli_coefficients(link, tx, n_spans, cache_dir=cache_dir)
    _, profile, _ = optimal_launch(
        C, link, tx, n_spans, coeffs=coeffs, cache_dir=cache_dir)
    return gh_air(C, profile, points_per_dim).rate_bit_per_4d


def target_distance(C_baseline: Constellation4D, link: LinkConfig,
                    tx: TxConfig, rate_target: float, *, cache_dir=None,
                    points_per_dim: int = 8, max_spans: int = 4096) -> int:
    """Largest span count at which the baseline still reaches rate_target.

    The rate at per-distance optimal power decreases with distance, so the
    search doubles until the target is lost and then bisects.
    """
    Cb = normalize_unit_energy(C_baseline)
    if not 0.0 < rate_target < Cb.bits:
        raise ConfigError("rate_target must lie in (0, log2 M)")

    def rate(n):
        return _rate_at_distance(Cb, link, tx, n, cache_dir, points_per_dim)

    if rate(1) < rate_target:
        raise ConfigError(
            f"rate target {rate_target} bit/4D unreachable even at 1 span")
    lo = 1
    hi = 2
    while hi <= max_spans and rate(hi) >= rate_target:
        lo, hi = hi, hi * 2
    if hi > max_spans:
        raise ConfigError(
            f"rate target still met at {max_spans} spans; raise max_spans")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rate(mid) >= rate_target:
            lo = mid
        else:
            hi = mid
    return lo
