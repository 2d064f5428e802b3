"""Command-line surface.

Subcommands map one-to-one onto the library workflows; a JSON config file
(`run` subcommand) drives the same workflows declaratively and writes every
artifact under a run directory together with the fully resolved config, so
a run re-executed from its echo reproduces the CSVs byte for byte.

Exit codes: 0 success, 2 configuration problems, 3 numerical failures.
"""

import functools
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import reports
from .air import gh_air
from .caching import config_hash
from .constellations import (catalog, energy_levels, get_format,
                             load_constellation, moments,
                             normalize_unit_energy, save_constellation)
from .errors import ConfigError, EmptyCatalogSlotError, NumericalError
from .fibersim import SimConfig, save_cloud, simulate
from .linkmodel import (LinkConfig, TxConfig, compute_nli_coefficients,
                        dbm_to_watts, optimal_launch, watts_to_dbm)
from .optimizer import OptimizerConfig, StepRule, optimize
from .workflows import compare as compare_formats
from .workflows import reach as sweep_reach
from .workflows import sweep_distance

_SCHEMA_VERSION = 1


def _cli_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(2)
        except NumericalError as e:
            click.echo(f"numerical failure: {e}", err=True)
            sys.exit(3)
    return wrapper


def _load_format(name_or_path: str):
    p = Path(name_or_path)
    if p.exists():
        return load_constellation(p)
    try:
        return get_format(name_or_path)
    except EmptyCatalogSlotError:
        raise
    except ConfigError:
        known = ", ".join(sorted(catalog()))
        raise ConfigError(
            f"{name_or_path!r} is neither a catalog name nor a file; "
            f"catalog: {known}")


def _parse_span_range(text: str):
    parts = text.split(":")
    try:
        nums = [int(x) for x in parts]
    except ValueError:
        raise ConfigError(f"bad span range {text!r}; use start:stop[:step]")
    if len(nums) == 1:
        return nums
    if len(nums) == 2:
        start, stop = nums
        step = 1
    elif len(nums) == 3:
        start, stop, step = nums
    else:
        raise ConfigError(f"bad span range {text!r}; use start:stop[:step]")
    if step < 1 or stop < start:
        raise ConfigError(f"bad span range {text!r}")
    return list(range(start, stop + 1, step))


def _link_options(f):
    opts = [
        click.option("--alpha-db-per-km", type=float, default=0.2,
                     show_default=True, help="fiber loss"),
        click.option("--dispersion-ps-nm-km", type=float, default=17.0,
                     show_default=True, help="chromatic dispersion"),
        click.option("--gamma-per-w-km", type=float, default=1.2,
                     show_default=True, help="Kerr coefficient"),
        click.option("--span-length-km", type=float, default=100.0,
                     show_default=True),
        click.option("--noise-figure-db", type=float, default=5.0,
                     show_default=True, help="EDFA noise figure"),
        click.option("--wavelength-nm", type=float, default=1550.0,
                     show_default=True),
        click.option("--symbol-rate-gbaud", type=float, default=50.0,
                     show_default=True),
        click.option("--rrc-rolloff", type=float, default=0.01,
                     show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _build_link_tx(kw) -> tuple:
    link = LinkConfig(
        alpha_db_per_km=kw.pop("alpha_db_per_km"),
        dispersion_ps_nm_km=kw.pop("dispersion_ps_nm_km"),
        gamma_per_w_km=kw.pop("gamma_per_w_km"),
        span_length_km=kw.pop("span_length_km"),
        edfa_noise_figure_db=kw.pop("noise_figure_db"),
        center_wavelength_nm=kw.pop("wavelength_nm"),
    )
    tx = TxConfig(
        symbol_rate_gbaud=kw.pop("symbol_rate_gbaud"),
        rrc_rolloff=kw.pop("rrc_rolloff"),
    )
    return link, tx


@click.group()
@click.version_option(package_name="fibershaper", prog_name="fibershaper")
def main():
    """Model-aided geometric shaping of dual-polarization 4D formats."""


@main.command("catalog")
@_cli_errors
def catalog_cmd():
    """List the built-in constellation formats."""
    for name, entry in sorted(catalog().items()):
        try:
            C = entry.loader()
            size = f"M={C.M:<4d}"
        except EmptyCatalogSlotError:
            size = "resvd "
        alias = f" (alias: {', '.join(entry.aliases)})" if entry.aliases else ""
        click.echo(f"{name:<14s} {size} {entry.description}{alias}")


@main.command("moments")
@click.argument("constellation")
@click.option("--tolerance", type=float, default=0.02, show_default=True,
              help="energy-level clustering tolerance")
@click.option("--output", type=click.Path(), default=None,
              help="write a CSV row instead of plain text")
@_cli_errors
def moments_cmd(constellation, tolerance, output):
    """Modulation moments and energy levels of a format."""
    C = normalize_unit_energy(_load_format(constellation))
    mom = moments(C)
    levels = energy_levels(C, tol=tolerance)
    if output:
        path = reports.write_moments_csv(
            output, C.name or constellation, C.M, mom, levels)
        click.echo(f"wrote {path}")
        return
    click.echo(f"{C.name or constellation}: M={C.M}, {C.bits:g} bit/4D")
    click.echo(f"  mu2      x={mom.mu2_x:.6f}  y={mom.mu2_y:.6f}")
    click.echo(f"  phi      x={mom.phi_x:+.6f}  y={mom.phi_y:+.6f}")
    click.echo(f"  psi      x={mom.psi_x:+.6f}  y={mom.psi_y:+.6f}")
    click.echo(f"  xpol4    {mom.xpol4:+.6f}")
    click.echo(f"  pseudo   x={mom.pseudo_x:.6f}  y={mom.pseudo_y:.6f}")
    lv = ", ".join(f"{e:.4f} (x{m})" for e, m in levels.levels)
    click.echo(f"  energy levels ({levels.count} at tol {tolerance:g}): {lv}")


@main.command("nli-coeffs")
@click.option("--spans", type=int, required=True)
@_link_options
@click.option("--seed", type=int, default=2021, show_default=True)
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--incoherent", is_flag=True,
              help="drop span-to-span phase coherence")
@_cli_errors
def nli_coeffs_cmd(spans, seed, cache_dir, incoherent, **kw):
    """Integrate the nonlinear-interference coefficients."""
    link, tx = _build_link_tx(kw)
    coeffs = compute_nli_coefficients(
        link, tx, spans, cache_dir=cache_dir, coherent=not incoherent,
        seed=10 * seed)
    click.echo(f"spans={spans} provenance={coeffs.provenance} "
               f"rel_err={coeffs.relative_error:.2e}")
    for nm in ("chi0", "chi_phi", "chi_psi", "chi_xpol"):
        x = getattr(coeffs, nm + "_x")
        y = getattr(coeffs, nm + "_y")
        click.echo(f"  {nm:<9s} x={x:.6g}  y={y:.6g}")


def _air_row(C, link, tx, n_spans, power_dbm, points_per_dim, cache_dir):
    coeffs = compute_nli_coefficients(link, tx, n_spans, cache_dir=cache_dir)
    if power_dbm is None:
        p_w, profile, snr4d = optimal_launch(
            C, link, tx, n_spans, coeffs=coeffs, cache_dir=cache_dir)
    else:
        from .linkmodel import effective_snr
        p_w = dbm_to_watts(power_dbm)
        est = effective_snr(C, p_w, link, tx, n_spans, coeffs=coeffs)
        profile, snr4d = est.noise, est.snr_4d
    rate = gh_air(C, profile, points_per_dim)
    return {
        "constellation": C.name or "unnamed",
        "n_spans": n_spans,
        "distance_km": n_spans * link.span_length_km,
        "launch_power_dbm": watts_to_dbm(p_w),
        "snr_4d_db": 10.0 * math.log10(snr4d),
        "air_bit_per_4d": rate.rate_bit_per_4d,
        "backend": rate.backend,
        "std_error": rate.std_error,
    }


@main.command("air")
@click.argument("constellation")
@click.option("--spans", type=int, required=True)
@click.option("--power-dbm", type=float, default=None,
              help="launch power; omit to use the per-distance optimum")
@click.option("--points-per-dim", type=int, default=8, show_default=True)
@_link_options
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--output", type=click.Path(), default=None,
              help="write the result as a CSV row")
@_cli_errors
def air_cmd(constellation, spans, power_dbm, points_per_dim, cache_dir,
            output, **kw):
    """Model rate of a format at a distance."""
    link, tx = _build_link_tx(kw)
    C = normalize_unit_energy(_load_format(constellation))
    row = _air_row(C, link, tx, spans, power_dbm, points_per_dim, cache_dir)
    if output:
        click.echo(f"wrote {reports.write_air_csv(output, [row])}")
    click.echo(f"{row['constellation']}: {row['air_bit_per_4d']:.4f} bit/4D "
               f"at {row['distance_km']:.0f} km, "
               f"P={row['launch_power_dbm']:+.2f} dBm, "
               f"snr_4d={row['snr_4d_db']:.2f} dB")


@main.command("optimize")
@click.argument("constellation")
@click.option("--spans", type=int, required=True)
@click.option("--max-iterations", type=int, default=200, show_default=True)
@click.option("--gradient-tolerance", type=float, default=1e-4,
              show_default=True)
@click.option("--multi-start", type=int, default=1, show_default=True)
@click.option("--points-per-dim", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=2021, show_default=True)
@_link_options
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default="shaping-run",
              show_default=True)
@_cli_errors
def optimize_cmd(constellation, spans, max_iterations, gradient_tolerance,
                 multi_start, points_per_dim, seed, cache_dir, output_dir,
                 **kw):
    """Shape a seed format against the link model."""
    link, tx = _build_link_tx(kw)
    C0 = normalize_unit_energy(_load_format(constellation))
    cfg = OptimizerConfig(
        max_iterations=max_iterations,
        gradient_tolerance=gradient_tolerance,
        multi_start=multi_start,
        points_per_dim=points_per_dim,
        rng_seed=seed,
    )
    Copt, trace = optimize(C0, link, tx, spans, cfg, cache_dir=cache_dir)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    Copt.name = f"{C0.name or 'seed'}-shaped"
    save_constellation(Copt, out / "optimized.txt")
    reports.write_trace_csv(out / "trace.csv", trace)
    reports.plot_trace(trace, out / "trace.png")
    reports.plot_constellation(Copt, out / "optimized.png")
    first, last = trace.rows[0], trace.final
    click.echo(f"status={trace.status} iterations={last.iteration}")
    click.echo(f"objective {first.objective_bit_per_4d:.4f} -> "
               f"{last.objective_bit_per_4d:.4f} bit/4D "
               f"({last.objective_bit_per_4d - first.objective_bit_per_4d:+.4f})")
    click.echo(f"artifacts in {out}")


@main.command("ssfm")
@click.argument("constellation")
@click.option("--spans", type=int, required=True)
@click.option("--power-dbm", type=float, default=None,
              help="launch power; omit to use the model optimum")
@click.option("--symbols", type=int, default=65536, show_default=True)
@click.option("--samples-per-symbol", type=int, default=4, show_default=True)
@click.option("--steps-per-span", type=int, default=1000, show_default=True)
@click.option("--ase", type=click.Choice(["per-span", "off"]),
              default="per-span", show_default=True)
@click.option("--scaling", type=click.Choice(["manakov-8/9", "full-gamma"]),
              default="manakov-8/9", show_default=True)
@click.option("--seed", type=int, default=2021, show_default=True)
@_link_options
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default=None,
              help="write cloud CSV/JSON and figures here")
@_cli_errors
def ssfm_cmd(constellation, spans, power_dbm, symbols, samples_per_symbol,
             steps_per_span, ase, scaling, seed, cache_dir, output_dir, **kw):
    """Split-step validation run; reports measured SNR and rate."""
    from .air import mc_air
    link, tx = _build_link_tx(kw)
    C = normalize_unit_energy(_load_format(constellation))
    sim = SimConfig(
        symbols_per_run=symbols,
        samples_per_symbol=samples_per_symbol,
        steps_per_span=steps_per_span,
        rng_seed=seed,
        nonlinearity_scaling=scaling,
        ase_injection=ase,
    )
    if power_dbm is None:
        coeffs = compute_nli_coefficients(
            link, tx, spans, cache_dir=cache_dir)
        p_w, _, _ = optimal_launch(
            C, link, tx, spans, coeffs=coeffs, cache_dir=cache_dir)
    else:
        p_w = dbm_to_watts(power_dbm)
    cloud = simulate(C, link, tx, spans, p_w, sim)
    est = mc_air(C, cloud.tx_indices, cloud.rx_points)
    click.echo(f"{C.name or constellation}: {spans} spans at "
               f"{watts_to_dbm(p_w):+.2f} dBm, {len(cloud)} symbols")
    click.echo(f"  snr_x={cloud.snr_x_db:.2f} dB  snr_y={cloud.snr_y_db:.2f} "
               f"dB  snr_4d={cloud.snr_4d_db:.2f} dB")
    click.echo(f"  rate={est.rate_bit_per_4d:.4f} "
               f"± {est.std_error:.4f} bit/4D (monte-carlo)")
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_cloud(cloud, out / "cloud.csv")
        reports.plot_cloud(cloud, C, out / "cloud.png")
        reports.write_air_csv(out / "air.csv", [{
            "constellation": C.name or constellation,
            "n_spans": spans,
            "distance_km": spans * link.span_length_km,
            "launch_power_dbm": watts_to_dbm(p_w),
            "snr_4d_db": cloud.snr_4d_db,
            "air_bit_per_4d": est.rate_bit_per_4d,
            "backend": est.backend,
            "std_error": est.std_error,
        }])
        click.echo(f"artifacts in {out}")


@main.command("sweep")
@click.argument("constellation")
@click.option("--spans", "span_text", required=True,
              help="span range start:stop[:step]")
@click.option("--backend", type=click.Choice(["model", "ssfm"]),
              default="model", show_default=True)
@click.option("--points-per-dim", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=2021, show_default=True)
@_link_options
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@_cli_errors
def sweep_cmd(constellation, span_text, backend, points_per_dim, seed,
              cache_dir, output_dir, **kw):
    """Rate vs distance sweep at per-distance optimal power."""
    link, tx = _build_link_tx(kw)
    C = normalize_unit_energy(_load_format(constellation))
    sim = SimConfig(rng_seed=seed)
    sweep = sweep_distance(
        C, link, tx, _parse_span_range(span_text), backend, sim=sim,
        cache_dir=cache_dir, points_per_dim=points_per_dim)
    for r in sweep.rows:
        click.echo(f"  {r.n_spans:>4d} spans {r.distance_km:>8.0f} km  "
                   f"P={r.p_opt_dbm:+.2f} dBm  snr={r.snr_4d_db:.2f} dB  "
                   f"{r.air_bit_per_4d:.4f} bit/4D")
    if output_dir:
        out = Path(output_dir)
        reports.write_sweep_csv(out / "sweep.csv", sweep)
        reports.plot_sweep([sweep], out / "sweep.png")
        click.echo(f"artifacts in {out}")


def _read_sweep_csv(path):
    import csv as _csv

    from .workflows import SweepResult, SweepRow
    rows = []
    with open(path, newline="") as fh:
        rd = _csv.DictReader(fh)
        missing = set(reports.SWEEP_COLUMNS) - set(rd.fieldnames or ())
        if missing:
            raise ConfigError(
                f"sweep CSV missing columns: {sorted(missing)}")
        for rec in rd:
            rows.append(SweepRow(
                n_spans=int(rec["n_spans"]),
                distance_km=float(rec["distance_km"]),
                p_opt_dbm=float(rec["p_opt_dbm"]),
                snr_4d_db=float(rec["snr_4d_db"]),
                air_bit_per_4d=float(rec["air_bit_per_4d"]),
                backend=rec["backend"],
            ))
    return SweepResult(constellation=Path(path).stem, link_hash="", rows=rows)


@main.command("reach")
@click.option("--sweep-csv", type=click.Path(exists=True), required=True)
@click.option("--threshold", type=float, required=True,
              help="rate threshold in bit/4D")
@_cli_errors
def reach_cmd(sweep_csv, threshold):
    """Interpolate the reach of a stored sweep at a rate threshold."""
    sweep = _read_sweep_csv(sweep_csv)
    d = sweep_reach(sweep, threshold)
    click.echo(f"reach at {threshold:g} bit/4D: {d:.1f} km")


@main.command("compare")
@click.argument("constellations", nargs=-1, required=True)
@click.option("--threshold", type=float, required=True,
              help="rate threshold in bit/4D")
@click.option("--spans", "span_text", default=None,
              help="optional explicit span range start:stop[:step]")
@click.option("--backend", type=click.Choice(["model", "ssfm"]),
              default="model", show_default=True)
@click.option("--points-per-dim", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=2021, show_default=True)
@_link_options
@click.option("--cache-dir", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@_cli_errors
def compare_cmd(constellations, threshold, span_text, backend,
                points_per_dim, seed, cache_dir, output_dir, **kw):
    """Reach and rate gains of formats against the first one."""
    if len(constellations) < 2:
        raise ConfigError("compare needs at least two formats")
    link, tx = _build_link_tx(kw)
    formats = [normalize_unit_energy(_load_format(c)) for c in constellations]
    span_range = _parse_span_range(span_text) if span_text else None
    report = compare_formats(
        formats, link, tx, threshold, span_range=span_range,
        backend=backend, sim=SimConfig(rng_seed=seed),
        cache_dir=cache_dir, points_per_dim=points_per_dim)
    click.echo(f"reference: {report.reference} reaches {threshold:g} bit/4D "
               f"at {report.reference_distance_km:.1f} km")
    for e in report.entries:
        click.echo(f"  {e.name:<16s} reach={e.reach_km:>9.1f} km "
                   f"({e.reach_gain_pct:+.1f}%)  rate at reference: "
                   f"{e.rate_at_reference:.4f} bit/4D ({e.rate_gain:+.4f})")
    if output_dir:
        out = Path(output_dir)
        reports.write_compare_csv(out / "compare.csv", report)
        for name, sw in report.sweeps.items():
            reports.write_sweep_csv(out / f"sweep-{name}.csv", sw)
        reports.plot_compare(report, out / "compare.png")
        click.echo(f"artifacts in {out}")


# ---------------------------------------------------------------------------
# declarative runs

_TOP_KEYS = {
    "schema_version", "workflow", "constellation", "formats", "link", "tx",
    "sim", "optimizer", "n_spans", "launch_power_dbm", "span_range",
    "backend", "rate_threshold", "points_per_dim", "seed", "cache_dir",
    "output_dir",
}
_WORKFLOWS = ("air", "sweep", "optimize", "compare", "ssfm")


def _check_keys(d: dict, allowed, context: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown {context} key {k!r}")


def _dataclass_from(d: dict, cls, context: str):
    _check_keys(d, cls.__dataclass_fields__, context)
    return cls(**d)


def _resolve_config(raw: dict, output_dir=None) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")
    if raw.get("schema_version") != _SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {_SCHEMA_VERSION}")
    workflow = raw.get("workflow")
    if workflow not in _WORKFLOWS:
        raise ConfigError(f"workflow must be one of {_WORKFLOWS}")

    seed = int(raw.get("seed", 2021))
    link = _dataclass_from(dict(raw.get("link", {})), LinkConfig, "link")
    tx = _dataclass_from(dict(raw.get("tx", {})), TxConfig, "tx")
    sim_d = dict(raw.get("sim", {}))
    sim_d.setdefault("rng_seed", seed)
    sim = _dataclass_from(sim_d, SimConfig, "sim")
    opt_d = dict(raw.get("optimizer", {}))
    step_d = opt_d.pop("step_rule", None)
    _check_keys(opt_d, OptimizerConfig.__dataclass_fields__, "optimizer")
    if step_d is not None:
        opt_d["step_rule"] = _dataclass_from(
            dict(step_d), StepRule, "step_rule")
    opt_d.setdefault("rng_seed", seed)
    opt = OptimizerConfig(**opt_d)

    span_range = raw.get("span_range")
    if span_range is not None:
        if (not isinstance(span_range, list) or
                not all(isinstance(x, int) for x in span_range) or
                len(span_range) not in (2, 3)):
            raise ConfigError(
                "span_range must be [start, stop] or [start, stop, step]")
        step = span_range[2] if len(span_range) == 3 else 1
        span_range = list(range(span_range[0], span_range[1] + 1, step))
        if not span_range:
            raise ConfigError("span_range is empty")

    resolved = {
        "schema_version": _SCHEMA_VERSION,
        "workflow": workflow,
        "constellation": raw.get("constellation"),
        "formats": raw.get("formats"),
        "link": asdict(link),
        "tx": asdict(tx),
        "sim": asdict(sim),
        "optimizer": {**asdict(opt),
                      "step_rule": asdict(opt.step_rule)},
        "n_spans": int(raw.get("n_spans", 10)),
        "launch_power_dbm": raw.get("launch_power_dbm"),
        "span_range": span_range,
        "backend": raw.get("backend", "model"),
        "rate_threshold": raw.get("rate_threshold"),
        "points_per_dim": int(raw.get("points_per_dim", 8)),
        "seed": seed,
        "cache_dir": raw.get("cache_dir"),
        "output_dir": (str(output_dir) if output_dir is not None
                       else raw.get("output_dir")),
    }
    return resolved


def run_config(config_path, output_dir=None) -> dict:
    """Execute a declarative experiment; returns {artifact name: path}.

    The run directory receives the resolved config (defaults filled in) so
    the run can be repeated exactly.
    """
    config_path = Path(config_path)
    try:
        raw = json.loads(config_path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    cfg = _resolve_config(raw, output_dir=output_dir)

    out = cfg["output_dir"]
    if out is None:
        out = f"runs/{cfg['workflow']}-{config_hash(cfg)[:8]}"
        cfg["output_dir"] = out
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    link = LinkConfig(**cfg["link"])
    tx = TxConfig(**cfg["tx"])
    sim = SimConfig(**cfg["sim"])
    opt_d = dict(cfg["optimizer"])
    opt_d["step_rule"] = StepRule(**opt_d["step_rule"])
    opt = OptimizerConfig(**opt_d)
    cache_dir = cfg["cache_dir"]
    workflow = cfg["workflow"]
    artifacts = {}

    def echo_config():
        p = out / "resolved_config.json"
        p.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        artifacts["resolved_config"] = p

    def need(key):
        if cfg.get(key) is None:
            raise ConfigError(f"workflow {workflow!r} requires {key!r}")
        return cfg[key]

    if workflow == "air":
        C = normalize_unit_energy(_load_format(need("constellation")))
        row = _air_row(C, link, tx, cfg["n_spans"], cfg["launch_power_dbm"],
                       cfg["points_per_dim"], cache_dir)
        artifacts["air"] = reports.write_air_csv(out / "air.csv", [row])
        artifacts["constellation"] = reports.plot_constellation(
            C, out / "constellation.png")
    elif workflow == "sweep":
        C = normalize_unit_energy(_load_format(need("constellation")))
        sweep = sweep_distance(
            C, link, tx, need("span_range"), cfg["backend"], sim=sim,
            cache_dir=cache_dir, points_per_dim=cfg["points_per_dim"])
        artifacts["sweep"] = reports.write_sweep_csv(out / "sweep.csv", sweep)
        artifacts["figure"] = reports.plot_sweep([sweep], out / "sweep.png")
    elif workflow == "optimize":
        C0 = normalize_unit_energy(_load_format(need("constellation")))
        Copt, trace = optimize(C0, link, tx, cfg["n_spans"], opt,
                               cache_dir=cache_dir)
        Copt.name = f"{C0.name or 'seed'}-shaped"
        save_constellation(Copt, out / "optimized.txt")
        artifacts["optimized"] = out / "optimized.txt"
        artifacts["trace"] = reports.write_trace_csv(
            out / "trace.csv", trace)
        artifacts["trace_figure"] = reports.plot_trace(
            trace, out / "trace.png")
        artifacts["constellation_figure"] = reports.plot_constellation(
            Copt, out / "optimized.png")
    elif workflow == "compare":
        names = cfg.get("formats")
        if not isinstance(names, list) or len(names) < 2:
            raise ConfigError("workflow 'compare' requires formats: "
                              "a list of at least two names")
        formats = [normalize_unit_energy(_load_format(n)) for n in names]
        report = compare_formats(
            formats, link, tx, need("rate_threshold"),
            span_range=cfg["span_range"], backend=cfg["backend"], sim=sim,
            cache_dir=cache_dir, points_per_dim=cfg["points_per_dim"])
        artifacts["compare"] = reports.write_compare_csv(
            out / "compare.csv", report)
        for name, sw in report.sweeps.items():
            artifacts[f"sweep-{name}"] = reports.write_sweep_csv(
                out / f"sweep-{name}.csv", sw)
        artifacts["figure"] = reports.plot_compare(
            report, out / "compare.png")
    elif workflow == "ssfm":
        C = normalize_unit_energy(_load_format(need("constellation")))
        if cfg["launch_power_dbm"] is None:
            coeffs = compute_nli_coefficients(
                link, tx, cfg["n_spans"], cache_dir=cache_dir)
            p_w, _, _ = optimal_launch(
                C, link, tx, cfg["n_spans"], coeffs=coeffs,
                cache_dir=cache_dir)
        else:
            p_w = dbm_to_watts(cfg["launch_power_dbm"])
        cloud = simulate(C, link, tx, cfg["n_spans"], p_w, sim)
        from .air import mc_air
        est = mc_air(C, cloud.tx_indices, cloud.rx_points)
        save_cloud(cloud, out / "cloud.csv")
        artifacts["cloud"] = out / "cloud.csv"
        artifacts["cloud_stats"] = out / "cloud.json"
        artifacts["air"] = reports.write_air_csv(out / "air.csv", [{
            "constellation": C.name or cfg["constellation"],
            "n_spans": cfg["n_spans"],
            "distance_km": cfg["n_spans"] * link.span_length_km,
            "launch_power_dbm": watts_to_dbm(p_w),
            "snr_4d_db": cloud.snr_4d_db,
            "air_bit_per_4d": est.rate_bit_per_4d,
            "backend": est.backend,
            "std_error": est.std_error,
        }])
        artifacts["figure"] = reports.plot_cloud(
            cloud, C, out / "cloud.png")

    echo_config()
    return artifacts


@main.command("run")
@click.argument("config", type=click.Path(exists=True))
@click.option("--output-dir", type=click.Path(), default=None,
              help="override the config's output directory")
@_cli_errors
def run_cmd(config, output_dir):
    """Execute a JSON experiment config."""
    artifacts = run_config(config, output_dir=output_dir)
    for name, path in sorted(artifacts.items()):
        click.echo(f"{name}: {path}")


if __name__ == "__main__":
    main()
