"""Batch front-end: parse a run configuration, execute the pipeline, and
emit the data files that reproduce each figure plus a JSON summary.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Diagnostics go to standard error only.
"""

from __future__ import annotations

import functools
import math
import sys
from pathlib import Path

import click
import numpy as np

from kerrcrescent import observables as ob
from kerrcrescent import plots
from kerrcrescent import protocol as pr
from kerrcrescent.config import ConfigError, RunConfig, load_config
from kerrcrescent.fock import (
    FockVector,
    GridCoverageError,
    LeakageError,
    TruncationError,
    coherent_fock,
    norm_sq,
)
from kerrcrescent.reporting import fmt_float, write_csv, write_json

_NUMERIC_ERRORS = (TruncationError, LeakageError, GridCoverageError,
                   np.linalg.LinAlgError, FloatingPointError, ValueError)


def _info(msg: str) -> None:
    click.echo(msg, err=True)


def _config_options(func):
    @click.option("--config", "config_path", type=click.Path(), default=None,
                  help="Flat key=value configuration file.")
    @click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                  help="Override a config key (repeatable).")
    @click.option("--out", "out_dir", type=click.Path(), default=None,
                  help="Output directory (overrides out_dir key).")
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


def _run(task_name, config_path, sets, out_dir):
    try:
        cfg = load_config(config_path, tuple(sets), out_dir)
        if cfg.task is not None and cfg.task != task_name:
            raise ConfigError(f"config task={cfg.task!r} does not match command {task_name!r}")
        runner = _TASKS[task_name]
    except ConfigError as exc:
        _info(f"config error: {exc}")
        sys.exit(2)
    try:
        runner(cfg)
    except ConfigError as exc:
        _info(f"config error: {exc}")
        sys.exit(2)
    except _NUMERIC_ERRORS as exc:
        _info(f"numerical failure: {type(exc).__name__}: {exc}")
        sys.exit(3)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _normalized(v: FockVector) -> FockVector:
    n = math.sqrt(norm_sq(v))
    if n <= 0:
        raise ValueError("zero-norm state")
    return FockVector(dim=v.dim, amps=v.amps / n)


def _stats_entry(stats: ob.PhotonStatistics) -> dict:
    return {"mean": stats.mean, "variance": stats.variance, "fano": stats.fano}


def _ensemble_for(cfg: RunConfig, params) -> tuple:
    """(rho, grid, convergence delta or None) per the adapt setting."""
    if cfg.adapt:
        rho, grid, delta = pr.ensemble_state_converged(params, cfg.x_grid_points)
        return rho, grid, delta
    grid = pr.build_xgrid(params, cfg.x_grid_points)
    return pr.ensemble_state(params, grid), grid, None


def _task_photon_stats(cfg: RunConfig) -> None:
    cfg.require("x_values")
    params = cfg.protocol_params()
    out = _out_dir(cfg)
    baseline = ob.photon_statistics(coherent_fock(params.alpha, params.dim, params.tail_tol))
    per_x = {}
    for x in cfg.x_values:
        per_x[x] = ob.photon_statistics(pr.conditional_state_exact(params, x))

    rows = [(math.nan, n, p) for n, p in enumerate(baseline.probs)]
    for x, stats in per_x.items():
        rows.extend((x, n, p) for n, p in enumerate(stats.probs))
    paths = [write_csv(out / "photon_stats.csv", "x,n,p_n", rows)]

    summary = {
        "coherent_baseline": _stats_entry(baseline),
        "outcomes": [{"x": x, **_stats_entry(stats)} for x, stats in per_x.items()],
    }
    paths.append(write_json(out / "summary.json", summary))
    if cfg.plot:
        paths.append(plots.render_photon_stats(
            out / "photon_stats.png", baseline.probs,
            {x: s.probs for x, s in per_x.items()}))
    for p in paths:
        _info(f"wrote {p}")


def _task_wigner(cfg: RunConfig) -> None:
    params = cfg.protocol_params()
    out = _out_dir(cfg)
    if cfg.state == "ensemble":
        state, _, _ = _ensemble_for(cfg, params)
    else:
        state = _normalized(pr.conditional_state_exact(params, cfg.x))
    grid = ob.wigner(state, step=cfg.wigner_step, halfwidth=cfg.wigner_halfwidth)

    rows = ((x, p, grid.values[i, j])
            for i, x in enumerate(grid.x_axis)
            for j, p in enumerate(grid.p_axis))
    paths = [write_csv(out / "wigner.csv", "x,p,W", rows)]
    meta = {
        "state": cfg.state,
        "x_outcome": cfg.x if cfg.state == "conditional" else None,
        "grid": {
            "x_min": float(grid.x_axis[0]), "x_max": float(grid.x_axis[-1]),
            "p_min": float(grid.p_axis[0]), "p_max": float(grid.p_axis[-1]),
            "x_step": grid.x_step, "p_step": grid.p_step,
            "n_x": int(grid.x_axis.size), "n_p": int(grid.p_axis.size),
        },
        "min_W": float(grid.values.min()),
        "max_W": float(grid.values.max()),
        "negativity_volume": ob.negativity_volume(grid),
        "integrated_mass": grid.mass(),
    }
    paths.append(write_json(out / "wigner_meta.json", meta))
    if cfg.radial:
        mean_n, ea, _ = ob._mode_moments(state)
        r, vals = ob.radial_section(grid, center=(0.0, 0.0), angle=float(np.angle(ea)) if ea else 0.0)
        paths.append(write_csv(out / "wigner_radial.csv", "r,W",
                               zip(r.tolist(), vals.tolist())))
    if cfg.plot:
        paths.append(plots.render_wigner(out / "wigner.png", grid.x_axis, grid.p_axis, grid.values))
    for p in paths:
        _info(f"wrote {p}")


def _task_fidelity(cfg: RunConfig) -> None:
    params = cfg.protocol_params()
    out = _out_dir(cfg)
    if cfg.x_min is None or cfg.x_max is None:
        grid = pr.build_xgrid(params, 201)
        lo, hi = float(grid.points[0]), float(grid.points[-1])
    else:
        lo, hi = cfg.x_min, cfg.x_max
    xs = np.linspace(lo, hi, cfg.x_count)
    ref = pr.output_state(params, 0.0)
    rows = []
    f_abs = []
    dens = []
    for x in xs:
        f = pr.fidelity_overlap(params, float(x), reference=ref)
        p_x = pr.outcome_density(params, float(x))
        rows.append((float(x), abs(f), f.real, f.imag, p_x))
        f_abs.append(abs(f))
        dens.append(p_x)
    paths = [write_csv(out / "fidelity.csv", "x,F_abs,F_re,F_im,P", rows)]
    if cfg.plot:
        paths.append(plots.render_fidelity(out / "fidelity.png", xs, f_abs, dens))
    for p in paths:
        _info(f"wrote {p}")


def _task_ensemble(cfg: RunConfig) -> None:
    params = cfg.protocol_params()
    out = _out_dir(cfg)
    rho, grid, delta = _ensemble_for(cfg, params)
    rows = ((m, n, rho.entries[m, n].real, rho.entries[m, n].imag)
            for m in range(rho.dim) for n in range(rho.dim))
    paths = [write_csv(out / "rho.csv", "m,n,re,im", rows)]
    stats = ob.photon_statistics(rho)
    thetas = [k * math.pi / 8.0 for k in range(9)]
    summary = {
        "purity": ob.purity(rho),
        "pre_normalization_trace": rho.pre_normalization_trace,
        "photon_statistics": _stats_entry(stats),
        "quadrature_variances": [
            {"theta": th, "variance": ob.quadrature_variance(rho, th)} for th in thetas
        ],
        "x_grid": {
            "n_points": int(grid.points.size),
            "x_min": float(grid.points[0]),
            "x_max": float(grid.points[-1]),
            "convergence_delta": delta,
        },
    }
    paths.append(write_json(out / "summary.json", summary))
    if cfg.plot:
        paths.append(plots.render_ensemble(out / "ensemble.png", stats.probs, ob.purity(rho)))
    for p in paths:
        _info(f"wrote {p}")


def _scan_point(cfg: RunConfig, sweep_value: float) -> dict:
    if cfg.sweep == "gamma_beta":
        beta_mag = sweep_value / cfg.gamma if cfg.gamma else 0.0
        params = cfg.protocol_params(beta_mag=beta_mag)
    else:  # alpha sweep at fixed gamma |alpha beta|
        if sweep_value <= 0:
            raise ConfigError("alpha sweep values must be positive")
        beta_mag = cfg.sweep_gab / (cfg.gamma * sweep_value)
        params = cfg.protocol_params(alpha_mag=sweep_value, beta_mag=beta_mag)

    psi = _normalized(pr.conditional_state_exact(params, 0.0))
    stats = ob.photon_statistics(psi)
    wgrid = ob.wigner(psi, step=cfg.wigner_step)
    rho, grid, _ = _ensemble_for(cfg, params)

    dens = np.array([pr.outcome_density(params, x) for x in grid.points])
    support = grid.points[dens >= cfg.support_fraction * dens.max()]
    ref = pr.output_state(params, 0.0)
    f_min = min(pr.fidelity_profile(params, float(x), reference=ref) for x in support)

    return {
        "sweep_value": sweep_value,
        "mean_n": stats.mean,
        "var_n": stats.variance,
        "fano": stats.fano,
        "min_W": float(wgrid.values.min()),
        "neg_volume": ob.negativity_volume(wgrid),
        "purity": ob.purity(rho),
        "F_min_over_support": f_min,
    }


def _task_scan(cfg: RunConfig) -> None:
    cfg.require("sweep", "sweep_values", "gamma")
    if cfg.sweep == "gamma_beta":
        cfg.require("alpha_mag")
        if cfg.gamma <= 0:
            raise ConfigError("gamma_beta sweep requires gamma > 0")
    elif cfg.gamma <= 0:
        raise ConfigError("alpha sweep requires gamma > 0")
    out = _out_dir(cfg)
    rows = []
    for value in cfg.sweep_values:
        _info(f"scan point {cfg.sweep}={value:g}")
        rows.append(_scan_point(cfg, value))
    header = "sweep_value,mean_n,var_n,fano,min_W,neg_volume,purity,F_min_over_support"
    csv_rows = [tuple(r[k] for k in header.split(",")) for r in rows]
    paths = [write_csv(out / "scan.csv", header, csv_rows)]
    if cfg.plot:
        label = "gamma*|beta|" if cfg.sweep == "gamma_beta" else "|alpha|"
        paths.append(plots.render_scan(out / "scan.png", rows, label))
    for p in paths:
        _info(f"wrote {p}")


_TASKS = {
    "photon_stats": _task_photon_stats,
    "wigner": _task_wigner,
    "fidelity": _task_fidelity,
    "ensemble": _task_ensemble,
    "scan": _task_scan,
}


@click.group()
def main():
    """Cross-Kerr crescent-state preparation pipeline."""


@main.command("photon-stats")
@_config_options
def photon_stats_cmd(config_path, sets, out_dir):
    """Photon-number distributions of conditional states vs the coherent baseline."""
    _run("photon_stats", config_path, sets, out_dir)


@main.command("wigner")
@_config_options
def wigner_cmd(config_path, sets, out_dir):
    """Wigner function of a conditional or ensemble state."""
    _run("wigner", config_path, sets, out_dir)


@main.command("fidelity")
@_config_options
def fidelity_cmd(config_path, sets, out_dir):
    """Feed-forward fidelity profile |F(x)| together with the outcome density."""
    _run("fidelity", config_path, sets, out_dir)


@main.command("ensemble")
@_config_options
def ensemble_cmd(config_path, sets, out_dir):
    """Run-averaged density matrix with purity and quadrature variances."""
    _run("ensemble", config_path, sets, out_dir)


@main.command("scan")
@_config_options
def scan_cmd(config_path, sets, out_dir):
    """Sweep gamma|beta| or |alpha| and tabulate all scalar metrics."""
    _run("scan", config_path, sets, out_dir)


@main.command("run")
@_config_options
def run_cmd(config_path, sets, out_dir):
    """Dispatch on the config's task key."""
    try:
        cfg = load_config(config_path, tuple(sets), out_dir)
        if cfg.task is None:
            raise ConfigError("missing required config key: task")
        task = cfg.task
    except ConfigError as exc:
        _info(f"config error: {exc}")
        sys.exit(2)
    _run(task, config_path, sets, out_dir)


if __name__ == "__main__":
    main()
