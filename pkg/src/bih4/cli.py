"""Command-line front end: classify | decay | expansion | strichartz | identities.

Batch computation only.  Each command writes a JSON summary (embedding the
effective config, package version and grid hash), CSV series where the data
is plottable, and a rendered figure alongside.  Outputs are byte-identical
for identical config + seed.  Exit codes: 0 success, 1 numerical failure,
2 usage error.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import click
import numpy as np

from . import reporting
from .errors import Bih4Error
from .grid import build_grid, from_callable, grid_hash
from .identities import run_identities
from .potentials import (bump, decay_report, gaussian, grid_for_potential,
                         load_potential_file, make_remark16_eigenvalue,
                         make_remark16_resonance, power_law,
                         resonance_slope_family)
from .propagator import StoneEvaluator, conservation_check, decay_fit, strichartz_norm
from .resolvent import singularity_order
from .resonance import build_s_chain, build_threshold, classify, table1_residuals

_GRID_DEFAULTS = {"grid_n": 512, "grid_l": 12.0, "rank_tol": 1e-7,
                  "mu_min": 1e-4, "mu_max": 1e-1, "t_min": 10.0, "t_max": 1e4,
                  "alpha": 0.0, "seed": 0}


def _shared_options(fn):
    opts = [
        click.option("--grid-n", type=int, default=None, help="grid node count"),
        click.option("--grid-L", "grid_l", type=float, default=None,
                     help="grid half width"),
        click.option("--rank-tol", type=float, default=None,
                     help="relative singular-value threshold for stage detection"),
        click.option("--mu-min", type=float, default=None),
        click.option("--mu-max", type=float, default=None),
        click.option("--t-min", type=float, default=None),
        click.option("--t-max", type=float, default=None),
        click.option("--alpha", type=float, default=None,
                     help="regularity exponent in H^(alpha/4)"),
        click.option("--potential", default="gaussian",
                     help="gaussian|bump|remark16-resonance|remark16-eigenvalue|"
                          "slope-family|power-law|free|file:PATH"),
        click.option("--amp", type=float, default=0.1, help="potential amplitude"),
        click.option("--width", type=float, default=1.0, help="potential width"),
        click.option("--s", "s_param", type=float, default=0.3,
                     help="exponent for remark16-eigenvalue"),
        click.option("--c", "c_param", type=float, default=1.0,
                     help="exterior slope for remark16-resonance"),
        click.option("--d", "d_param", type=float, default=1.0,
                     help="exterior offset for remark16-resonance"),
        click.option("--beta", type=float, default=6.0, help="power-law decay rate"),
        click.option("--out", type=click.Path(), default="bih4-out",
                     help="output directory"),
        click.option("--seed", type=int, default=None, help="seed for random sweeps"),
        click.option("--config", "config_path", type=click.Path(exists=True),
                     default=None,
                     help="JSON config; keys override the command-line flags"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _effective_config(kwargs) -> dict:
    cfg = dict(_GRID_DEFAULTS)
    for key, val in kwargs.items():
        if val is not None:
            cfg[key] = val
    for key in _GRID_DEFAULTS:
        if cfg.get(key) is None:
            cfg[key] = _GRID_DEFAULTS[key]
    path = kwargs.get("config_path")
    if path:
        file_cfg = json.loads(Path(path).read_text())
        for key, val in file_cfg.items():
            cfg[key.replace("-", "_").lower()] = val
    for tol_key in ("rank_tol",):
        if not 0 < cfg[tol_key] < 1:
            raise click.UsageError(f"{tol_key} must lie in (0, 1)")
    if cfg["t_min"] >= cfg["t_max"] or cfg["mu_min"] >= cfg["mu_max"]:
        raise click.UsageError("ranges must be nonempty (min < max)")
    return cfg


def _make_potential(cfg):
    name = str(cfg["potential"]).lower()
    if name in ("free", "none"):
        return None
    if name.startswith("file:"):
        return load_potential_file(name[5:])
    if name == "gaussian":
        return gaussian(cfg["amp"], cfg["width"])
    if name == "bump":
        return bump(cfg["amp"], cfg["width"])
    if name in ("remark16-resonance", "remark16_resonance"):
        return make_remark16_resonance(cfg["c_param"], cfg["d_param"])
    if name in ("remark16-eigenvalue", "remark16_eigenvalue"):
        return make_remark16_eigenvalue(cfg["s_param"])
    if name in ("slope-family", "slope_family"):
        return resonance_slope_family(cfg["c_param"], cfg["d_param"])
    if name in ("power-law", "power_law"):
        return power_law(cfg["amp"], cfg["beta"])
    raise click.UsageError(f"unknown potential {cfg['potential']!r}")


def _make_grid(cfg, potential):
    """Breakpoint-aligned composite Gauss; graded layout for slow decay."""
    return grid_for_potential(potential, cfg["grid_n"], cfg["grid_l"])


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _provenance(cfg, grid=None):
    prov = {"config": {k: v for k, v in sorted(cfg.items()) if k != "config_path"}}
    if grid is not None:
        prov["grid"] = {"hash": grid_hash(grid), "count": grid.count,
                        "half_width": grid.half_width, "rule": grid.rule}
    return prov


@click.group()
def main():
    """Desk-scale lab for 1-d fourth-order Schrodinger operators."""


@main.command("classify")
@_shared_options
def classify_cmd(**kwargs):
    """Classify the zero-energy threshold type of H = Delta^2 + V."""
    cfg = _effective_config(kwargs)
    potential = _make_potential(cfg)
    if potential is None:
        raise click.UsageError("classify needs a potential (not 'free')")
    out = _outdir(cfg)
    try:
        grid = _make_grid(cfg, potential)
        if potential.form == "file":
            vals = np.abs(potential.evaluator(grid.nodes))
            span = potential.parameters["range"]
            inside = (grid.nodes > span[0]) & (grid.nodes < span[1])
            if vals[inside].min() > 0.5 * vals.max():
                raise click.ClickException(
                    "degenerate potential: sampled data has no decaying tail")
        td = build_threshold(potential, grid)
        chain = build_s_chain(td, rel_tol=cfg["rank_tol"])
        verdict = classify(td, chain)
        residuals = table1_residuals(td, chain)
        decay = decay_report(potential, grid)
    except Bih4Error as exc:
        raise click.ClickException(f"classification failed: {exc}")
    payload = {
        "kind": verdict.kind,
        "dims": verdict.diagnostics["dims"],
        "stages": verdict.diagnostics["stages"],
        "d0_identity": verdict.diagnostics["d0_identity"],
        "beta_warning": verdict.diagnostics["beta_warning"],
        "table1_residuals": residuals,
        "decay_report": decay,
        **_provenance(cfg, grid),
    }
    reporting.write_json(out / "classify.json", payload)
    reporting.render_classify_figure(out / "classify.png", chain.report)
    click.echo(f"kind: {verdict.kind}  dims: {verdict.diagnostics['dims']}")
    click.echo(f"wrote {out / 'classify.json'}")


@main.command()
@_shared_options
@click.option("--samples", type=int, default=12)
def decay(samples, **kwargs):
    """Fit the L1->Linf kernel decay exponent over a t-range."""
    cfg = _effective_config(kwargs)
    potential = _make_potential(cfg)
    out = _outdir(cfg)
    try:
        if potential is None:
            report = decay_fit(None, (cfg["t_min"], cfg["t_max"]), samples,
                               alpha=cfg["alpha"])
            grid = None
        else:
            grid = _make_grid(cfg, potential)
            td = build_threshold(potential, grid)
            report = decay_fit(td, (cfg["t_min"], cfg["t_max"]), samples,
                               alpha=cfg["alpha"])
    except Bih4Error as exc:
        raise click.ClickException(f"decay fit failed: {exc}")
    rows = [
        (float(t), float(s), float(f), float(c))
        for t, s, f, c in zip(report.ts, report.sup_norms, report.free_sup,
                              report.corr_sup)
    ]
    reporting.write_csv(out / "decay.csv",
                        ["t", "sup_abs_kernel", "free_part", "correction_part"], rows)
    payload = {
        "slope": report.slope,
        "expected_slope": -(1 + report.alpha) / 4,
        "alpha": report.alpha,
        "residual": report.residual,
        "lattice": list(report.lattice),
        "tail_estimates_max": float(np.max(report.tail_estimates)),
        **_provenance(cfg, grid),
    }
    reporting.write_json(out / "decay.json", payload)
    reporting.render_decay_figure(out / "decay.png", report.ts, report.sup_norms,
                                  report.slope, report.intercept, report.alpha)
    click.echo(f"slope: {report.slope:.4f} (expected {-(1 + report.alpha) / 4:.4f})")
    click.echo(f"wrote {out / 'decay.csv'}")


@main.command()
@_shared_options
@click.option("--samples", type=int, default=16)
def expansion(samples, **kwargs):
    """Fit the leading singularity order of ||M(mu)^-1|| as mu -> 0."""
    cfg = _effective_config(kwargs)
    potential = _make_potential(cfg)
    if potential is None:
        raise click.UsageError("expansion needs a potential")
    out = _outdir(cfg)
    try:
        grid = _make_grid(cfg, potential)
        td = build_threshold(potential, grid)
        fit = singularity_order(td, (cfg["mu_min"], cfg["mu_max"]), samples)
    except Bih4Error as exc:
        raise click.ClickException(f"expansion fit failed: {exc}")
    rows = [
        (float(m), float(nv), float(cd), bool(u))
        for m, nv, cd, u in zip(fit.mus, fit.norms, fit.conds, fit.used)
    ]
    reporting.write_csv(out / "expansion.csv",
                        ["mu", "M_inv_norm", "condition", "used_in_fit"], rows)
    payload = {
        "exponent": fit.exponent,
        "residual": fit.residual,
        "warnings": list(fit.warnings),
        **_provenance(cfg, grid),
    }
    reporting.write_json(out / "expansion.json", payload)
    reporting.render_expansion_figure(out / "expansion.png", fit.mus, fit.norms,
                                      fit.used, fit.exponent)
    if fit.warnings:
        for w in fit.warnings:
            click.echo(f"warning: {w}")
    click.echo(f"exponent: {fit.exponent:.3f}")
    click.echo(f"wrote {out / 'expansion.csv'}")


@main.command()
@_shared_options
@click.option("--q", "q_param", type=float, default=math.inf)
@click.option("--r", "r_param", type=float, default=2.0)
@click.option("--window", nargs=2, type=float, default=(0.1, 0.8))
def strichartz(q_param, r_param, window, **kwargs):
    """Desk-scale mixed-norm check of the homogeneous Strichartz bound."""
    cfg = _effective_config(kwargs)
    potential = _make_potential(cfg)
    out = _outdir(cfg)
    try:
        grid = build_grid(cfg["grid_l"], cfg["grid_n"])
        td = None
        if potential is not None:
            td = build_threshold(potential, _make_grid(cfg, potential))
        phi0 = from_callable(grid, lambda x: np.exp(-(x**2)))
        ratio = strichartz_norm(td, phi0, q_param, r_param, window)
        doubled = (window[0], window[0] + 2 * (window[1] - window[0]))
        ratio2 = strichartz_norm(td, phi0, q_param, r_param, doubled)
        cons = conservation_check(td, phi0, window[1])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except Bih4Error as exc:
        raise click.ClickException(f"strichartz check failed: {exc}")
    payload = {
        "q": q_param, "r": r_param,
        "window": list(window), "ratio": ratio,
        "window_doubled": list(doubled), "ratio_doubled": ratio2,
        "window_stability": ratio2 / ratio if ratio else math.inf,
        "conservation": cons,
        **_provenance(cfg, grid),
    }
    reporting.write_json(out / "strichartz.json", payload)
    reporting.render_strichartz_figure(out / "strichartz.png",
                                       [window[1], doubled[1]], [ratio, ratio2],
                                       f"q={q_param:g}, r={r_param:g}")
    click.echo(f"ratio: {ratio:.4f} (doubled window: {ratio2:.4f})")
    click.echo(f"wrote {out / 'strichartz.json'}")


@main.command()
@_shared_options
@click.option("--sweep-seed", type=int, default=None,
              help="alias for --seed (random sweeps)")
@click.option("--inject-error", type=click.Choice(["none", "a1-coefficient"]),
              default="none", help="negative control: corrupt a coefficient")
@click.option("--quick/--full", default=False, help="smaller sweeps")
def identities(sweep_seed, inject_error, quick, **kwargs):
    """Run the exact-identity battery and report residuals."""
    cfg = _effective_config(kwargs)
    if sweep_seed is not None:
        cfg["seed"] = sweep_seed
    out = _outdir(cfg)
    try:
        results = run_identities(seed=cfg["seed"], rank_tol=cfg["rank_tol"],
                                 inject_error=inject_error, quick=quick)
    except Bih4Error as exc:
        raise click.ClickException(f"identity battery failed: {exc}")
    payload = {"results": results, "inject_error": inject_error,
               **_provenance(cfg)}
    reporting.write_json(out / "identities.json", payload)
    residual_map = {k: v["value"] for k, v in results.items()
                    if isinstance(v, dict) and v.get("tolerance") is not None}
    reporting.render_identities_figure(out / "identities.png", residual_map)
    failures = [k for k, v in results.items()
                if isinstance(v, dict) and v.get("pass") is False]
    for name in failures:
        click.echo(f"FAIL: {name} (value {results[name]['value']:.3e})")
    click.echo(f"wrote {out / 'identities.json'}")
    if failures:
        raise click.ClickException(f"{len(failures)} identity check(s) failed")


if __name__ == "__main__":
    main()
