"""Command-line entry point: ``kdvlab [command] --config run.ini --output dir``.

Exit status 0 on success, 2 for configuration errors (the offending key is
printed), 3 when a numerical check fails.  Every run writes
``manifest.json`` into the output directory.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from . import io as kio
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .field import FrequencyGrid, SpectralField, hs_norm
from .illposed import CounterexampleParams, counterexample_data, counterexample_grid, inflation_sweep
from .semigroup import kernel_exponent, kernel_weighted_l2, verify_linear_xnorm
from .symbol import compute_threshold_M, sup_phi
from .wellposed import (
    ConvergenceError,
    WeightedNormParams,
    evolve,
    linear_trajectory,
    picard_solve,
    snapshot_times,
    weighted_norm,
)

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def gaussian_data(spec, xi_max, n, s, norm, width=1.0) -> SpectralField:
    """Real Gaussian spectrum exp(-(xi/width)^2/2) scaled to the given H^s norm."""
    grid = FrequencyGrid(xi_max, n)
    f = SpectralField.from_function(grid, lambda x: np.exp(-0.5 * (x / width) ** 2) + 0j)
    return f * (norm / hs_norm(f, s))


def _cmd_threshold(cfg: RunConfig, out: Path, jobs):
    M = compute_threshold_M(cfg.symbol)
    res = {"M": M, "sup_phi": sup_phi(cfg.symbol, M)}
    kio.write_json(out / "threshold.json", res)
    return {"threshold_found": True}, ["threshold.json"]


def _cmd_solve(cfg: RunConfig, out: Path, jobs):
    p = cfg.params
    params = WeightedNormParams(p["s"], cfg.symbol.p, p["variant"].upper())
    v0 = gaussian_data(cfg.symbol, p["xi_max"], p["n"], p["s"], p["data_norm"], p["width"])
    traj, rep = picard_solve(cfg.symbol, v0, params, tol=p["tol"], max_iter=p["max_iter"], m=p["m"],
                             T=p["T"], trials=p["trials"], seed=cfg.seed)
    kio.write_trajectory(out, traj, "solution")
    summary = rep.to_dict()
    checks = {
        "converged": rep.converged,
        "ratio_ok": rep.ratio_max <= 0.6,
        "residual_ok": rep.residual < max(10 * p["tol"], 1e-8),
    }
    if p["compare_evolve"]:
        ev = evolve(cfg.symbol, v0, rep.T, rep.T / p["dt_steps"], nl=params.nl)
        diff = hs_norm(ev.final - traj.final, p["s"])
        summary["evolve_difference_hs"] = diff
        checks["evolve_agreement"] = diff < 1e-6
    kio.write_json(out / "contraction.json", summary)
    return checks, ["contraction.json", "solution_index.json"]


def _cmd_evolve(cfg: RunConfig, out: Path, jobs):
    p = cfg.params
    v0 = gaussian_data(cfg.symbol, p["xi_max"], p["n"], p["s"], p["data_norm"], p["width"])
    traj = evolve(cfg.symbol, v0, p["T"], p["dt"], nl=p["nl"], linear_only=p["linear_only"])
    keep = np.unique(np.append(np.arange(0, len(traj), max(1, p["save_every"])), len(traj) - 1))
    from .field import Trajectory

    sub = Trajectory(traj.grid, traj.times[keep], traj.coeffs[keep], traj.real)
    kio.write_trajectory(out, sub, "evolve")
    norms = [[float(t), hs_norm(traj.field(i), p["s"])] for i, t in zip(keep, traj.times[keep])]
    kio.write_csv(out / "evolve_norms.csv", ["t", "hs_norm"], norms)
    return {"finite": bool(np.all(np.isfinite(traj.coeffs)))}, ["evolve_index.json", "evolve_norms.csv"]


def _lemma_task(args):
    spec, s, weight, taus, eps = args
    return kernel_weighted_l2(spec, s, weight, taus, eps=eps)


def _cmd_verify(cfg: RunConfig, out: Path, jobs):
    p = cfg.params
    taus = np.geomspace(p["tau_min"], p["tau_max"], p["tau_count"])
    tasks, skipped = [], {}
    for w in p["weights"]:
        try:
            kernel_exponent(w, p["s"], cfg.symbol.p, p["eps"])
        except ValueError as exc:
            if "unknown weight" in str(exc):
                raise ConfigError("verify-lemmas.weights", str(exc)) from None
            skipped[w] = str(exc)
            continue
        tasks.append((cfg.symbol, p["s"], w, taus, p["eps"]))
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_lemma_task, tasks))
    else:
        reports = [_lemma_task(t) for t in tasks]
    checks, files = {}, []
    for rep in reports:
        kio.write_csv(out / f"smoothing_{rep.weight}.csv", ["tau", "kernel_norm", "weighted_value"], rep.rows())
        kio.write_json(out / f"smoothing_{rep.weight}.json", rep.summary())
        files += [f"smoothing_{rep.weight}.csv", f"smoothing_{rep.weight}.json"]
        checks[f"{rep.weight}_stable"] = rep.stable
        checks[f"{rep.weight}_monotone_tail"] = rep.monotone_tail_ok
    if skipped:
        kio.write_json(out / "smoothing_skipped.json", skipped)
        files.append("smoothing_skipped.json")
    return checks, files


def _cmd_inflate(cfg: RunConfig, out: Path, jobs):
    p = cfg.params
    sw = inflation_sweep(cfg.symbol, p["s"], p["gamma"], p["t_eval"], p["N_list"], p["which"],
                         p["nodes_per_gamma"], jobs)
    rows = list(zip(sw.N_values, sw.full_norms, sw.norm_values))
    kio.write_csv(out / "sweep.csv", ["N", "norm", "window_norm"], rows)
    summary = sw.summary()
    summary["denominator_bands"] = sw.bands
    kio.write_json(out / "sweep.json", summary)
    pred = sw.predicted_slope
    checks = {
        "slope_within_tolerance": abs(sw.fitted_slope - pred) <= p["slope_tol"] * max(abs(pred), 1e-12),
        "fit_conclusive": not sw.inconclusive,
        "denominator_band_ok": sw.denominator_band_ok,
    }
    return checks, ["sweep.csv", "sweep.json"]


def _cmd_norms(cfg: RunConfig, out: Path, jobs):
    p = cfg.params
    cp = CounterexampleParams(p["N"], p["gamma"], p["s"], 0.1)
    grid = counterexample_grid(cp, p["nodes_per_gamma"], high_band=False)
    v0 = counterexample_data(cp, grid)
    lb = verify_linear_xnorm(cfg.symbol, v0, p["s"], p["T"])
    params = WeightedNormParams(p["s"], cfg.symbol.p, "X")
    lin = linear_trajectory(cfg.symbol, v0, snapshot_times(p["T"], p["m"]))
    res = {
        "hs_norm": hs_norm(v0, p["s"]),
        "xts_norm_linear": weighted_norm(lin, params),
        "linear_constant": lb.constant,
        "linear_constant_scaled": lb.scaled,
        "growth_factor": lb.growth,
        "refined_constant": lb.refined_constant,
        "stable": lb.stable,
    }
    kio.write_json(out / "norms.json", res)
    return {"linear_constant_stable": lb.stable}, ["norms.json"]


HANDLERS = {
    "threshold": _cmd_threshold,
    "solve": _cmd_solve,
    "evolve": _cmd_evolve,
    "verify-lemmas": _cmd_verify,
    "inflate": _cmd_inflate,
    "norms": _cmd_norms,
}


def _versions():
    import numba
    import scipy

    return {"kdvlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "numba_enabled": _kernels.USE_NUMBA}


def run(cfg: RunConfig, jobs: int | None = None) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    status, checks, files, error = EXIT_OK, {}, [], None
    try:
        checks, files = HANDLERS[cfg.command](cfg, out, jobs)
        if not all(checks.values()):
            status = EXIT_CHECK
    except ConfigError:
        raise
    except (ConvergenceError, FloatingPointError) as exc:
        status, error = EXIT_CHECK, str(exc)
    except ValueError as exc:
        status, error = EXIT_CONFIG, str(exc)
    manifest = {
        "config": cfg.echo,
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - t0,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "checks": checks,
        "artifacts": files,
        "status": status,
        "error": error,
    }
    kio.write_json(out / "manifest.json", manifest)
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if error:
        print(f"error: {error}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdvlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides [run] command")
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--output", help="output directory (overrides [run] output)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for independent sub-runs")
    ap.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("config error [--jobs]: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, text=None if args.config else "", command=args.command,
                          output=args.output, seed=args.seed)
        return run(cfg, args.jobs)
    except ConfigError as exc:
        print(f"config error {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
