"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration or market, 3 numerical
failure. Output is written to a temporary file and renamed into place, so a
failing command never leaves a partial file behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, check, load_config
from .equilibrium import MarketParams, solve_equilibrium, validate_market
from .errors import MarketError, NumericalError
from .feasibility import limiting_case_report, sweep_concentration
from .market_structure import power_law_weights, sample_constrained_beta
from .sensitivity import sensitivity_report

log = logging.getLogger("endo_capm")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

SWEEP_HEADER = ["gamma", "n_assets", "hhi", "mu_max_over_r", "mu_min_over_r", "n_starts",
                "converged_max", "converged_min", "seed"]
THREADS_ENV = "ENDO_CAPM_THREADS"


def fmt(x) -> str:
    """Round-trip-safe text for CSV cells: 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else x
    return x


def to_json(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_market(cfg: ScenarioConfig) -> MarketParams:
    if cfg.market is not None:
        params = cfg.market
    elif cfg.weight_law is not None:
        w = power_law_weights(cfg.single_law())
        if cfg.betas is not None:
            b = cfg.betas
        else:
            b = sample_constrained_beta(w, cfg.beta_bounds, seed=cfg.seed)
        params = MarketParams(w, b, cfg.risk_free_rate)
    else:
        raise ConfigError("this command needs either 'market' or 'weight_law' in the config")
    return validate_market(params)


def cmd_solve(cfg: ScenarioConfig) -> str:
    params = resolve_market(cfg)
    sol = solve_equilibrium(params)
    if (cfg.output_format or "json") == "csv":
        header = ["asset", "weight", "beta", "mu", "market_return", "capm_residual_norm",
                  "removed_row", "min_norm_certificate"]
        rows = [
            [i, params.weights[i], params.betas[i], sol.mu[i], sol.market_return,
             sol.capm_residual_norm, sol.removed_row, sol.min_norm_certificate]
            for i in range(params.n_assets)
        ]
        return to_csv(header, rows)
    return to_json({
        "command": "solve",
        "risk_free_rate": params.risk_free_rate,
        "weights": params.weights,
        "betas": params.betas,
        "mu": sol.mu,
        "market_return": sol.market_return,
        "capm_residual_norm": sol.capm_residual_norm,
        "removed_row": sol.removed_row,
        "min_norm_certificate": sol.min_norm_certificate,
        "documented_limit": sol.documented_limit,
        "active": sol.active,
    })


def cmd_sensitivity(cfg: ScenarioConfig) -> str:
    params = resolve_market(cfg)
    rep = sensitivity_report(params, cfg.step)
    if (cfg.output_format or "json") == "csv":
        n = params.n_assets
        header = ["row", "col", "endogenous", "standard", "fd_frozen", "fd_projected"]
        rows = [
            [i, j, rep.endogenous_jacobian[i, j], rep.standard_jacobian[i, j],
             rep.fd_jacobian[i, j], rep.projected_fd_jacobian[i, j]]
            for i in range(n) for j in range(n)
        ]
        return to_csv(header, rows)
    return to_json({
        "command": "sensitivity",
        "risk_free_rate": params.risk_free_rate,
        "weights": params.weights,
        "betas": params.betas,
        "market_return": rep.market_return,
        "step": rep.step,
        "endogenous_jacobian": rep.endogenous_jacobian,
        "standard_jacobian": rep.standard_jacobian,
        "fd_jacobian": rep.fd_jacobian,
        "fd_mode": "frozen",
        "max_abs_deviation": rep.max_abs_deviation,
        "off_diagonal_mass": rep.off_diagonal_mass,
        "projected_fd_jacobian": rep.projected_fd_jacobian,
        "projected_max_abs_deviation": rep.projected_max_abs_deviation,
        "tangent_jacobian": rep.tangent_jacobian,
        "tangent_off_diagonal_mass": rep.tangent_off_diagonal_mass,
    })


def sweep_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from exc
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def cmd_sweep(cfg: ScenarioConfig) -> str:
    if cfg.market is not None:
        raise ConfigError("sweep takes a 'weight_law' grid, not an inline 'market'")
    grid = cfg.sweep_grid()
    workers = sweep_workers()
    records = sweep_concentration(grid, cfg.risk_free_rate, cfg.beta_bounds, cfg.n_starts,
                                  cfg.seed, workers=workers)
    for rec in records:
        if rec.error:
            log.warning("gamma=%s n_assets=%s: %s", rec.gamma, rec.n_assets, rec.error)
    if (cfg.output_format or "csv") == "json":
        return to_json({
            "command": "sweep",
            "risk_free_rate": cfg.risk_free_rate,
            "beta_bounds": cfg.beta_bounds,
            "records": [
                {k: getattr(rec, k) for k in SWEEP_HEADER + ["witness_gap", "error"]}
                for rec in records
            ],
        })
    rows = [[getattr(rec, k) for k in SWEEP_HEADER] for rec in records]
    return to_csv(SWEEP_HEADER, rows)


def cmd_limits(cfg: ScenarioConfig) -> str:
    if (cfg.output_format or "json") != "json":
        raise ConfigError("limits writes JSON only")
    rep = limiting_case_report(cfg.risk_free_rate, cfg.n_large, cfg.seed)
    return to_json(rep)


COMMANDS = {
    "solve": cmd_solve,
    "sensitivity": cmd_sensitivity,
    "sweep": cmd_sweep,
    "limits": cmd_limits,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="endo-capm",
        description="CAPM equilibrium returns with an endogenous market return.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", help="output path ('-' for stdout); overrides output_path")
    parser.add_argument("--format", choices=["csv", "json"], help="overrides output_format")
    parser.add_argument("--seed", type=int, help="overrides seed")
    parser.add_argument("--starts", type=int, help="overrides n_starts")
    parser.add_argument("--step", type=float, help="finite-difference step (sensitivity)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.output_path = args.out
        if args.format is not None:
            cfg.output_format = args.format
        if args.seed is not None:
            cfg.seed = args.seed
        if args.starts is not None:
            cfg.n_starts = args.starts
        if args.step is not None:
            cfg.step = args.step
        check(cfg)
        text = COMMANDS[args.command](cfg)
    except MarketError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_atomic(text, cfg.output_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
