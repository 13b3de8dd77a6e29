"""Command-line surface: simulate, estimate, select, and backtest.

Every command writes a JSON report plus an aligned text table. A config
file of ``section.key=value`` lines can prefill options; explicit flags
win. The worker count defaults to the IFEPANEL_WORKERS environment
variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as report_io
from .errors import PanelModelError
from .estimator import FitConfig, fit
from .inference import (
    average_partial_effects,
    covariances,
    mean_group,
    mean_group_covariance,
)
from .links import LinkFamily
from .portfolio import rolling_backtest
from .selector import select_num_factors
from .simulation import DgpSpec, dgp_link, run_monte_carlo

_CONFIGURABLE = {
    "epsilon": ("fit.epsilon", float),
    "n_starts": ("fit.n_starts", int),
    "max_outer_iters": ("fit.max_outer_iters", int),
    "newton_max_iter": ("fit.newton_max_iter", int),
    "clamp": ("fit.clamp", float),
    "d_max": ("select.d_max", int),
    "penalty_xi": ("select.penalty_xi", float),
    "window": ("backtest.window", int),
    "ridge": ("backtest.ridge", float),
    "workers": ("io.workers", int),
}

# the simulate command defaults to the documented simulation profile;
# estimate/select keep the library estimator defaults
_SIM_PROFILE = {"n_starts": 1, "newton_max_iter": 2, "clamp": 8.0}


def _read_config(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PanelModelError(f"config line {lineno} is not key=value: {line!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _resolve(args, name, default):
    """CLI flag if given, else config value, else default."""
    given = getattr(args, name, None)
    if given is not None:
        return given
    key, cast = _CONFIGURABLE[name]
    if args.config_values and key in args.config_values:
        return cast(args.config_values[key])
    return default


def _default_workers(args):
    env = os.environ.get("IFEPANEL_WORKERS", "").strip()
    fallback = int(env) if env else 1
    return _resolve(args, "workers", fallback)


def _fit_config(args, num_factors, seed, profile=None):
    profile = profile or {}
    bound = _resolve(args, "clamp", profile.get("clamp", 30.0))
    return FitConfig(
        num_factors=num_factors,
        epsilon=_resolve(args, "epsilon", 1e-6),
        max_outer_iters=_resolve(args, "max_outer_iters", 500),
        n_starts=_resolve(args, "n_starts", profile.get("n_starts", 5)),
        newton_max_iter=_resolve(args, "newton_max_iter", profile.get("newton_max_iter", 50)),
        clamp=(-bound, bound),
        rng_seed=seed,
    )


def _cmd_simulate(args) -> int:
    spec = DgpSpec(
        case=args.case,
        dgp=args.dgp,
        n_units=args.n,
        n_periods=args.t,
        n_regressors=args.d_beta,
        num_factors=args.d_f,
        seed=args.seed,
    )
    cfg = _fit_config(args, spec.num_factors, args.seed, profile=_SIM_PROFILE)
    report = run_monte_carlo(
        spec,
        reps=args.m,
        cfg=cfg,
        d_max=_resolve(args, "d_max", 4),
        penalty_xi=_resolve(args, "penalty_xi", None),
        n_workers=_default_workers(args),
    )
    paths = report_io.write_report(
        report_io.mc_report_dict(report), report_io.mc_report_table(report), args.out
    )
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def _se_matrix(var_blocks):
    return [list(np.sqrt(np.clip(np.diag(v), 0.0, None))) for v in var_blocks]


def _cmd_estimate(args) -> int:
    data = report_io.load_panel_csv(args.input)
    link = LinkFamily.from_spec(args.link)
    cfg = _fit_config(args, args.num_factors, args.seed)
    payload = {"kind": "estimate", "input": str(args.input), "link": args.link}
    if args.select_d:
        sel = select_num_factors(
            data, link, cfg, _resolve(args, "d_max", 4), _resolve(args, "penalty_xi", None)
        )
        result = sel.chosen_fit
        payload["chosen_d"] = sel.chosen_d
        payload["ic_values"] = {str(d): v for d, v in sorted(sel.ic_values.items())}
    else:
        result = fit(data, link, cfg)
        payload["chosen_d"] = cfg.num_factors
    cov = covariances(data, result)
    ape = average_partial_effects(data, result)
    payload.update(
        {
            "loglik": result.loglik,
            "converged": result.converged,
            "outer_iters": result.outer_iters,
            "start_index": result.start_index,
            "separated_units": list(result.separated_units),
            "unit_ids": list(data.unit_ids),
            "time_ids": list(data.time_ids),
            "slopes": result.params.slopes.tolist(),
            "loadings": result.params.loadings.tolist(),
            "factors": result.params.factors.tolist(),
            "se_theta": _se_matrix(cov.var_unit),
            "average_partial_effects": ape.delta.tolist(),
        }
    )
    lines = [
        f"fit: loglik={result.loglik:.4f} converged={result.converged} "
        f"d={result.params.num_factors}",
    ]
    if data.n_regressors:
        beta_bar = mean_group(result)
        sigma = mean_group_covariance(data, result)
        n, t = data.y.shape
        se = np.sqrt(np.clip(np.diag(sigma), 0.0, None) / (n * t))
        payload["mean_group"] = beta_bar.tolist()
        payload["mean_group_covariance"] = sigma.tolist()
        payload["mean_group_se"] = se.tolist()
        for j, (b, s) in enumerate(zip(beta_bar, se)):
            lines.append(f"mean-group slope x{j + 1}: {b:+.6f}  (se {s:.6f})")
    lines.append("")
    paths = report_io.write_report(report_io.stamp(payload), "\n".join(lines), args.out)
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def _cmd_select(args) -> int:
    data = report_io.load_panel_csv(args.input)
    link = LinkFamily.from_spec(args.link)
    cfg = _fit_config(args, 0, args.seed)
    sel = select_num_factors(
        data, link, cfg, _resolve(args, "d_max", 4), _resolve(args, "penalty_xi", None)
    )
    payload = report_io.stamp(
        {
            "kind": "select",
            "input": str(args.input),
            "link": args.link,
            "chosen_d": sel.chosen_d,
            "ic_values": {str(d): v for d, v in sorted(sel.ic_values.items())},
            "failures": {str(d): r for d, r in sorted(sel.failures.items())},
        }
    )
    lines = [f"{'d':>4}{'criterion':>14}"]
    for d, v in sorted(sel.ic_values.items()):
        mark = " <- chosen" if d == sel.chosen_d else ""
        lines.append(f"{d:>4}{v:>14.6f}{mark}")
    lines.append("")
    paths = report_io.write_report(payload, "\n".join(lines), args.out)
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def _cmd_backtest(args) -> int:
    market, info = report_io.load_market_csv(args.prices, args.vix, args.rfi)
    link = LinkFamily.from_spec(args.link)
    cfg = FitConfig(
        num_factors=1,
        n_starts=_resolve(args, "n_starts", 1),
        epsilon=_resolve(args, "epsilon", 1e-4),
        max_outer_iters=_resolve(args, "max_outer_iters", 200),
        newton_max_iter=_resolve(args, "newton_max_iter", 2),
        rng_seed=args.seed,
    )
    reports = []
    for strategy in args.strategies.split(","):
        reports.append(
            rolling_backtest(
                market,
                strategy.strip(),
                link=link,
                cfg=cfg,
                d_max=_resolve(args, "d_max", 5),
                window=_resolve(args, "window", 505),
                ridge=_resolve(args, "ridge", 1e-6),
            )
        )
    payload = report_io.backtest_report_dict(reports)
    payload["ingest_info"] = info
    paths = report_io.write_report(payload, report_io.backtest_table(reports), args.out)
    print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifepanel",
        description=(
            "Binary-response heterogeneous panels with interactive fixed effects: "
            "simulate, estimate, select the factor count, or run a portfolio backtest."
        ),
    )
    parser.add_argument("--config", default=None, help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required):
        p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
        p.add_argument("--epsilon", type=float, default=None, help="stop tolerance (default 1e-6)")
        p.add_argument("--n-starts", dest="n_starts", type=int, default=None)
        p.add_argument("--max-outer-iters", dest="max_outer_iters", type=int, default=None)
        p.add_argument(
            "--newton-max-iter", dest="newton_max_iter", type=int, default=None,
            help="inner Newton steps per sweep (default 50; simulate defaults to 2)",
        )
        p.add_argument(
            "--clamp", type=float, default=None,
            help="symmetric index trimming bound (default 30; simulate defaults to 8)",
        )
        p.add_argument("--workers", type=int, default=None)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo harness")
    p_sim.add_argument("--case", type=int, choices=(1, 2), required=True)
    p_sim.add_argument("--dgp", type=int, choices=(1, 2, 3), required=True)
    p_sim.add_argument("--n", type=int, required=True, help="units")
    p_sim.add_argument("--t", type=int, required=True, help="periods")
    p_sim.add_argument("--m", type=int, required=True, help="replications")
    p_sim.add_argument("--d-beta", dest="d_beta", type=int, default=2)
    p_sim.add_argument("--d-f", dest="d_f", type=int, default=2)
    p_sim.add_argument("--d-max", dest="d_max", type=int, default=None)
    p_sim.add_argument("--penalty-xi", dest="penalty_xi", type=float, default=None)
    p_sim.add_argument("--out", default="mc_report")
    common(p_sim, seed_required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", help="fit a panel csv")
    p_est.add_argument("--input", required=True)
    p_est.add_argument("--link", default="probit")
    p_est.add_argument("--num-factors", dest="num_factors", type=int, default=1)
    p_est.add_argument("--select-d", dest="select_d", action="store_true")
    p_est.add_argument("--d-max", dest="d_max", type=int, default=None)
    p_est.add_argument("--penalty-xi", dest="penalty_xi", type=float, default=None)
    p_est.add_argument("--out", default="estimate_report")
    common(p_est, seed_required=False)
    p_est.set_defaults(func=_cmd_estimate)

    p_sel = sub.add_parser("select", help="tabulate the factor-count criterion")
    p_sel.add_argument("--input", required=True)
    p_sel.add_argument("--link", default="probit")
    p_sel.add_argument("--d-max", dest="d_max", type=int, default=None)
    p_sel.add_argument("--penalty-xi", dest="penalty_xi", type=float, default=None)
    p_sel.add_argument("--out", default="select_report")
    common(p_sel, seed_required=False)
    p_sel.set_defaults(func=_cmd_select)

    p_bt = sub.add_parser("backtest", help="rolling sign-forecast backtest")
    p_bt.add_argument("--prices", required=True)
    p_bt.add_argument("--vix", required=True)
    p_bt.add_argument("--rfi", required=True)
    p_bt.add_argument("--link", default="probit")
    p_bt.add_argument(
        "--strategies",
        default="ife:optimal,ew,cm,fe",
        help="comma list: ife:optimal | ife:<d> | fe | ew | cm",
    )
    p_bt.add_argument("--window", type=int, default=None)
    p_bt.add_argument("--ridge", type=float, default=None)
    p_bt.add_argument("--d-max", dest="d_max", type=int, default=None)
    p_bt.add_argument("--out", default="backtest_report")
    common(p_bt, seed_required=True)
    p_bt.set_defaults(func=_cmd_backtest)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    args.config_values = _read_config(args.config) if args.config else {}
    try:
        return args.func(args)
    except PanelModelError as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": str(exc), "type": "OSError"}), file=sys.stderr)
        return 1


def entry_point():  # pragma: no cover - thin wrapper
    raise SystemExit(main())
