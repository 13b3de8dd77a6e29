"""Data ingestion and report emission.

Panels arrive as long CSV files with header ``unit,time,y,x1..xk``;
market data arrives as three date-indexed CSVs (prices, volatility
index, risk-free rate). Reports go out as JSON documents with a stable
key order plus an aligned plain-text table.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from .errors import DataValidationError
from .panel import PanelData
from .portfolio import BacktestReport, MarketData
from .simulation import McReport

SCHEMA_VERSION = "1"

__all__ = [
    "load_panel_csv",
    "save_panel_csv",
    "load_market_csv",
    "mc_report_dict",
    "mc_report_table",
    "backtest_report_dict",
    "backtest_table",
    "write_report",
]


def load_panel_csv(path) -> PanelData:
    """Read a balanced binary panel from ``unit,time,y,x1..xk`` rows."""
    frame = pd.read_csv(path)
    cols = list(frame.columns)
    if cols[:3] != ["unit", "time", "y"]:
        raise DataValidationError(
            f"panel csv must start with columns unit,time,y; got {cols[:3]}"
        )
    x_cols = cols[3:]
    expected = [f"x{j + 1}" for j in range(len(x_cols))]
    if x_cols != expected:
        raise DataValidationError(f"regressor columns must be {expected}, got {x_cols}")

    bad = ~frame["y"].isin([0, 1])
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 2  # 1-based, after header
        raise DataValidationError(f"non-binary y value at row {row}")

    units = sorted(frame["unit"].unique().tolist())
    times = sorted(frame["time"].unique().tolist())
    n, t = len(units), len(times)
    seen = set(zip(frame["unit"], frame["time"]))
    missing = [(u, s) for u in units for s in times if (u, s) not in seen]
    if missing:
        shown = ", ".join(f"({u}, {s})" for u, s in missing[:10])
        more = "" if len(missing) <= 10 else f" and {len(missing) - 10} more"
        raise DataValidationError(f"unbalanced panel; missing cells: {shown}{more}")
    if len(frame) != n * t:
        raise DataValidationError("duplicate (unit, time) rows in panel csv")

    uidx = {u: i for i, u in enumerate(units)}
    tidx = {s: j for j, s in enumerate(times)}
    y = np.zeros((n, t))
    x = np.zeros((n, t, len(x_cols)))
    rows_u = frame["unit"].map(uidx).to_numpy()
    rows_t = frame["time"].map(tidx).to_numpy()
    y[rows_u, rows_t] = frame["y"].to_numpy(dtype=np.float64)
    for j, c in enumerate(x_cols):
        x[rows_u, rows_t, j] = frame[c].to_numpy(dtype=np.float64)
    return PanelData(y=y, x=x, unit_ids=tuple(units), time_ids=tuple(times))


def save_panel_csv(data: PanelData, path) -> None:
    """Write a PanelData back to the long CSV layout (round-trips with load)."""
    n, t, p = data.x.shape
    records = {
        "unit": np.repeat(list(data.unit_ids), t),
        "time": list(data.time_ids) * n,
        "y": data.y.reshape(-1).astype(int),
    }
    for j in range(p):
        records[f"x{j + 1}"] = data.x[:, :, j].reshape(-1)
    pd.DataFrame(records).to_csv(path, index=False)


def load_market_csv(prices_path, vix_path, rfi_path):
    """Assemble MarketData from three date-indexed CSVs.

    Dates are inner-joined, prices become simple returns, stocks with any
    missing price are dropped. Returns (market, info) where info counts
    what was dropped.
    """
    prices = pd.read_csv(prices_path, index_col=0)
    vix = pd.read_csv(vix_path, index_col=0)
    rfi = pd.read_csv(rfi_path, index_col=0)
    if vix.shape[1] != 1 or rfi.shape[1] != 1:
        raise DataValidationError("vix and rfi files must have exactly one value column")

    common = prices.index.intersection(vix.index).intersection(rfi.index)
    if len(common) == 0:
        raise DataValidationError("no common dates across prices, vix, and rfi")
    common = common.sort_values()
    info = {
        "dates_used": int(len(common)),
        "dates_dropped_prices": int(len(prices.index.difference(common))),
        "dates_dropped_vix": int(len(vix.index.difference(common))),
        "dates_dropped_rfi": int(len(rfi.index.difference(common))),
    }
    prices = prices.loc[common]
    vix = vix.loc[common].iloc[:, 0].astype(float)
    rfi = rfi.loc[common].iloc[:, 0].astype(float)

    full = prices.columns[prices.notna().all(axis=0)]
    dropped = [c for c in prices.columns if c not in set(full)]
    info["stocks_dropped"] = len(dropped)
    info["stocks_dropped_ids"] = list(map(str, dropped))
    if len(full) == 0:
        raise DataValidationError("every stock has missing prices")
    prices = prices[full].astype(float)
    if (vix <= 0).any():
        raise DataValidationError("volatility index must be positive for the log transform")

    rets = prices.to_numpy().T  # n_stocks x n_dates
    rets = rets[:, 1:] / rets[:, :-1] - 1.0
    market = MarketData(
        returns=rets,
        log_vix=np.log(vix.to_numpy())[1:],
        rfi=rfi.to_numpy()[1:],
        dates=tuple(map(str, common[1:])),
        stock_ids=tuple(map(str, full)),
    )
    return market, info


def stamp(payload: dict) -> dict:
    """Wrap a report payload with the schema version and a timestamp."""
    out = {"schema_version": SCHEMA_VERSION}
    out.update(payload)
    out["generated_at"] = datetime.now(timezone.utc).isoformat()
    return out


def mc_report_dict(report: McReport) -> dict:
    spec = report.spec
    return stamp(
        {
            "kind": "monte_carlo",
            "case": spec.case,
            "dgp": spec.dgp,
            "n_units": spec.n_units,
            "n_periods": spec.n_periods,
            "n_regressors": spec.n_regressors,
            "num_factors_true": spec.num_factors,
            "seed": spec.seed,
            "reps": report.reps,
            "n_failed": report.n_failed,
            "share_correct": report.share_correct,
            "share_under": report.share_under,
            "share_over": report.share_over,
            "rmse_slopes": report.rmse_slopes,
            "rmse_factor_space": report.rmse_factor_space,
            "std_slopes": list(report.std_slopes),
            "chosen_counts": {str(k): v for k, v in sorted(report.chosen_counts.items())},
        }
    )


def mc_report_table(report: McReport) -> str:
    spec = report.spec
    head = (
        f"case {spec.case}  dgp {spec.dgp}  N={spec.n_units}  T={spec.n_periods}  "
        f"reps={report.reps}"
    )
    cols = ["Pc", "Pu", "Po", "RMSE_slopes", "RMSE_factor_space"] + [
        f"Std_slope{j + 1}" for j in range(len(report.std_slopes))
    ]
    vals = [
        f"{report.share_correct:.3f}",
        f"{report.share_under:.3f}",
        f"{report.share_over:.3f}",
        f"{report.rmse_slopes:.4f}",
        f"{report.rmse_factor_space:.4f}",
    ] + [f"{v:.4f}" for v in report.std_slopes]
    width = max(len(c) for c in cols) + 2
    line1 = "".join(c.rjust(width) for c in cols)
    line2 = "".join(v.rjust(width) for v in vals)
    return "\n".join([head, line1, line2, ""])


def backtest_report_dict(reports) -> dict:
    rows = []
    for rep in reports:
        rows.append(
            {
                "strategy": rep.strategy,
                "mean_pct": rep.stats.mean_pct,
                "std_pct": rep.stats.std_pct,
                "ir": rep.stats.ir,
                "sr": rep.stats.sr,
                "n_no_trade_days": rep.n_no_trade_days,
                "n_days": int(rep.daily_returns.size),
            }
        )
    return stamp(
        {
            "kind": "backtest",
            "units_note": "mean_pct and std_pct are both annualized percent",
            "strategies": rows,
        }
    )


def backtest_table(reports) -> str:
    header = f"{'Strategy':<14}{'Mean (%)':>10}{'Std (%)':>10}{'IR':>8}{'SR':>8}{'NoTrade':>9}"
    lines = [header]
    for rep in reports:
        s = rep.stats
        lines.append(
            f"{rep.strategy:<14}{s.mean_pct:>10.2f}{s.std_pct:>10.2f}"
            f"{s.ir:>8.2f}{s.sr:>8.2f}{rep.n_no_trade_days:>9d}"
        )
    lines.append("")
    return "\n".join(lines)


def write_report(payload: dict, text: str, out_base) -> tuple:
    """Write ``<base>.json`` and ``<base>.txt``; returns both paths."""
    json_path = f"{out_base}.json"
    txt_path = f"{out_base}.txt"
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    with open(txt_path, "w") as fh:
        fh.write(text)
    return json_path, txt_path
