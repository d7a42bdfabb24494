"""Command-line pipeline: simulate -> estimate -> filter -> microprice -> ftp.

Each subcommand reads/writes the documented CSV/JSON formats and returns
stable exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .errors import InputError, NumericalError, RfqPriceError
from .estimation import em_fit, estimate_betas, estimate_kappa, estimate_sigma, init_from_quantiles
from .ftp import MarketMakerConfig, SkewTable, calibrate_gamma, ergodic_skew, ftp
from .likelihood import filter_posterior_path
from .microprice import drift_value_asymptotic, micro_price
from .model import MmppModel, stationary_distribution
from .scurve import SCurve, fit_scurve
from .simulate import SimScenario, simulate
from .states import ask_levels, bid_levels
from .stream import merge_streams, split_by_asset


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(args) -> MmppModel:
    if args.model is None:
        raise InputError("--model is required")
    return MmppModel.from_json(args.model)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_estimate(args) -> int:
    cfg = io.load_config(
        args.config,
        {"m": args.m, "variant": args.variant, "max_iter": args.max_iter, "tol": args.tol},
    )
    table = io.read_rfq_csv(args.input, filled_only=args.filled_only)
    per_asset = split_by_asset(table.stream)
    betas = estimate_betas(per_asset)
    merged = merge_streams(per_asset)
    init = init_from_quantiles(merged, int(cfg.get("m", 2)))
    result = em_fit(
        merged,
        m=int(cfg.get("m", 2)),
        variant=cfg.get("variant", "exchangeable"),
        max_iter=int(cfg.get("max_iter", 500)),
        tol=float(cfg.get("tol", 1e-7)),
        init=init,
    )
    out = _out_dir(args)
    result.model.to_json(out / "model.json")

    report = {
        "model": result.model.to_dict(),
        "n_events": len(merged),
        "n_iterations": result.n_iter,
        "converged": result.converged,
        "loglik_trace": list(map(float, result.log_likelihoods)),
        "betas": {str(a): {"bid": float(b), "ask": float(c)} for a, (b, c) in betas.items()},
    }
    if table.quoted_margin is not None and table.filled is not None:
        mask = np.isfinite(table.quoted_margin) & np.isfinite(table.filled)
        if mask.sum() >= 2:
            curve = fit_scurve(
                table.quoted_margin[mask], table.filled[mask] > 0, regularize=args.regularize_scurve
            )
            report["scurve"] = {"alpha": curve.alpha, "beta": curve.beta}
    if table.composite_mid is not None or (
        table.composite_bid is not None and table.composite_ask is not None
    ):
        mids = (
            table.composite_mid
            if table.composite_mid is not None
            else 0.5 * (table.composite_bid + table.composite_ask)
        )
        report["price_dynamics"] = _kappa_sigma_per_asset(result.model, table, mids, cfg)
    with open(out / "estimation_report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"estimate: wrote {out/'model.json'} and {out/'estimation_report.json'}")
    return 0


def _kappa_sigma_per_asset(model: MmppModel, table, mids, cfg) -> dict:
    out = {}
    step = float(cfg.get("kappa_step", 0.1))
    v = None
    if model.exchangeable:
        v = drift_value_asymptotic(model).as_vector()
    for asset in np.unique(table.stream.assets):
        mask = (table.stream.assets == asset) & np.isfinite(mids)
        if mask.sum() < 2:
            continue
        t, s = table.stream.times[mask], mids[mask]
        entry = {"sigma": estimate_sigma(t, s)}
        if v is not None:
            grid = np.arange(0.0, table.stream.span + step / 2, step)
            post = filter_posterior_path(model, table.stream, grid)
            try:
                kappa, stderr = estimate_kappa(t, s, grid, post, v, step=step)
                entry.update({"kappa": kappa, "kappa_stdev": stderr})
            except InputError as exc:
                entry["kappa_error"] = str(exc)
        out[str(asset)] = entry
    return out


def cmd_filter(args) -> int:
    model = _load_model(args)
    table = io.read_rfq_csv(args.input)
    merged = merge_streams(split_by_asset(table.stream))
    t_end = args.t if args.t is not None else merged.span
    times = np.arange(0.0, t_end + args.step / 2, args.step)
    post = filter_posterior_path(model, merged.restrict(t_end), times)
    out = _out_dir(args)
    io.write_posterior_csv(out / "posteriors.csv", times, post, model.m_b, model.m_a)
    print(f"filter: wrote {out/'posteriors.csv'} ({times.size} rows)")
    return 0


def cmd_microprice(args) -> int:
    model = _load_model(args)
    if args.kappa is None:
        raise InputError("missing kappa: pass --kappa (see cmd_estimate's price_dynamics output)")
    table = drift_value_asymptotic(model)
    out = _out_dir(args)
    if args.grid:
        rows = []
        for p12, p21, pi in _imbalance_grid(model, args.grid):
            mean, stdev = micro_price(0.0, args.kappa, table, pi)
            rows.append((p12, p21, mean, stdev))
        io.write_csv(out / "microprice_grid.csv", ["pi_1_2", "pi_2_1", "micro_adjustment", "micro_stdev"], rows)
        print(f"microprice: wrote {out/'microprice_grid.csv'}")
        return 0
    prices = io.read_price_csv(args.prices)
    times, posts = io.read_posterior_csv(args.posteriors)
    pi_cols = io.posterior_columns(model.m_b, model.m_a)
    rows = []
    for asset, (pt, bid, ask) in prices.items():
        mid = 0.5 * (bid + ask)
        for i, t in enumerate(pt):
            j = int(np.argmin(np.abs(times - t)))
            mean, stdev = micro_price(mid[i], args.kappa, table, posts[j])
            rows.append((asset, t, mid[i], bid[i], ask[i], mean, stdev, *posts[j]))
    io.write_csv(
        out / "microprice.csv",
        ["asset_id", "time", "mid", "bid", "ask", "micro_mean", "micro_stdev", *pi_cols],
        rows,
    )
    print(f"microprice: wrote {out/'microprice.csv'} ({len(rows)} rows)")
    return 0


def _imbalance_grid(model: MmppModel, n: int):
    """Sweep (pi_{low,high}, pi_{high,low}) over the probability simplex;
    leftover mass sits on the balanced states (which carry no adjustment)."""
    if model.m_b != 2 or model.m_a != 2:
        raise InputError("grid mode expects a 2x2 state space")
    for p12 in np.linspace(0.0, 1.0, n):
        for p21 in np.linspace(0.0, 1.0, n):
            if p12 + p21 > 1.0 + 1e-12:
                continue
            rest = max(1.0 - p12 - p21, 0.0)
            yield p12, p21, np.array([rest / 2, p12, p21, rest / 2])


def cmd_ftp(args) -> int:
    model = _load_model(args)
    cfg = io.load_config(
        args.config,
        {
            "method": args.method,
            "gamma": args.gamma,
            "target_spread": args.target_spread,
            "z": args.z,
            "time_step": args.time_step,
        },
    )
    for key in ("composite_bid", "composite_ask", "kappa", "sigma"):
        if key not in cfg:
            raise InputError(f"ftp config needs {key!r}")
    bid, ask = float(cfg["composite_bid"]), float(cfg["composite_ask"])
    if ask <= bid:
        raise InputError("composite_ask must exceed composite_bid")
    delta0 = ask - bid
    mid = 0.5 * (bid + ask)
    curve = SCurve(
        alpha=float(cfg.get("scurve_alpha", -0.7)),
        beta=float(cfg.get("scurve_beta", 3.1)),
        delta0=delta0,
    )
    beta_weight = float(cfg.get("beta", 1.0))
    asset_model = model.scale_intensities(beta_weight)
    z = float(cfg.get("z", 10_000.0))
    base = MarketMakerConfig(
        gamma=float(cfg.get("gamma", 1e-8)),
        kappa=float(cfg["kappa"]),
        sigma=float(cfg["sigma"]),
        scurve_bid=curve,
        scurve_ask=curve,
        z=z,
        q_bar=float(cfg.get("q_bar", 10.0 * z)),
        time_step=float(cfg.get("time_step", 1e-3)),
    )
    methods = [cfg.get("method", "both")]
    if methods == ["both"]:
        methods = ["euler", "quad"]

    pi = stationary_distribution(model).probs
    if args.posteriors:
        times, posts = io.read_posterior_csv(args.posteriors)
        pi = posts[-1]

    out = _out_dir(args)
    state_cols = [
        f"ftp_{jb + 1}_{ja + 1}"
        for jb, ja in zip(bid_levels(model.m_b, model.m_a), ask_levels(model.m_b, model.m_a))
    ]
    rows, grids = [], {}
    for method in methods:
        mm = base
        if "target_spread" in cfg and cfg["target_spread"] is not None:
            gamma = calibrate_gamma(asset_model, mm, float(cfg["target_spread"]), method=method)
            mm = replace(mm, gamma=gamma)
        skews = ergodic_skew(asset_model, mm, method=method)
        per_state = mid + 0.5 * skews.as_vector()
        mean, stdev = ftp(mid, skews, pi)
        rows.append((str(cfg.get("asset_id", "asset")), mm.gamma, method, bid, ask, *per_state, mean, stdev))
        if args.grid:
            grids[method] = [
                (p12, p21, *ftp(mid, skews, pvec)) for p12, p21, pvec in _imbalance_grid(model, args.grid)
            ]
    io.write_csv(
        out / "ftp.csv",
        ["asset_id", "gamma", "method", "bid", "ask", *state_cols, "ftp_mean", "ftp_stdev"],
        rows,
    )
    for method, grid_rows in grids.items():
        io.write_csv(
            out / f"ftp_grid_{method}.csv", ["pi_1_2", "pi_2_1", "ftp_mean", "ftp_stdev"], grid_rows
        )
    print(f"ftp: wrote {out/'ftp.csv'}")
    return 0


def cmd_simulate(args) -> int:
    with open(args.scenario) as fh:
        doc = json.load(fh)
    try:
        model = MmppModel.from_dict(doc["model"])
        curve = None
        if "scurve" in doc:
            sc = doc["scurve"]
            curve = SCurve(float(sc["alpha"]), float(sc["beta"]), float(sc.get("delta0", 1.0)))
        betas = None
        if "betas" in doc:
            betas = {str(k): (float(v[0]), float(v[1])) for k, v in doc["betas"].items()}
        scenario = SimScenario(
            model=model,
            horizon=float(doc["horizon"]),
            seed=int(doc.get("seed", args.seed if args.seed is not None else 0)),
            betas=betas,
            kappa=float(doc.get("kappa", 0.0)),
            sigma=float(doc.get("sigma", 0.0)),
            scurve=curve,
            price_step=float(doc.get("price_step", 0.01)),
            s0=float(doc.get("s0", 100.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed scenario: {exc}") from exc
    run = simulate(scenario)
    out = _out_dir(args)
    streams = run["streams"]
    times = np.concatenate([s.times for s in streams.values()])
    sides = np.concatenate([s.sides for s in streams.values()])
    assets = np.concatenate([np.full(len(s), str(a), dtype=object) for a, s in streams.items()])
    order = np.argsort(times, kind="stable")
    from .stream import RfqStream

    io.write_rfq_csv(out / "rfqs.csv", RfqStream(times[order], sides[order], assets[order]))
    half = 0.5 * float(doc.get("spread", 1.0))
    io.write_price_csv(
        out / "prices.csv", "asset", run["price_times"], run["prices"] - half, run["prices"] + half
    )
    print(f"simulate: wrote {out/'rfqs.csv'} ({times.size} events) and {out/'prices.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rfqprice", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config file; flags override")
        sp.add_argument("--out-dir", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None)

    sp = sub.add_parser("simulate", help="generate synthetic RFQ and price data")
    common(sp)
    sp.add_argument("--scenario", required=True, help="scenario JSON")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="fit the liquidity model from an RFQ CSV")
    common(sp)
    sp.add_argument("--input", required=True, help="RFQ CSV")
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--variant", choices=("general", "exchangeable"), default=None)
    sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--filled-only", action="store_true")
    sp.add_argument("--regularize-scurve", action="store_true")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("filter", help="posterior state probabilities on a time grid")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True, help="RFQ CSV")
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--t", type=float, default=None, help="end time (default: last event)")
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("microprice", help="micro-price report or imbalance grid")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--prices", default=None, help="price CSV")
    sp.add_argument("--posteriors", default=None, help="posterior CSV from 'filter'")
    sp.add_argument("--grid", type=int, default=0, help="emit an (n x n) imbalance sweep instead")
    sp.set_defaults(func=cmd_microprice)

    sp = sub.add_parser("ftp", help="fair transfer price per state and posterior-averaged")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--method", choices=("euler", "quad", "both"), default=None)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--target-spread", type=float, default=None)
    sp.add_argument("--z", type=float, default=None)
    sp.add_argument("--time-step", type=float, default=None)
    sp.add_argument("--posteriors", default=None)
    sp.add_argument("--grid", type=int, default=0)
    sp.set_defaults(func=cmd_ftp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RfqPriceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
