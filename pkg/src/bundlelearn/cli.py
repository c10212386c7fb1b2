"""Command-line front end: simulate, spectral, design, market, replay.

Every run is driven by a TOML config (grammar documented in the README,
``version = "1"``). Outputs are machine-readable only: step tables in the
CSV contract of the corpus module, or JSON documents carrying
``schema_version`` "1". Same config and seed produce byte-identical files.
Exit codes: 0 success, 1 runtime error (single ``error:<Code>:`` line on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .corpus import _as_table, TrajectoryTable, export_trajectory, load_corpus, replay
from .design import orthogonal_bundle
from .errors import BundleLearnError, ConfigError
from .estimator import DEFAULT_RIDGE, NoiseModel, PrecisionState, init_ridge
from .market import MarketConfig, plan_complete_info
from .simulator import RidgeInit, Scenario, Strategy, StrategyKind, WarmupInit, run

CONFIG_VERSION = "1"
OUT_DIR_ENV = "BUNDLELEARN_OUT_DIR"

_STRATEGY_ALIASES = {
    "srr": StrategyKind.SINGLE_ROUND_ROBIN,
    "popularity": StrategyKind.POPULARITY_BIASED,
    "correlation": StrategyKind.CORRELATION_BREAKING,
    "orthogonal": StrategyKind.ORTHOGONAL_TO_ERROR,
    "fixed": StrategyKind.FIXED_BUNDLE,
    "two_good": StrategyKind.TWO_GOOD_TARGETED,
}
_STRATEGY_ALIASES.update({k.value: k for k in StrategyKind})


class RunConfig(NamedTuple):
    scenario: Scenario
    strategy: Strategy
    market: MarketConfig


def _strategy_kind(name: str, where: str) -> StrategyKind:
    try:
        return _STRATEGY_ALIASES[name]
    except KeyError:
        raise ConfigError(
            where, f"unknown strategy {name!r} (choose from {sorted(_STRATEGY_ALIASES)})"
        ) from None


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}")


def _vector(table: dict, where: str, key: str):
    value = table.get(key)
    if value is None:
        return None
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"{where}.{key}", "must be an array of numbers")
    return np.asarray(value, dtype=float)


def _number(table: dict, where: str, key: str, default=None):
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}", "must be a number")
    return float(value)


def _integer(table: dict, where: str, key: str, default=None):
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key}", "must be an integer")
    return int(value)


def load_config(path) -> RunConfig:
    """Parse and validate a run config, applying the documented defaults."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None

    _check_keys(
        doc, {"version", "scenario", "noise", "init", "strategy", "market"}, "config"
    )
    version = doc.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError("version", f"unsupported config version {version!r}")

    sc = doc.get("scenario", {})
    _check_keys(sc, {"beta", "alpha", "alpha_hat", "horizon", "norm"}, "scenario")
    beta = _vector(sc, "scenario", "beta")
    if beta is None or beta.size == 0:
        raise ConfigError("scenario.beta", "required")
    alpha = _number(sc, "scenario", "alpha", 0.0)
    alpha_hat = _number(sc, "scenario", "alpha_hat")
    horizon = _integer(sc, "scenario", "horizon", 100)
    if horizon < 1:
        raise ConfigError("scenario.horizon", "must be ≥ 1")
    norm = sc.get("norm", "l2")
    if norm not in ("l1", "l2"):
        raise ConfigError("scenario.norm", "must be 'l1' or 'l2'")

    nz = doc.get("noise", {})
    _check_keys(nz, {"sigma2", "seed"}, "noise")
    sigma2 = _number(nz, "noise", "sigma2", 0.0)
    if sigma2 < 0:
        raise ConfigError("noise.sigma2", "must be ≥ 0")
    seed = _integer(nz, "noise", "seed", 0)

    init_tbl = doc.get("init", {})
    _check_keys(init_tbl, {"kind", "beta0", "rho"}, "init")
    init_kind = init_tbl.get("kind", "ridge")
    if init_kind == "ridge":
        beta0 = _vector(init_tbl, "init", "beta0")
        if beta0 is None:
            beta0 = np.zeros(beta.size)
        elif beta0.size != beta.size:
            raise ConfigError("init.beta0", "length must match scenario.beta")
        rho = _number(init_tbl, "init", "rho", DEFAULT_RIDGE)
        if rho <= 0:
            raise ConfigError("init.rho", "must be > 0")
        init: RidgeInit | WarmupInit = RidgeInit(beta0, rho)
    elif init_kind == "warmup":
        if "beta0" in init_tbl or "rho" in init_tbl:
            raise ConfigError("init.kind", "warmup takes no beta0 or rho")
        init = WarmupInit()
    else:
        raise ConfigError("init.kind", "must be 'ridge' or 'warmup'")

    st = doc.get("strategy", {})
    _check_keys(st, {"kind", "recompute", "bundle", "i", "j", "ratio"}, "strategy")
    kind = _strategy_kind(st.get("kind", "srr"), "strategy.kind")
    recompute = st.get("recompute", True)
    if not isinstance(recompute, bool):
        raise ConfigError("strategy.recompute", "must be a boolean")
    bundle = _vector(st, "strategy", "bundle")
    if kind is StrategyKind.FIXED_BUNDLE and bundle is None:
        raise ConfigError("strategy.bundle", "required for fixed_bundle")
    good_i = _integer(st, "strategy", "i")
    good_j = _integer(st, "strategy", "j")
    if kind is StrategyKind.TWO_GOOD_TARGETED and (good_i is None or good_j is None):
        raise ConfigError("strategy.i", "two_good_targeted needs i and j")
    ratio = _number(st, "strategy", "ratio")
    strategy = Strategy(
        kind=kind, recompute=recompute, bundle=bundle, i=good_i, j=good_j, ratio=ratio
    )

    mk = doc.get("market", {})
    _check_keys(mk, {"gamma", "delta_weight", "norm", "info"}, "market")
    gamma = _vector(mk, "market", "gamma")
    if gamma is None:
        gamma = np.zeros(beta.size)
    elif gamma.size != beta.size:
        raise ConfigError("market.gamma", "length must match scenario.beta")
    delta_weight = _number(mk, "market", "delta_weight", 1.0)
    market_norm = mk.get("norm", "l1")
    if market_norm not in ("l1", "l2"):
        raise ConfigError("market.norm", "must be 'l1' or 'l2'")
    try:
        market = MarketConfig(gamma=gamma, delta_weight=delta_weight, norm=market_norm)
    except ValueError as exc:
        raise ConfigError("market.delta_weight", str(exc)) from None

    info_rows = mk.get("info")
    if info_rows is not None:
        info = np.asarray(info_rows, dtype=float)
        if info.ndim != 2 or info.shape != (beta.size, beta.size):
            raise ConfigError("market.info", "must be an n x n matrix")

    try:
        scenario = Scenario(
            beta_true=beta,
            alpha=alpha,
            alpha_hat=alpha_hat,
            noise=NoiseModel(sigma2=sigma2, seed=seed),
            horizon=horizon,
            norm=norm,
            init=init,
        )
    except (ValueError, BundleLearnError) as exc:
        raise ConfigError("scenario", str(exc)) from None
    return RunConfig(scenario, strategy, market)


def _market_info(path) -> np.ndarray | None:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    info_rows = doc.get("market", {}).get("info")
    if info_rows is None:
        return None
    return np.asarray(info_rows, dtype=float)


def _out_path(arg: str | None, default_name: str) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / default_name


def _write_json(doc: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def _cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = load_config(ns.config)
    scenario, strategy = cfg.scenario, cfg.strategy
    if ns.strategy:
        strategy = replace(strategy, kind=_strategy_kind(ns.strategy, "--strategy"))
    if ns.seed is not None:
        scenario = replace(
            scenario, noise=NoiseModel(scenario.noise.sigma2, ns.seed)
        )
    out = _out_path(ns.out, "trajectory." + ns.format)
    if ns.sweep is None:
        table = _as_table(run(scenario, strategy))
    else:
        if ns.sweep < 1:
            raise ConfigError("--sweep", "must be ≥ 1")
        seeds = [scenario.noise.seed + k for k in range(ns.sweep)]

        def one(seed: int) -> TrajectoryTable:
            sc = replace(scenario, noise=NoiseModel(scenario.noise.sigma2, seed))
            return _as_table(run(sc, strategy))

        with concurrent.futures.ThreadPoolExecutor(
            max_workers=min(8, len(seeds))
        ) as pool:
            tables = list(pool.map(one, seeds))
        columns = ("seed",) + tables[0].columns
        blocks = [
            np.column_stack([np.full(tbl.rows.shape[0], float(seed)), tbl.rows])
            for seed, tbl in zip(seeds, tables)
        ]
        table = TrajectoryTable(columns, np.vstack(blocks))
    with open(out, "w", newline="") as fh:
        export_trajectory(table, fh, ns.format)
    print(out)
    return 0


def _cmd_spectral(ns: argparse.Namespace) -> int:
    with open(ns.corpus, newline="") as fh:
        records = load_corpus(fh)
    report = replay(records, ns.min_appearances, ns.interactions)
    out = _out_path(ns.report, "centrality.json")
    _write_json(
        {
            "schema_version": "1",
            "full_rank_time": report.full_rank_time,
            "kappa": float(report.kappa_path[-1]),
            "centralities": [
                [label, vn, vc] for label, vn, vc in report.centralities
            ],
        },
        out,
    )
    print(out)
    return 0


def _cmd_design(ns: argparse.Namespace) -> int:
    cfg = load_config(ns.config)
    init = cfg.scenario.init
    if not isinstance(init, RidgeInit):
        raise ConfigError("init.kind", "design needs ridge init with beta0")
    delta = np.asarray(init.beta0) - cfg.scenario.beta_true
    bundle = orthogonal_bundle(delta)
    if cfg.scenario.norm == "l1":
        # Orthogonality is scale-free; rescale the same way run() sizes bundles.
        bundle = bundle / float(np.abs(bundle).sum())
    out = _out_path(ns.out, "bundle." + ns.format)
    if ns.format == "json":
        _write_json(
            {
                "schema_version": "1",
                "delta": [float(v) for v in delta],
                "bundle": [float(v) for v in bundle],
            },
            out,
        )
    else:
        rows = np.column_stack(
            [np.arange(delta.size, dtype=float), delta, bundle]
        )
        with open(out, "w", newline="") as fh:
            export_trajectory(
                TrajectoryTable(("good", "delta", "bundle"), rows), fh, "csv"
            )
    print(out)
    return 0


def _cmd_market(ns: argparse.Namespace) -> int:
    cfg = load_config(ns.config)
    init = cfg.scenario.init
    if not isinstance(init, RidgeInit):
        raise ConfigError("init.kind", "market planning needs ridge init with beta0")
    n = cfg.scenario.beta_true.size
    info = _market_info(ns.config)
    if info is None:
        state0 = init_ridge(n, rho=1.0, beta0=init.beta0)
    else:
        state0 = PrecisionState(
            info=info,
            cov=np.linalg.inv(info),
            estimate=np.asarray(init.beta0, dtype=float),
            count=n,
            full_rank=True,
        )
    plan = plan_complete_info(cfg.scenario.beta_true, init.beta0, state0, cfg.market)
    out = _out_path(ns.out, "plan.json")
    _write_json(
        {
            "schema_version": "1",
            "mode": plan.mode.value,
            "x1": [float(v) for v in plan.x1],
            "x2": [float(v) for v in plan.x2],
            "p1": plan.p1,
            "p2": plan.p2,
            "period2_good": plan.period2_good,
            "non_unique": plan.non_unique,
            "notes": list(plan.notes),
        },
        out,
    )
    print(out)
    return 0


def _cmd_replay(ns: argparse.Namespace) -> int:
    with open(ns.corpus, newline="") as fh:
        records = load_corpus(fh)
    report = replay(
        records,
        ns.min_appearances,
        ns.interactions,
        tuple(ns.split) if ns.split else None,
    )
    out = _out_path(ns.out, "replay." + ns.format)
    with open(out, "w", newline="") as fh:
        export_trajectory(report, fh, ns.format)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bundlelearn",
        description="Preference-learning simulations, spectral reports, and corpus replays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a consumer/provider simulation")
    sim.add_argument("--config", required=True, help="TOML run config")
    sim.add_argument("--strategy", help="override the configured strategy kind")
    sim.add_argument("--seed", type=int, help="override the configured seed")
    sim.add_argument("--sweep", type=int, help="run this many consecutive seeds")
    sim.add_argument("--out", help="output file")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.set_defaults(func=_cmd_simulate)

    spec = sub.add_parser("spectral", help="centrality rankings from a corpus")
    spec.add_argument("--corpus", required=True, help="corpus CSV file")
    spec.add_argument("--report", help="output JSON file")
    spec.add_argument("--min-appearances", type=int, default=1)
    spec.add_argument("--interactions", action="store_true")
    spec.set_defaults(func=_cmd_spectral)

    des = sub.add_parser("design", help="orthogonal bundle for a configured error")
    des.add_argument("--config", required=True)
    des.add_argument("--out")
    des.add_argument("--format", choices=("csv", "json"), default="json")
    des.set_defaults(func=_cmd_design)

    mkt = sub.add_parser("market", help="two-period monopolist plan")
    mkt.add_argument("--config", required=True)
    mkt.add_argument("--out")
    mkt.set_defaults(func=_cmd_market)

    rep = sub.add_parser("replay", help="replay a corpus through the estimator")
    rep.add_argument("--corpus", required=True)
    rep.add_argument("--out")
    rep.add_argument("--format", choices=("csv", "json"), default="csv")
    rep.add_argument("--min-appearances", type=int, default=1)
    rep.add_argument("--interactions", action="store_true")
    rep.add_argument(
        "--split",
        nargs=3,
        type=int,
        metavar=("T", "BEFORE", "AFTER"),
        help="keep entities with BEFORE appearances at order <= T and AFTER beyond",
    )
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return ns.func(ns)
    except BundleLearnError as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error:OSError: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())
