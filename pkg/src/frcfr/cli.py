"""Experiment harness: configuration, execution, CSV emission, conformance.

``frcfr solve`` expands the cross-product of games, link parameters,
partition counts and seeds into one run per combination, executes them
(optionally across processes), and writes one CSV per run plus a summary of
final exploitabilities.  ``frcfr validate`` runs the conformance suite.

The per-run CSV schema is a compatibility contract for downstream plotting::

    iteration,player,exploitability_milli,avg_regret_p1,avg_regret_p2,
    err_sum_p1,err_sum_p2,bound_p1,bound_p2,wall_ms

One row is written per evaluation point with ``player`` fixed to 0 (rows
describe the whole profile; the per-player quantities live in the suffixed
columns).  ``wall_ms`` is written as 0 so that identical configurations
produce byte-identical files; real timings are reported on the run log.
File names encode the configuration:
``{game}__{link}{param}__n{partitions}__s{seed}.csv``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import blackwell_check
from .efg import GameTree, build_tree
from .games import GAME_REGISTRY, make_game
from .links import (
    EXP_PARAM_GRID,
    EXP_PARAM_GRID_WIDE,
    LinkFamily,
    LinkSpec,
    POLY_PARAM_GRID,
    link,
)
from .matcher import internal_fixed_point, policy_from_estimates
from .odp import TransformationKind, enumerate_transformations, expected_phi_regret
from .solver import MetricsRow, SolveConfig, UpdateScheme, solve

__all__ = ["main", "CSV_HEADER", "EXPECTED_INFO_STATES", "run_conformance"]

CSV_HEADER = (
    "iteration,player,exploitability_milli,avg_regret_p1,avg_regret_p2,"
    "err_sum_p1,err_sum_p2,bound_p1,bound_p2,wall_ms"
)

SUMMARY_HEADER = (
    "game,link,param,partitions,buckets,lambda,iterations,update,n_seeds,"
    "final_exploitability_milli_mean"
)

EXPECTED_INFO_STATES = {"leduc": 936, "goofspiel": 2124, "random_goofspiel": 3608}

_TREE_CACHE: dict[str, GameTree] = {}


def _tree_for(game: str) -> GameTree:
    if game not in _TREE_CACHE:
        _TREE_CACHE[game] = build_tree(make_game(game))
    return _TREE_CACHE[game]


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def format_row(row: MetricsRow) -> str:
    return ",".join(
        [
            str(row.iteration),
            "0",
            _fmt(row.exploitability_milli),
            _fmt(row.avg_regret[0]),
            _fmt(row.avg_regret[1]),
            _fmt(row.err_sum[0]),
            _fmt(row.err_sum[1]),
            _fmt(row.bound[0]),
            _fmt(row.bound[1]),
            "0",
        ]
    )


def run_filename(config: SolveConfig) -> str:
    return (
        f"{config.game}__{config.link.family.value}{config.link.param:g}"
        f"__n{config.n_partitions}__s{config.seed}.csv"
    )


def execute_run(config: SolveConfig, out_dir: str) -> tuple[str, float]:
    """Run one configuration, streaming rows to its CSV.

    Returns (csv path, final exploitability).  On failure the partial file is
    flagged with an error row and the exception propagates.
    """
    tree = _tree_for(config.game)
    path = Path(out_dir) / run_filename(config)
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        try:
            result = solve(
                tree, config, on_row=lambda row: f.write(format_row(row) + "\n")
            )
        except Exception:
            f.write("-1,0,nan,nan,nan,nan,nan,nan,nan,0\n")
            raise
    return str(path), result.rows[-1].exploitability_milli


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {text!r}")
    return seeds


def _parse_floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _resolve_params(text: str, family: LinkFamily, game: str) -> list[float]:
    """Explicit comma list, or ``grid`` for the family's default sweep.

    The exponential grid is game-dependent: games with unit-scale payoffs use
    the wide temperature grid.
    """
    if text != "grid":
        return _parse_floats(text)
    if family is LinkFamily.POLYNOMIAL:
        return list(POLY_PARAM_GRID)
    return list(EXP_PARAM_GRID_WIDE if game == "goofspiel" else EXP_PARAM_GRID)


def _parse_ints(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _parse_cadence(text: str):
    return "log" if text == "log" else int(text)


def _load_config_file(path: str) -> dict:
    """Key = value lines whose keys mirror the long flag names."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _build_solve_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frcfr solve", add_help=False)
    p.add_argument("--config", default=None)
    p.add_argument("--list-games", action="store_true", dest="list_games")
    p.add_argument("--game", default=None)
    p.add_argument("--link", choices=["poly", "exp"], default="poly")
    p.add_argument("--param", default="2.0")
    p.add_argument("--partitions", default="0")
    p.add_argument("--tabular", action="store_true")
    p.add_argument("--buckets", type=int, default=10)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--seeds", default="1")
    p.add_argument("--cadence", default="log")
    p.add_argument("--update", choices=["sim", "alt"], default="sim")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="runs")
    return p


@dataclass(frozen=True)
class RunManifest:
    """The resolved run list plus its output directory."""

    configs: tuple[SolveConfig, ...]
    out_dir: str


def build_manifest(args) -> RunManifest:
    games = [g.strip() for g in args.game.split(",") if g.strip()]
    for g in games:
        if g not in GAME_REGISTRY:
            raise ValueError(f"unknown game {g!r}")
    partitions = [0] if args.tabular else _parse_ints(args.partitions)
    seed_base = int(os.environ.get("FRCFR_SEED_BASE", "0"))
    seeds = [s + seed_base for s in _parse_seeds(args.seeds)]
    family = LinkFamily.POLYNOMIAL if args.link == "poly" else LinkFamily.EXPONENTIAL
    cadence = _parse_cadence(args.cadence)
    update = UpdateScheme(args.update)
    configs = []
    for game in games:
        for param in _resolve_params(args.param, family, game):
            for n in partitions:
                for seed in seeds:
                    configs.append(
                        SolveConfig(
                            game=game,
                            link=LinkSpec(family, param),
                            iterations=args.iterations,
                            n_partitions=n,
                            m_buckets=args.buckets,
                            lam=args.lam,
                            seed=seed,
                            cadence=cadence,
                            update=update,
                        )
                    )
    names = [run_filename(c) for c in configs]
    if len(set(names)) != len(names):
        raise ValueError("run list is not unique; file names would collide")
    return RunManifest(tuple(configs), args.out)


def _summary_key(c: SolveConfig) -> tuple:
    return (
        c.game,
        c.link.family.value,
        c.link.param,
        c.n_partitions,
        c.m_buckets,
        c.lam,
        c.iterations,
        c.update.value,
    )


def write_summary(out_dir: str, results: dict[SolveConfig, float]) -> str:
    grouped: dict[tuple, list[float]] = {}
    for config, final in results.items():
        grouped.setdefault(_summary_key(config), []).append(final)
    path = Path(out_dir) / "summary.csv"
    with open(path, "w", newline="") as f:
        f.write(SUMMARY_HEADER + "\n")
        for key in sorted(grouped, key=repr):
            vals = grouped[key]
            game, fam, param, n, m, lam, iters, update = key
            mean = sum(vals) / len(vals)
            f.write(
                f"{game},{fam},{param:g},{n},{m},{lam:g},{iters},{update},"
                f"{len(vals)},{_fmt(mean)}\n"
            )
    return str(path)


def cmd_solve(argv: list[str]) -> int:
    parser = _build_solve_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        parser.set_defaults(**_load_config_file(pre.config))
    parser.add_argument("--help", action="help")
    args = parser.parse_args(argv)

    if args.list_games:
        for name in sorted(GAME_REGISTRY):
            print(name)
        return 0
    if not args.game:
        print("error: --game is required (or use --list-games)", file=sys.stderr)
        return 2
    try:
        manifest = build_manifest(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    Path(manifest.out_dir).mkdir(parents=True, exist_ok=True)
    results: dict[SolveConfig, float] = {}
    failed = False
    jobs = max(1, args.jobs)
    if jobs == 1 or len(manifest.configs) == 1:
        for config in manifest.configs:
            try:
                path, final = execute_run(config, manifest.out_dir)
            except Exception as e:  # noqa: BLE001 - report and continue the sweep
                print(f"FAILED {run_filename(config)}: {e}", file=sys.stderr)
                failed = True
                continue
            results[config] = final
            print(f"wrote {path} final_exploitability_milli={final:g}")
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(execute_run, c, manifest.out_dir): c
                for c in manifest.configs
            }
            for future in as_completed(futures):
                config = futures[future]
                try:
                    path, final = future.result()
                except Exception as e:  # noqa: BLE001 - report and continue the sweep
                    print(f"FAILED {run_filename(config)}: {e}", file=sys.stderr)
                    failed = True
                    continue
                results[config] = final
                print(f"wrote {path} final_exploitability_milli={final:g}")
    if results:
        print(f"wrote {write_summary(manifest.out_dir, results)}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# Conformance suite
# ---------------------------------------------------------------------------


def check_info_state_counts(registry=None, expected=None) -> list[tuple[str, bool, str]]:
    registry = GAME_REGISTRY if registry is None else registry
    expected = EXPECTED_INFO_STATES if expected is None else expected
    out = []
    for name, want in expected.items():
        tree = build_tree(registry[name]())
        got = tree.info_state_count
        out.append((f"info_states[{name}]", got == want, f"got {got}, want {want}"))
    return out


_BATTERY_SPECS = (
    LinkSpec.poly(1.5),
    LinkSpec.poly(2.0),
    LinkSpec.poly(3.0),
    LinkSpec.exp(0.1),
    LinkSpec.exp(1.0),
)


def check_blackwell_batteries(draws: int) -> list[tuple[str, bool, str]]:
    out = []
    for spec in _BATTERY_SPECS:
        rng = np.random.default_rng(7)
        u = 1.0
        worst_eq = 0.0
        ok_eq = True
        ok_approx = True
        worst_gap = -np.inf
        for _ in range(draws):
            n = int(rng.integers(2, 5))
            phi = enumerate_transformations(TransformationKind.EXTERNAL, n)
            r_true = rng.uniform(-5.0, 5.0, size=n)
            reward = rng.uniform(-u, u, size=n)
            sigma = policy_from_estimates(spec, r_true, phi).distribution
            lhs = float(link(spec, r_true) @ expected_phi_regret(sigma, reward, phi))
            scale = 1e-8 * max(np.abs(link(spec, r_true)).sum() * u, 1.0)
            worst_eq = max(worst_eq, abs(lhs))
            if abs(lhs) > scale:
                ok_eq = False
            r_est = r_true + rng.uniform(-2.0, 2.0, size=n)
            sigma_est = policy_from_estimates(spec, r_est, phi).distribution
            chk = blackwell_check(spec, r_true, r_est, sigma_est, reward, u)
            worst_gap = max(worst_gap, chk.lhs - chk.rhs)
            if chk.lhs > chk.rhs + 1e-8:
                ok_approx = False
        out.append(
            (f"blackwell_equality[{spec}]", ok_eq, f"worst |lhs| {worst_eq:.2e}")
        )
        out.append(
            (f"blackwell_bound[{spec}]", ok_approx, f"worst lhs-rhs {worst_gap:.2e}")
        )
    return out


def check_internal_fixed_points(draws: int) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(11)
    worst = 0.0
    ok = True
    for _ in range(draws):
        n = int(rng.integers(2, 5))
        phi = enumerate_transformations(TransformationKind.INTERNAL, n)
        y = rng.uniform(0.0, 1.0, size=len(phi))
        fp = internal_fixed_point(y, phi)
        worst = max(worst, fp.residual)
        if fp.residual > 1e-10:
            ok = False
    return [("internal_fixed_point", ok, f"worst residual {worst:.2e}")]


def check_bound_dominance(iterations: int) -> list[tuple[str, bool, str]]:
    out = []
    specs = (LinkSpec.poly(1.5), LinkSpec.poly(2.0), LinkSpec.poly(3.0), LinkSpec.exp(0.1))
    for game in ("rps", "biased_mp"):
        tree = _tree_for(game)
        for spec in specs:
            config = SolveConfig(game=game, link=spec, iterations=iterations)
            result = solve(tree, config)
            ok = True
            worst = -np.inf
            for row in result.rows:
                for p in range(2):
                    gap = row.avg_regret[p] - row.bound[p]
                    worst = max(worst, gap)
                    if gap > 1e-9 * (1.0 + abs(row.bound[p])):
                        ok = False
            out.append(
                (f"bound_dominance[{game},{spec}]", ok, f"worst margin {worst:.2e}")
            )
    return out


def run_conformance(quick: bool) -> list[tuple[str, bool, str]]:
    draws = 100 if quick else 1000
    internal_draws = 50 if quick else 500
    iters = 200 if quick else 1000
    checks: list[tuple[str, bool, str]] = []
    checks.extend(check_info_state_counts())
    checks.extend(check_blackwell_batteries(draws))
    checks.extend(check_internal_fixed_points(internal_draws))
    checks.extend(check_bound_dominance(iters))
    return checks


def cmd_validate(argv: list[str]) -> int:
    parser = argparse.ArgumentParser(prog="frcfr validate")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args(argv)
    checks = run_conformance(args.quick)
    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(checks) - failures}/{len(checks)} conformance checks passed")
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: frcfr {solve,validate} [options]", file=sys.stderr)
        print("  solve    run experiment sweeps and emit CSV logs", file=sys.stderr)
        print("  validate run the conformance suite", file=sys.stderr)
        return 0 if argv else 2
    cmd, rest = argv[0], argv[1:]
    if cmd == "solve":
        return cmd_solve(rest)
    if cmd == "validate":
        return cmd_validate(rest)
    print(f"error: unknown command {cmd!r}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
