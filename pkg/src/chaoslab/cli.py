"""This module contains the command-line surface of chaoslab."""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from chaoslab import forecasting, games, lattice, maps
from chaoslab.errors import ChaosLabError, InsufficientDataError
from chaoslab.options import (
    ClusterKind,
    EmbeddingConfig,
    GameBoundary,
    GameConfig,
    GameInit,
    LatticeBoundary,
    LatticeConfig,
    LatticeInit,
    MapKind,
    MapSpec,
    Neighborhood,
    PatchParams,
    Protocol,
    UpdateMode,
)
from chaoslab.runio import (
    Frame,
    build_report,
    dump_report,
    game_frame,
    package_version,
    read_series,
    write_csv,
    write_frame,
    write_report,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_USAGE_ERROR = 2

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

# Namespace entries that do not change what a run writes.
NOT_REPLAYED = frozenset({"command", "action", "handler", "out", "log_level"})


@dataclass
class Outcome:
    """
    What a subcommand produced.

    Attributes:
        kind: The experiment, e.g. "lattice run".
        config: The resolved configuration.
        results: Outcome of the run.
        summary: One line printed on stdout.
        records: Per-step rows for the CSV file.
        frames: Rendered (generation, frame) pairs.
        seed: Seed of the random stream, if one was used.
    """

    kind: str
    config: Any
    results: dict[str, Any]
    summary: str
    records: list[dict[str, Any]] | None = None
    frames: list[tuple[int, Frame]] = field(default_factory=list)
    seed: int | None = None


Handler = Callable[[argparse.Namespace], Outcome]


def _overrides(args: argparse.Namespace, **names: str) -> dict[str, Any]:
    """Maps config fields to the values of the flags that were given."""
    return {
        key: getattr(args, flag) for key, flag in names.items() if getattr(args, flag) is not None
    }


def _seed(args: argparse.Namespace) -> int:
    return 0 if args.seed is None else int(args.seed)


def _map_spec(args: argparse.Namespace) -> MapSpec:
    return MapSpec(kind=args.map, a=args.a, r0=args.r0, scale=args.scale)


def _map_orbit(args: argparse.Namespace) -> Outcome:
    spec = _map_spec(args)
    orbit = maps.iterate(spec, args.x0, args.n, args.transient)
    records = [{"t": t, "x": float(x)} for t, x in enumerate(orbit.samples)]
    return Outcome(
        kind="map orbit",
        config={"map": spec, "x0": args.x0, "n": args.n, "transient": args.transient},
        results={"final": float(orbit.samples[-1])},
        summary=repr(float(orbit.samples[-1])),
        records=records,
    )


def _map_lyapunov(args: argparse.Namespace) -> Outcome:
    spec = _map_spec(args)
    estimate = maps.lyapunov(spec, args.x0, args.n, args.transient, args.window)
    results: dict[str, Any] = {
        "lambda": estimate.exponent,
        "n_iterates": estimate.n_iterates,
        "clamped": estimate.clamped,
        "superstable": estimate.superstable,
    }
    if estimate.exponent > 0.0:
        results["horizon"] = maps.lyapunov_horizon(estimate.exponent, args.epsilon)

    records = None
    if estimate.window_series is not None:
        records = [{"window": i, "lambda": float(v)} for i, v in enumerate(estimate.window_series)]
    return Outcome(
        kind="map lyapunov",
        config={
            "map": spec,
            "x0": args.x0,
            "n": args.n,
            "transient": args.transient,
            "window": args.window,
            "epsilon": args.epsilon,
        },
        results=results,
        summary=f"{estimate.exponent:.4f}",
        records=records,
    )


def _map_bifurcate(args: argparse.Namespace) -> Outcome:
    spec = _map_spec(args)
    columns = maps.bifurcation_scan(
        spec, args.low, args.high, args.params, settle=args.transient, keep=args.keep, x0=args.x0
    )
    records = [
        {spec.parameter_name: column.parameter, "x": float(x)}
        for column in columns
        for x in column.samples
    ]
    return Outcome(
        kind="map bifurcate",
        config={
            "map": spec,
            "low": args.low,
            "high": args.high,
            "params": args.params,
            "keep": args.keep,
            "transient": args.transient,
            "x0": args.x0,
        },
        results={"columns": len(columns)},
        summary=f"{len(columns)} columns",
        records=records,
    )


def _map_density(args: argparse.Namespace) -> Outcome:
    spec = _map_spec(args)
    orbit = maps.iterate(spec, args.x0, args.n, args.transient)
    reference = None if args.reference == "none" else args.reference
    histogram = maps.density_histogram(orbit, bins=args.bins, reference=reference)
    records = [
        {
            "low": float(histogram.edges[i]),
            "high": float(histogram.edges[i + 1]),
            "mass": float(histogram.mass[i]),
            "reference": None if histogram.reference is None else float(histogram.reference[i]),
        }
        for i in range(histogram.mass.size)
    ]
    distance = histogram.l1_distance
    return Outcome(
        kind="map density",
        config={
            "map": spec,
            "x0": args.x0,
            "n": args.n,
            "transient": args.transient,
            "bins": args.bins,
            "reference": args.reference,
        },
        results={"l1_distance": distance, "occupied_bins": histogram.occupied_bins},
        summary=f"{distance:.4f}" if distance is not None else f"{histogram.occupied_bins} bins",
        records=records,
    )


def _series(args: argparse.Namespace) -> forecasting.Series:
    if args.input:
        return forecasting.Series(read_series(args.input), label=args.input)
    match args.synthetic:
        case "noise":
            return forecasting.white_noise(args.length, _seed(args))
        case "sine":
            return forecasting.sine_series(args.length, noise=args.noise, seed=_seed(args))
        case "ar1":
            return forecasting.ar1_series(args.length, seed=_seed(args))
        case _:
            return forecasting.logistic_series(args.length)


def _embedding(args: argparse.Namespace) -> EmbeddingConfig:
    return EmbeddingConfig(
        dimension=args.e, tau=args.tau, exclusion=args.exclusion, protocol=args.protocol
    )


def _series_config(args: argparse.Namespace) -> dict[str, Any]:
    return {
        "input": args.input,
        "synthetic": None if args.input else (args.synthetic or "logistic"),
        "length": args.length,
        "noise": args.noise,
    }


def _forecast_rho(args: argparse.Namespace) -> Outcome:
    series, config = _series(args), _embedding(args)
    curve = forecasting.rho_curve(series, config, args.p_max)
    return Outcome(
        kind="forecast rho",
        config={"series": _series_config(args), "embedding": config, "p_max": args.p_max},
        results={"rho": curve.to_records(), "decay_rate": curve.decay_rate},
        summary=f"{curve.at(1):.4f}",
        records=curve.to_records(),
        seed=_seed(args),
    )


def _forecast_search(args: argparse.Namespace) -> Outcome:
    series, template = _series(args), _embedding(args)
    result = forecasting.grid_search(
        series, range(1, args.e_max + 1), range(1, args.tau_max + 1), template, args.p_eval
    )
    records = [{"E": e, "tau": tau, "rho": rho} for e, tau, rho in result.table]
    return Outcome(
        kind="forecast search",
        config={
            "series": _series_config(args),
            "embedding": template,
            "e_max": args.e_max,
            "tau_max": args.tau_max,
            "p_eval": args.p_eval,
        },
        results={"E": result.dimension, "tau": result.tau, "rho": result.score},
        summary=f"E={result.dimension} tau={result.tau} rho={result.score:.4f}",
        records=records,
        seed=_seed(args),
    )


def _forecast_baseline(args: argparse.Namespace) -> Outcome:
    series = _series(args)
    curve = forecasting.ar_rho_curve(series, args.order, args.protocol, args.p_max)
    return Outcome(
        kind="forecast baseline",
        config={
            "series": _series_config(args),
            "order": args.order,
            "protocol": args.protocol,
            "p_max": args.p_max,
        },
        results={"rho": curve.to_records()},
        summary=f"{curve.at(1):.4f}",
        records=curve.to_records(),
        seed=_seed(args),
    )


def _forecast_classify(args: argparse.Namespace) -> Outcome:
    series, config = _series(args), _embedding(args)
    curve = forecasting.rho_curve(series, config, args.p_max)
    baseline = forecasting.ar_rho_curve(series, args.order, config.protocol, args.p_max)
    verdict = forecasting.classify(curve, baseline)
    return Outcome(
        kind="forecast classify",
        config={
            "series": _series_config(args),
            "embedding": config,
            "order": args.order,
            "p_max": args.p_max,
        },
        results={"verdict": verdict, "rho": curve.to_records(), "baseline": baseline.to_records()},
        summary=str(verdict),
        records=curve.to_records(),
        seed=_seed(args),
    )


def _forecast_aggregate(args: argparse.Namespace) -> Outcome:
    config = _embedding(args)
    spec = MapSpec(a=args.a)
    records = []
    for k in args.k:
        components = forecasting.independent_components(spec, k, _seed(args))
        series = forecasting.aggregate_series(components, args.length)
        records.append({"k": k, "rho": forecasting.rho_curve(series, config, 1).at(1)})
    return Outcome(
        kind="forecast aggregate",
        config={"map": spec, "k": args.k, "length": args.length, "embedding": config},
        results={"rho": records},
        summary=" ".join(f"{r['k']}:{r['rho']:.4f}" for r in records),
        records=records,
        seed=_seed(args),
    )


def _lattice_setup(args: argparse.Namespace) -> tuple[LatticeConfig, PatchParams]:
    values = dict(lattice.PRESETS[args.preset]) if args.preset else {}
    values.update(
        _overrides(
            args,
            n="n",
            mu_h="mu_h",
            mu_p="mu_p",
            boundary="boundary",
            init="init",
            steps="steps",
            seed="seed",
        )
    )
    config = LatticeConfig(**values)
    return config, PatchParams(r0=args.r0, attack=args.attack, c=args.c)


def _regime(run: lattice.LatticeRun) -> lattice.RegimeReport | None:
    try:
        return lattice.classify_regime(run)
    except InsufficientDataError as e:
        logger.warning("The run is not classified: %s", e)
        return None


def _lattice_run(args: argparse.Namespace) -> Outcome:
    config, params = _lattice_setup(args)
    run = lattice.simulate(config, params, frames_every=args.frames_every)
    report = _regime(run)
    return Outcome(
        kind="lattice run",
        config={"lattice": config, "patch": params, "frames_every": args.frames_every},
        results={"regime": report, "extinct_at": run.extinct_at, "generations": run.generations},
        summary=str(report.label) if report else f"{run.generations} generations",
        records=run.to_records(),
        frames=run.frames,
        seed=config.seed,
    )


def _lattice_classify(args: argparse.Namespace) -> Outcome:
    config, params = _lattice_setup(args)
    report = lattice.classify_regime(lattice.simulate(config, params))
    return Outcome(
        kind="lattice classify",
        config={"lattice": config, "patch": params},
        results={"regime": report},
        summary=str(report.label),
        seed=config.seed,
    )


def _game_config(args: argparse.Namespace, **fixed: Any) -> GameConfig:
    values = _overrides(
        args,
        n="n",
        b="b",
        epsilon="epsilon",
        neighborhood="neighborhood",
        boundary="boundary",
        update="update",
        stiffness="stiffness",
        generations="generations",
        init="init",
        fraction_c="fraction_c",
        seed="seed",
    )
    return GameConfig(**{**values, **fixed})


def _game_run(args: argparse.Namespace) -> Outcome:
    config = _game_config(args)
    run = games.run(config, frames_every=args.frames_every)
    start = min(args.window_start, config.generations)
    mean = games.fc_window(run.fc, start, config.generations)
    return Outcome(
        kind="game run",
        config={
            "game": config,
            "window_start": args.window_start,
            "frames_every": args.frames_every,
        },
        results={
            "final_f_C": run.fc.values[-1],
            "window": [start, config.generations],
            "mean_f_C": mean,
            "degenerate": run.degenerate,
        },
        summary=f"{mean:.4f}",
        records=run.fc.to_records(),
        frames=run.frames,
        seed=config.seed,
    )


def _game_kaleidoscope(args: argparse.Namespace) -> Outcome:
    config = _game_config(args, init=GameInit.SINGLE_D_CENTER)
    if args.n is None:
        config = replace(config, n=games.kaleidoscope_size(config.generations))
    fc: list[float] = []
    square: list[float] = []
    frames: list[tuple[int, Frame]] = []
    symmetric = True
    for board in games.evolve(config):
        fc.append(board.fraction_c)
        square.append(games.fc_square(board, board.generation))
        symmetric = symmetric and games.is_dihedral_symmetric(board.strategies)
        if args.frames_every and board.generation % args.frames_every == 0:
            frames.append((board.generation, game_frame(board.strategies, board.previous)))

    minima = [t for t in range(1, len(fc) - 1) if fc[t] < fc[t - 1] and fc[t] < fc[t + 1]]
    series = games.FcSeries(np.array(fc))
    return Outcome(
        kind="game kaleidoscope",
        config={"game": config, "frames_every": args.frames_every},
        results={"symmetric": symmetric, "minima": minima},
        summary=f"symmetric={str(symmetric).lower()} minima={minima}",
        records=[
            {**record, "f_C_square": value} for record, value in zip(series.to_records(), square)
        ],
        frames=frames,
        seed=config.seed,
    )


def _game_cluster(args: argparse.Namespace) -> Outcome:
    template = _game_config(args)
    report = games.cluster_experiment(
        template.b, args.kind, args.k, args.steps, template, n=args.n
    )
    records = [{"t": t, "minority": count} for t, count in enumerate(report.counts)]
    return Outcome(
        kind="game cluster",
        config={
            "template": template,
            "kind": args.kind,
            "k": args.k,
            "generations": args.steps,
            "n": args.n,
        },
        results={"verdict": report.verdict, "n": report.n, "counts": report.counts},
        summary=str(report.verdict),
        records=records,
    )


def _game_fc_theory(_: argparse.Namespace) -> Outcome:
    value = games.fc_theory()
    return Outcome(
        kind="game fc-theory",
        config={},
        results={"f_C": value, "quadrature": games.fc_quadrature()},
        summary=f"{value:.10f}",
    )


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Directory receiving the report, CSV file and frames")
    common.add_argument(
        "--seed", type=int, help="Unsigned 64-bit seed; 0 unless a lattice preset pins one"
    )
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format")
    common.add_argument("--frames-every", type=int, help="Render a frame every K generations")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Verbosity of the log on stderr",
    )
    return common


def _add_map_commands(commands: Any, common: argparse.ArgumentParser) -> None:
    group = commands.add_parser("map", help="One-dimensional maps")
    actions = group.add_subparsers(dest="action", required=True)

    shared = argparse.ArgumentParser(add_help=False, parents=[common])
    shared.add_argument("--map", type=MapKind, choices=list(MapKind), default=MapKind.LOGISTIC)
    shared.add_argument("--a", type=float, default=4.0, help="Logistic growth parameter")
    shared.add_argument("--r0", type=float, default=20.0, help="Ricker reproductive rate")
    shared.add_argument("--scale", type=float, default=1.0, help="Ricker density scale")
    shared.add_argument("--x0", type=float, default=maps.DEFAULT_X0, help="Initial state")
    shared.add_argument("--transient", type=int, default=maps.DEFAULT_TRANSIENT)

    orbit = actions.add_parser("orbit", parents=[shared], help="Iterate a map")
    orbit.add_argument("--n", type=int, default=100)
    orbit.set_defaults(handler=_map_orbit)

    lyapunov = actions.add_parser("lyapunov", parents=[shared], help="Lyapunov exponent")
    lyapunov.add_argument("--n", type=int, default=maps.DEFAULT_ITERATES)
    lyapunov.add_argument("--window", type=int, help="Report windowed estimates too")
    lyapunov.add_argument("--epsilon", type=float, default=1e-6, help="Initial uncertainty")
    lyapunov.set_defaults(handler=_map_lyapunov)

    bifurcate = actions.add_parser("bifurcate", parents=[shared], help="Bifurcation diagram")
    bifurcate.add_argument("--low", type=float, default=2.8)
    bifurcate.add_argument("--high", type=float, default=4.0)
    bifurcate.add_argument("--params", type=int, default=200, help="Number of parameter values")
    bifurcate.add_argument("--keep", type=int, default=100, help="Samples kept per parameter")
    bifurcate.set_defaults(handler=_map_bifurcate)

    density = actions.add_parser("density", parents=[shared], help="Invariant density")
    density.add_argument("--n", type=int, default=1_000_000)
    density.add_argument("--bins", type=int, default=50)
    density.add_argument("--reference", choices=["arcsine", "uniform", "none"], default="arcsine")
    density.set_defaults(handler=_map_density)


def _add_forecast_commands(commands: Any, common: argparse.ArgumentParser) -> None:
    group = commands.add_parser("forecast", help="Nonlinear forecasting")
    actions = group.add_subparsers(dest="action", required=True)

    shared = argparse.ArgumentParser(add_help=False, parents=[common])
    source = shared.add_mutually_exclusive_group()
    source.add_argument("--input", help="CSV file whose first column is the series")
    source.add_argument(
        "--synthetic",
        choices=["logistic", "noise", "sine", "ar1"],
        help="Generated series; logistic unless --input is given",
    )
    shared.add_argument("--length", type=int, default=1000, help="Length of a synthetic series")
    shared.add_argument("--noise", type=float, default=0.0, help="Noise amplitude of the sine")
    shared.add_argument("--e", type=int, default=3, help="Embedding dimension")
    shared.add_argument("--tau", type=int, default=1, help="Lag")
    shared.add_argument("--exclusion", type=int, default=0)
    shared.add_argument(
        "--protocol", type=Protocol, choices=list(Protocol), default=Protocol.HALF_SPLIT_FORWARD
    )
    shared.add_argument("--p-max", type=int, default=10, help="Longest prediction interval")

    actions.add_parser("rho", parents=[shared], help="ρ against T_p").set_defaults(
        handler=_forecast_rho
    )

    search = actions.add_parser("search", parents=[shared], help="Embedding search")
    search.add_argument("--e-max", type=int, default=10)
    search.add_argument("--tau-max", type=int, default=4)
    search.add_argument("--p-eval", type=int, default=1)
    search.set_defaults(handler=_forecast_search)

    baseline = actions.add_parser("baseline", parents=[shared], help="Linear AR baseline")
    baseline.add_argument("--order", type=int, default=2)
    baseline.set_defaults(handler=_forecast_baseline)

    classify = actions.add_parser("classify", parents=[shared], help="Chaos or noise")
    classify.add_argument("--order", type=int, default=2)
    classify.set_defaults(handler=_forecast_classify)

    aggregate = actions.add_parser("aggregate", parents=[shared], help="Sums of logistic maps")
    aggregate.add_argument("--k", type=int, nargs="+", default=[1, 2, 5, 10, 50])
    aggregate.add_argument("--a", type=float, default=4.0)
    aggregate.set_defaults(handler=_forecast_aggregate)


def _add_lattice_commands(commands: Any, common: argparse.ArgumentParser) -> None:
    group = commands.add_parser("lattice", help="Host-parasitoid lattice")
    actions = group.add_subparsers(dest="action", required=True)

    shared = argparse.ArgumentParser(add_help=False, parents=[common])
    shared.add_argument("--preset", choices=list(lattice.PRESETS), help="Named dispersal regime")
    shared.add_argument("--n", type=int, help="Side length")
    shared.add_argument("--r0", type=float, default=2.0)
    shared.add_argument("--attack", type=float, default=1.0)
    shared.add_argument("--c", type=float, default=1.0)
    shared.add_argument("--mu-h", type=float, help="Dispersing fraction of hosts")
    shared.add_argument("--mu-p", type=float, help="Dispersing fraction of parasitoids")
    shared.add_argument("--boundary", type=LatticeBoundary, choices=list(LatticeBoundary))
    shared.add_argument("--init", type=LatticeInit, choices=list(LatticeInit))
    shared.add_argument("--steps", type=int, help="Generations")

    actions.add_parser("run", parents=[shared], help="Simulate").set_defaults(
        handler=_lattice_run
    )
    actions.add_parser("classify", parents=[shared], help="Regime label").set_defaults(
        handler=_lattice_classify
    )


def _add_game_commands(commands: Any, common: argparse.ArgumentParser) -> None:
    group = commands.add_parser("game", help="Spatial Prisoner's Dilemma")
    actions = group.add_subparsers(dest="action", required=True)

    shared = argparse.ArgumentParser(add_help=False, parents=[common])
    shared.add_argument("--n", type=int, help="Side length")
    shared.add_argument("--b", type=float, help="Defector advantage")
    shared.add_argument("--epsilon", type=float, help="Punishment of mutual defection")
    shared.add_argument("--neighborhood", type=Neighborhood, choices=list(Neighborhood))
    shared.add_argument("--boundary", type=GameBoundary, choices=list(GameBoundary))
    shared.add_argument("--update", type=UpdateMode, choices=list(UpdateMode))
    shared.add_argument("--stiffness", type=float, help="Exponent of probabilistic winning")
    shared.add_argument("--generations", type=int)
    shared.add_argument("--init", type=GameInit, choices=list(GameInit))
    shared.add_argument("--fraction-c", type=float, help="Cooperators of a random board")

    run = actions.add_parser("run", parents=[shared], help="Play the game")
    run.add_argument("--window-start", type=int, default=0, help="First generation of the mean")
    run.set_defaults(handler=_game_run)

    actions.add_parser("kaleidoscope", parents=[shared], help="Single defector").set_defaults(
        handler=_game_kaleidoscope
    )

    cluster = actions.add_parser("cluster", parents=[shared], help="Cluster growth")
    cluster.add_argument("--kind", type=ClusterKind, choices=list(ClusterKind), required=True)
    cluster.add_argument("--k", type=int, default=2, help="Block side length")
    cluster.add_argument("--steps", type=int, default=20, help="Generations")
    cluster.set_defaults(handler=_game_cluster)

    actions.add_parser("fc-theory", parents=[common], help="12 ln 2 - 8").set_defaults(
        handler=_game_fc_theory
    )


def build_parser() -> argparse.ArgumentParser:
    """Builds the argument parser of all subcommands."""
    parser = argparse.ArgumentParser(
        prog="chaoslab",
        description="Reproducible experiments on chaos in maps, time series, lattices and games.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {package_version()}")

    common = _common_parser()
    commands = parser.add_subparsers(dest="command", required=True)
    _add_map_commands(commands, common)
    _add_forecast_commands(commands, common)
    _add_lattice_commands(commands, common)
    _add_game_commands(commands, common)
    return parser


def _flag_value(value: Any) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def replay_argv(args: argparse.Namespace, seed: int | None = None) -> list[str]:
    """
    Rebuilds a command line that repeats a run with every flag resolved.

    Args:
        args (argparse.Namespace): The parsed command line.
        seed (int, optional): Seed the run resolved when --seed was not given.

    Returns:
        list[str]: Arguments for dispatch, without --out and --log-level.
    """
    argv = [args.command, args.action]
    for name, value in sorted(vars(args).items()):
        if name == "seed" and value is None:
            value = seed
        if name in NOT_REPLAYED or value is None:
            continue
        argv.append("--" + name.replace("_", "-"))
        argv.extend(_flag_value(v) for v in (value if isinstance(value, list) else [value]))
    return argv


def emit(outcome: Outcome, args: argparse.Namespace) -> None:
    """Writes the artifacts of a subcommand and prints its summary."""
    results = dict(outcome.results)
    if args.format == "json" and outcome.records is not None:
        results["records"] = outcome.records
    argv = replay_argv(args, outcome.seed)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = outcome.kind.replace(" ", "-")
        write_report(
            out / f"{stem}.json", outcome.kind, outcome.config, results, outcome.seed, argv
        )
        if args.format == "csv" and outcome.records:
            write_csv(outcome.records, out / f"{stem}.csv")
        if outcome.frames:
            frames = out / "frames"
            frames.mkdir(exist_ok=True)
            for t, frame in outcome.frames:
                write_frame(frame, frames / f"{stem}-{t:05d}.{frame.format}")
    elif outcome.frames:
        logger.warning("Frames are only written together with --out")

    if args.format == "json" and not args.out:
        report = build_report(outcome.kind, outcome.config, results, outcome.seed, argv)
        print(dump_report(report), end="")
    else:
        print(outcome.summary)


def dispatch(argv: Sequence[str] | None = None) -> int:
    """
    Parses argv, runs the selected experiment and returns the exit code.

    Returns:
        int: 0 on success, 1 on a runtime error, 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE_ERROR

    logging.basicConfig(level=args.log_level, stream=sys.stderr, format=LOG_FORMAT)
    handler: Handler = args.handler
    try:
        emit(handler(args), args)
    except (ChaosLabError, ValueError, OSError) as e:
        logger.debug("%s %s failed", args.command, args.action, exc_info=True)
        print(f"chaoslab: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    return EXIT_OK
