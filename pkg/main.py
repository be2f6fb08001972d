import os
import sys
import json
import logging
import argparse
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path

# Import modules
from modules.budget import QueryBudget
from modules.cache import ReplayCache
from modules.config import Config, RunConfig, MODES, P_METHODS
from modules.dialects import (
    host_only_conflicts, host_only_path_losses, load_dialects, max_urls_per_batch,
)
from modules.errors import (
    ConfigError, DataError, MissingRanking, OracleError, ParseError, StatsError, TooFewItems,
)
from modules.ingest import dedup, load_expert_list, normalize_url, window
from modules.logger import setup_logger
from modules.oracle import EngineOracle
from modules.ranking import Ranking, run_ranking, write_query_log
from modules.report import EXPERT, INTER_ENGINE, ComparisonCell, correlation_table, scatter_data
from modules.simulate import (
    NOISE_KINDS, HiddenScoreModel, NoiseModel, SimulatedTransport, make_score_oracle, perturb, sweep,
)
from modules.stats import correlate, pair_rankings, pair_with_expert
from modules.transport import HttpTransport

logger = logging.getLogger('url_ranker')

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ORACLE = 2
EXIT_DATA = 3


def resource_path(relative_path):
    """Shipped file as given if it exists, otherwise the copy next to main.py"""
    if os.path.isabs(relative_path) or os.path.exists(relative_path):
        return relative_path
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), relative_path)


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's exit 2"""

    def error(self, message):
        raise ConfigError(message)


def _split(text, cast, what):
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of {what}, got {text!r}")


def int_list(text):
    return _split(text, int, "integers")


def float_list(text):
    return _split(text, float, "numbers")


def name_list(text):
    return _split(text, str, "names")


def build_parser():
    parser = ArgumentParser(prog="url-ranker", description="Rank URL lists through search engines and correlate them with expert lists")
    parser.add_argument("--config", default="config.json", help="JSON run configuration")
    parser.add_argument("--log-level", dest="log_level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", help="rank every (engine, list, n) and write ranking files")
    rank.add_argument("--lists", nargs="+", required=True, help="expert list CSV/JSON files")
    rank.add_argument("--engines", dest="engine_names", type=name_list, help="engine names from the config")
    rank.add_argument("--q", type=int, help="URLs per oracle query")
    rank.add_argument("--n", dest="n_values", type=int_list, help="list lengths, e.g. 10,25,50")
    rank.add_argument("--mode", choices=MODES)
    rank.add_argument("--cache", dest="cache_dir")
    rank.add_argument("--out", dest="out_dir")
    rank.add_argument("--seed", type=int)

    corr = sub.add_parser("correlate", help="Kendall tau tables and scatter data from ranking files")
    corr.add_argument("--rankings", dest="rankings_dir", required=True)
    corr.add_argument("--expert", nargs="+", required=True)
    corr.add_argument("--engines", dest="engine_names", type=name_list)
    corr.add_argument("--n", dest="n_values", type=int_list)
    corr.add_argument("--p-method", dest="p_method", choices=P_METHODS)
    corr.add_argument("--out", dest="out_dir")

    sim = sub.add_parser("simulate", help="noise sweep over simulated engines")
    sim.add_argument("--n", dest="n_values", type=int_list)
    sim.add_argument("--strengths", type=float_list)
    sim.add_argument("--seeds", type=int, help="replicates per cell")
    sim.add_argument("--seed", type=int, help="base seed")
    sim.add_argument("--noise-kind", dest="noise_kind", choices=NOISE_KINDS)
    sim.add_argument("--q", dest="sweep_q", type=int, help="rank each replicate through batches of q")
    sim.add_argument("--out", dest="out_dir")
    return parser


def write_manifest(out_dir, command, run):
    """Config echo, date and seed for reproducing the run"""
    manifest = {
        "command": command,
        "date": datetime.now(timezone.utc).date().isoformat(),
        "seed": run.seed,
        "config": run.to_dict(),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Manifest written to {path}")


# Ranking

def ranking_file_name(engine, list_name, n):
    return f"{engine}__{list_name}__n{n}.json"


def engine_dialect(name, engine_config, dialects):
    dialect_name = engine_config.get("dialect")
    if dialect_name not in dialects:
        raise ConfigError(f"Engine {name}: unknown dialect {dialect_name!r}")
    return dialects[dialect_name].with_overrides(daily_quota=engine_config.get("daily_quota"))


def check_batch_size(q, engine_dialects):
    for name, dialect in engine_dialects.items():
        limit = max_urls_per_batch(dialect)
        if limit is not None and q > limit:
            raise ConfigError(f"q={q} exceeds the {limit}-URL batch limit of {name} ({dialect.name})")


def dialect_limitation(ids, dialect):
    """Why a host-only dialect cannot rank these URLs, or None"""
    conflicts = host_only_conflicts(ids, dialect)
    if conflicts:
        return f"dialect limitation: {len(conflicts)} URLs share a host under {dialect.name}"
    losses = host_only_path_losses(ids, dialect)
    if losses:
        return f"dialect limitation: {len(losses)} URLs lose their path under {dialect.name}"
    return None


def hidden_order(expert, engine_config, seed):
    """The fixed order a simulated engine answers from, plus the URLs it does not index"""
    settings = engine_config.get("simulate") or {}
    ids = expert.ids()
    given = [normalize_url(url) for url in settings.get("order") or []]
    if given:
        known, listed = set(ids), set(given)
        ids = [url for url in given if url in known] + [url for url in ids if url not in listed]
    try:
        noise = NoiseModel(settings.get("kind", "adjacent-swap"), float(settings.get("strength", 0)), seed)
    except ValueError as e:
        raise ConfigError(f"Bad simulate settings: {e}") from e
    order = perturb(Ranking(items=tuple(ids), source=expert.name), noise)
    missing = frozenset(normalize_url(url) for url in settings.get("unindexed") or [])
    return list(order.items), missing


def build_oracle(run, name, engine_config, dialect, budget, cache, order, missing):
    if run.mode == "simulate":
        return make_score_oracle(HiddenScoreModel.from_order(order), name=name, unindexed=missing)
    if run.mode == "replay":
        return EngineOracle(name, dialect, budget=budget, cache=cache, replay_only=True)
    if engine_config.get("http"):
        transport = HttpTransport.from_config(engine_config["http"])
    else:
        transport = SimulatedTransport(order, missing=missing)
    return EngineOracle(name, dialect, transport=transport, budget=budget, cache=cache)


def cmd_rank(run):
    if not run.lists:
        raise ConfigError("rank needs at least one list (--lists)")
    if not run.engines:
        raise ConfigError("No engines configured")
    run.require_cache()

    dialects = load_dialects(resource_path(run.dialects_file))
    engine_dialects = {name: engine_dialect(name, conf, dialects) for name, conf in run.engines.items()}
    check_batch_size(run.q, engine_dialects)

    cache = None
    if run.mode in ("record", "replay"):
        cache = ReplayCache.open(run.cache_dir, create=run.mode == "record")
    budgets = {
        name: QueryBudget(name, dialect.daily_quota, ledger_path=run.budget_ledger)
        for name, dialect in engine_dialects.items()
    }

    rankings_dir = Path(run.out_dir) / "rankings"
    rankings_dir.mkdir(parents=True, exist_ok=True)

    for list_path in run.lists:
        expert_full = load_expert_list(list_path)
        for name, engine_config in run.engines.items():
            dialect = engine_dialects[name]
            order, missing = hidden_order(dedup(expert_full, "url"), engine_config, run.engine_seed(name))

            for n in run.n_values:
                expert = window(expert_full, n, run.dedup_key, run.windowed)
                ids = expert.ids()
                if len(set(ids)) != len(ids):
                    raise DataError(f"{expert_full.name}: top {n} repeats a URL, set dedup_key")
                path = rankings_dir / ranking_file_name(name, expert_full.name, n)
                meta = {"engine": name, "list": expert_full.name, "n": n, "window": len(expert)}

                reason = dialect_limitation(ids, dialect)
                if reason:
                    logger.warning(f"{name}/{expert_full.name} n={n} skipped, {reason}")
                    empty = Ranking(items=(), source=name)
                    path.write_text(empty.to_json(**meta, dropped=True, drop_reason=reason), encoding="utf-8")
                    continue

                oracle = build_oracle(run, name, engine_config, dialect, budgets[name], cache, order, missing)
                ranking = run_ranking(expert.items(), oracle, run.q).to_ranking()
                path.write_text(ranking.to_json(**meta, dropped=False, drop_reason=None), encoding="utf-8")
                write_query_log(path.with_suffix(".queries.jsonl"), ranking.query_log)
                logger.info(f"{name}/{expert_full.name} n={n}: {len(ranking.query_log)} queries, written to {path}")

    write_manifest(run.out_dir, "rank", run)
    return EXIT_OK


# Correlation

def load_ranking_file(path):
    """Ranking plus the run metadata stored beside it"""
    path = Path(path)
    if not path.exists():
        raise MissingRanking(f"No ranking file {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return Ranking.from_dict(data), data
    except (ValueError, KeyError) as e:
        raise ParseError(f"{path}: {e}") from e


def unusable(ranking, meta, window_size, threshold):
    """Drop reason for a ranking, or None when it can be correlated"""
    if meta.get("dropped"):
        return meta.get("drop_reason") or "dropped"
    missing = len(ranking.unranked)
    if window_size and missing / window_size > threshold:
        return f"{missing} URLs not indexed"
    return None


def _cell(label, n, kind, pairing, p_method):
    try:
        return ComparisonCell.from_result(label, correlate(pairing, p_method), kind=kind)
    except TooFewItems as e:
        return ComparisonCell.dropped_cell(label, n, str(e), kind=kind)


def correlation_cells(expert_name, windows, engines, run):
    """Expert cells per engine, then inter-engine cells per pair, each for every n"""
    cells = []
    for name in engines:
        for n in run.n_values:
            expert, loaded = windows[n]
            ranking, meta = loaded[name]
            label = f"{name}/{expert_name}"
            reason = unusable(ranking, meta, len(expert), run.drop_unindexed_fraction)
            if reason:
                cells.append(ComparisonCell.dropped_cell(label, len(expert), reason, kind=EXPERT))
                continue
            cells.append(_cell(label, len(expert), EXPERT, pair_with_expert(expert.ids(), ranking), run.p_method))

    for a, b in combinations(engines, 2):
        for n in run.n_values:
            expert, loaded = windows[n]
            label = f"{a}/{b}"
            reasons = [f"{name}: {reason}" for name in (a, b)
                       if (reason := unusable(*loaded[name], len(expert), run.drop_unindexed_fraction))]
            if reasons:
                cells.append(ComparisonCell.dropped_cell(label, len(expert), "; ".join(reasons), kind=INTER_ENGINE))
                continue
            pairing = pair_rankings(loaded[a][0], loaded[b][0])
            cells.append(_cell(label, len(expert), INTER_ENGINE, pairing, run.p_method))
    return cells


def rankings_directory(path):
    path = Path(path)
    if (path / "rankings").is_dir():
        return path / "rankings"
    return path


def cmd_correlate(run):
    if not run.expert:
        raise ConfigError("correlate needs at least one expert list (--expert)")
    engines = list(run.engines)
    if not engines:
        raise ConfigError("No engines configured")
    rankings_dir = rankings_directory(run.rankings_dir or run.out_dir)
    out_dir = Path(run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for expert_path in run.expert:
        expert_full = load_expert_list(expert_path)
        windows = {}
        for n in run.n_values:
            expert = window(expert_full, n, run.dedup_key, run.windowed)
            loaded = {name: load_ranking_file(rankings_dir / ranking_file_name(name, expert_full.name, n))
                      for name in engines}
            windows[n] = (expert, loaded)

        cells = correlation_cells(expert_full.name, windows, engines, run)
        text, csv = correlation_table(cells)
        (out_dir / f"{expert_full.name}__table.txt").write_text(text, encoding="utf-8")
        (out_dir / f"{expert_full.name}__table.csv").write_text(csv, encoding="utf-8")

        for n, (expert, loaded) in windows.items():
            scatter = scatter_data(expert, {name: ranking for name, (ranking, _) in loaded.items()}, len(expert))
            (out_dir / f"{expert_full.name}__scatter_n{n}.csv").write_text(scatter, encoding="utf-8")

        marked = sum(cell.marked for cell in cells)
        logger.info(f"{expert_full.name}: {len(cells)} cells, {marked} moderate or strong, written to {out_dir}")
        print(text, end="")

    write_manifest(out_dir, "correlate", run)
    return EXIT_OK


# Simulation

def cmd_simulate(run):
    if any(n < 3 for n in run.n_values):
        raise ConfigError("simulate needs every n >= 3")
    if any(strength < 0 for strength in run.strengths):
        raise ConfigError("noise strengths must be non-negative")
    if run.seeds < 1:
        raise ConfigError("seeds must be at least 1")
    if run.noise_kind not in NOISE_KINDS:
        raise ConfigError(f"noise kind must be one of {', '.join(NOISE_KINDS)}")
    if run.sweep_q is not None and run.sweep_q < 2:
        raise ConfigError("sweep q must be at least 2")

    out_dir = Path(run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frame = sweep(run.n_values, run.strengths, run.seeds, noise_kind=run.noise_kind, seed=run.seed, q=run.sweep_q)
    path = out_dir / "sweep.csv"
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Sweep table written to {path}")

    write_manifest(out_dir, "simulate", run)
    return EXIT_OK


COMMANDS = {
    "rank": cmd_rank,
    "correlate": cmd_correlate,
    "simulate": cmd_simulate,
}


def _fail(error, code):
    logger.error(f"{type(error).__name__}: {error}")
    print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)

        # Setup logging
        setup_logger(args.log_level or "INFO")
        logger.info(f"Starting {args.command}")

        # Load configuration
        config = Config(args.config)
        if not args.log_level:
            setup_logger(config.get("log_level") or "INFO")

        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config", "log_level")}
        run = RunConfig.from_sources(config, flags)
        return COMMANDS[args.command](run)
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except OracleError as e:
        return _fail(e, EXIT_ORACLE)
    except (DataError, StatsError) as e:
        return _fail(e, EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())
