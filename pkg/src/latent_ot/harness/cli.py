"""Command-line entry point.

Subcommands: ``run`` executes an experiment config and writes the result and
timing tables, ``props`` runs the randomized property suite, ``plot`` renders
one metric of a results file to SVG, and ``gen`` samples a single graph and
writes its edge list.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 numeric
failure, 3 property-suite failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, InvalidParameterError, LatentOtError
from ..latent_models import NonlocalKernel, eps_graph, graph_to_edgelist, sample_kernel_graph, sample_latents
from ..rng import RngSeed
from .config import apply_seed_override, load_config
from .experiments import run_experiment
from .plots import emit_plot
from .properties import run_property_suite
from .results import emit_csv, parse_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_PROPERTIES = 3


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so bad arguments map to exit code 1."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="latent-ot", description="Transport estimation between node groups of latent-space graphs.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = commands.add_parser("run", help="run an experiment config and write CSV tables")
    run.add_argument("--config", required=True, help="path to a JSON experiment config")
    run.add_argument("--out-dir", required=True, help="directory for the output tables")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    props = commands.add_parser("props", help="run the randomized property suite")
    props.add_argument("--trials", type=int, required=True, help="trials per check")
    props.add_argument("--seed", type=int, required=True, help="base seed for the suite")

    plot = commands.add_parser("plot", help="render one metric of a results CSV to SVG")
    plot.add_argument("--csv", required=True, help="path to a results CSV")
    plot.add_argument("--metric", required=True, help="metric name to plot")
    plot.add_argument("--out", required=True, help="output SVG path")

    gen = commands.add_parser("gen", help="sample one graph from a config and write its edge list")
    gen.add_argument("--config", required=True, help="path to a JSON experiment config")
    gen.add_argument("--out", required=True, help="output edge list path")
    return parser


def _cmd_run(args) -> int:
    config = apply_seed_override(load_config(args.config))
    if args.workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {args.workers}")
    tables = run_experiment(config, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / config.output.results
    timings_path = out_dir / config.output.timings
    emit_csv(tables.results, results_path)
    emit_csv(tables.timings, timings_path)
    cells = len(config.grid) * len(config.seeds)
    total_seconds = sum(row.value for row in tables.timings.rows)
    print(f"wrote {results_path} ({len(tables.results)} rows) and {timings_path} ({cells} cells, {total_seconds:.1f}s)")
    return EXIT_OK


def _cmd_props(args) -> int:
    report = run_property_suite(trials=args.trials, seed=args.seed)
    for line in report.format_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_PROPERTIES


def _cmd_plot(args) -> int:
    table = parse_csv(args.csv)
    emit_plot(table, args.metric, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    config = apply_seed_override(load_config(args.config))
    if config.experiment == "stability_suite":
        raise ConfigError("the stability suite has no graph to generate")
    assert config.manifold is not None and config.kernel is not None
    total = config.grid[0]
    seed = config.seeds[0]
    n, m = config.sizes_at(total)
    base = RngSeed(seed)
    latents = sample_latents(
        config.manifold, config.density, n, m, total, base.derive("latents", total), config.placement
    )
    if config.kernel.kind == "local":
        h = config.kernel.radius_at(total, config.manifold.intrinsic_dim)
        graph = eps_graph(latents, h)
    else:
        assert config.kernel.form is not None
        model = NonlocalKernel(rho=config.kernel.rho_at(total), form=config.kernel.form)
        graph = sample_kernel_graph(latents, model, base.derive("graph", total))
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(graph_to_edgelist(graph))
    print(f"wrote {out} ({graph.node_count} nodes, {graph.edge_count} edges)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "props":
            return _cmd_props(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_gen(args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LatentOtError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
