"""Command-line front end for the pipeline and its individual stages.

Exit codes: 0 success (a degraded run still exits 0 with a warning),
2 validation error, 3 I/O or file-format error, 4 entropy failure.
"""

from __future__ import annotations

import argparse
import sys

from . import config as config_mod
from . import pipeline
from .errors import EXIT_FORMAT, PipelineError, ValidationError
from .pipeline import STATUS_DEGRADED
from .rng_eval import render_table_report

# commands that consume each reproducibility fixture; running them with an
# explicit fixture needs an opt-in
_SEED_CONSUMERS = {"simulate", "pipeline"}
_COLUMN_CONSUMERS = {"condition", "pipeline"}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key-value config file")
    common.add_argument("--out", metavar="PATH", help="output artifact path")
    common.add_argument("--report", metavar="PATH", help="evaluation report path")
    common.add_argument("--workers", type=int, metavar="N", help="bulk generation workers")
    common.add_argument("--seed", type=int, metavar="N", help="simulation seed (fixture)")
    common.add_argument(
        "--keep-intermediates", action="store_true",
        help="keep per-stage artifacts produced by the pipeline command",
    )
    common.add_argument(
        "--insecure-fixtures", action="store_true",
        help="allow fixed seeds / fixed conditioner columns outside of tests",
    )

    parser = argparse.ArgumentParser(
        prog="enrbg",
        description="Entropy-source simulation, conditioning, expansion, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write per-chip tick streams")
    p.add_argument("--text", action="store_true", help="one decimal tick per line")

    p = sub.add_parser("extract", parents=[common], help="tick streams to raw bits")
    p.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    p.add_argument("--text", action="store_true", help="inputs are text tick streams")

    p = sub.add_parser("condition", parents=[common], help="Toeplitz-condition raw bits")
    p.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    p.add_argument(
        "--emit-params", metavar="PATH",
        help="save the (possibly bootstrapped) conditioner parameters",
    )

    p = sub.add_parser("drbg-gen", parents=[common], help="expand a conditioned seed")
    p.add_argument("--in", dest="in_path", required=True, metavar="PATH")

    p = sub.add_parser("eval", parents=[common], help="run the statistical battery")
    p.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    sub.add_parser("pipeline", parents=[common], help="run all stages in memory")
    return parser


def _flag_values(args) -> dict:
    values = {}
    if args.seed is not None:
        values["source.sim_seed"] = str(args.seed)
    if args.workers is not None:
        values["drbg.workers"] = str(args.workers)
    if args.out is not None:
        values["output_path"] = args.out
    if args.report is not None:
        values["report_path"] = args.report
    return values


def _load_config(args) -> config_mod.PipelineConfig:
    file_values = config_mod.parse_config_file(args.config) if args.config else {}
    merged = config_mod.merge_mappings(
        file_values, config_mod.env_overrides(), _flag_values(args)
    )
    return config_mod.build_config(merged, insecure_fixtures=args.insecure_fixtures)


def _check_fixture_policy(command: str, cfg: config_mod.PipelineConfig) -> None:
    if cfg.insecure_fixtures:
        return
    fixtures = []
    if cfg.seed_is_fixture and command in _SEED_CONSUMERS:
        fixtures.append("source.sim_seed")
    if cfg.first_column_hex and command in _COLUMN_CONSUMERS:
        fixtures.append("toeplitz.first_column")
    if fixtures:
        raise ValidationError(
            f"{command} refuses reproducibility fixtures ({', '.join(fixtures)}) "
            f"in production mode; pass --insecure-fixtures to allow them"
        )


def _require_out(args) -> str:
    if args.out is None:
        raise ValidationError("--out is required for this command")
    return args.out


def _cmd_simulate(args, cfg) -> int:
    paths = pipeline.stage_simulate(cfg, _require_out(args), text=args.text)
    print(f"wrote {len(paths)} tick stream(s): {paths[0]} ...")
    return 0


def _cmd_extract(args, cfg) -> int:
    n = pipeline.stage_extract(cfg, args.in_path, _require_out(args), text=args.text)
    print(f"extracted {n} raw bits -> {args.out}")
    return 0


def _cmd_condition(args, cfg) -> int:
    n = pipeline.stage_condition(
        cfg, args.in_path, _require_out(args), emit_params_path=args.emit_params
    )
    print(f"conditioned {n} bits -> {args.out}")
    return 0


def _cmd_drbg_gen(args, cfg) -> int:
    n = pipeline.stage_drbg_gen(cfg, args.in_path, _require_out(args))
    print(f"wrote {n} output bytes -> {args.out}",
          file=sys.stderr if args.out == "-" else sys.stdout)
    return 0


def _cmd_eval(args, cfg) -> int:
    report_path = cfg.report_path
    artifacts = pipeline.stage_eval(
        cfg, args.in_path, report_path=report_path, figures=not args.no_figures
    )
    if report_path is None:
        print(render_table_report(artifacts.report), end="")
    else:
        print(f"report -> {artifacts.report_path}")
        for fig in artifacts.figure_paths:
            print(f"figure -> {fig}")
    return 0


def _cmd_pipeline(args, cfg) -> int:
    result = pipeline.run_pipeline(cfg)
    if cfg.output_path:
        pipeline.write_output_bytes(cfg.output_path, result.output)
        if cfg.output_path != "-":
            print(f"wrote {len(result.output)} output bytes -> {cfg.output_path}")
        if args.keep_intermediates and cfg.output_path != "-":
            # stages are deterministic in the config, so re-running them
            # reproduces exactly the artifacts the in-memory run consumed
            base = cfg.output_path
            pipeline.stage_simulate(cfg, f"{base}.ticks")
            pipeline.stage_extract(cfg, f"{base}.ticks", f"{base}.raw.qbit")
            pipeline.stage_condition(cfg, f"{base}.raw.qbit", f"{base}.cond.qbit")
            print(f"intermediates -> {base}.ticks*, {base}.raw.qbit, {base}.cond.qbit")
    if result.status == STATUS_DEGRADED:
        print(f"warning: entropy source failed mid-run; {result.status}", file=sys.stderr)
    extras = {
        "status": result.status,
        "min_entropy_raw": f"{result.min_entropy_raw:.6f}",
    }
    if cfg.report_path:
        pipeline.evaluate_stream(
            result.output, report_path=cfg.report_path,
            status=result.status, extras=extras,
        )
        print(f"report -> {cfg.report_path}", file=sys.stderr if cfg.output_path == "-" else sys.stdout)
    else:
        # keep stdout clean when the byte stream itself goes there
        stream = sys.stderr if cfg.output_path == "-" else sys.stdout
        print(render_table_report(result.report, status=result.status), end="", file=stream)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "extract": _cmd_extract,
    "condition": _cmd_condition,
    "drbg-gen": _cmd_drbg_gen,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        _check_fixture_policy(args.command, cfg)
        return _HANDLERS[args.command](args, cfg)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
