"""Command-line entry point for the eikolab diagnostics."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from eikolab import __version__
from eikolab.core.config import RunConfig, get_settings
from eikolab.core.errors import ValidationFailure
from eikolab.core.logging import get_logger
from eikolab.pipeline.commands import get_command_runner
from eikolab.reports.writer import to_jsonable

settings = get_settings()
logger = get_logger()


def float_tuple(count: int) -> Callable[[str], Tuple[float, ...]]:
    """argparse type for ``count`` comma-separated floats."""

    def parse(text: str) -> Tuple[float, ...]:
        try:
            values = tuple(float(part) for part in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got '{text}'")
        if len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {len(values)}")
        return values

    return parse


def float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def json_object(text: str) -> Dict[str, Any]:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"invalid JSON: {e}")
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return value


def _parents() -> Dict[str, argparse.ArgumentParser]:
    def parent() -> argparse.ArgumentParser:
        return argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)

    grid = parent()
    grid.add_argument("--nx", type=int, help="Nodes along x (default 257)")
    grid.add_argument("--ny", type=int, help="Nodes along y (default 257)")
    grid.add_argument("--h", type=float, help="Grid spacing (default 1/128)")
    grid.add_argument("--x0", type=float, help="Lower-left x; the grid is centered at 0 by default")
    grid.add_argument("--y0", type=float, help="Lower-left y")

    field = parent()
    field.add_argument("--field", help="Input field file")

    output = parent()
    output.add_argument("-o", "--output", help="Report path (stdout when omitted)")

    zeta = parent()
    zeta.add_argument("--zeta", type=float_tuple(3), help="Test bump cx,cy,R")

    ladder = parent()
    ladder.add_argument("--eps-ladder", dest="eps_ladder", type=float_list, help="Mollifier radii in units of h, e.g. 8,4,2")

    window = parent()
    window.add_argument("--window", type=float_tuple(4), help="x_min,x_max,y_min,y_max")
    window.add_argument("--annulus", type=float_tuple(4), help="cx,cy,r_min,r_max")
    window.add_argument("--seed", type=int, help="Pair subsampling seed")

    generator = parent()
    generator.add_argument("--kind", help="Generator name")
    generator.add_argument("--params", type=json_object, help="Generator parameters as a JSON object")

    return {
        "grid": grid, "field": field, "output": output, "zeta": zeta,
        "ladder": ladder, "window": window, "generator": generator,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eikolab",
        description="Diagnostics for unit-length divergence-free fields and Burgers weak solutions",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="JSON file whose values override the flags")
    parser.add_argument("--print-config", action="store_true", help="Print the merged configuration and exit")
    p = _parents()
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    sub.add_parser(
        "generate", parents=[p["generator"], p["grid"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Sample a canonical field into a field file",
    )
    seminorm = sub.add_parser(
        "seminorm", parents=[p["field"], p["window"], p["ladder"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Gagliardo seminorm and commutator ladder",
    )
    seminorm.add_argument("--s", type=float, help="Fractional order (default 1/3)")
    seminorm.add_argument("--p", type=float, help="Integrability exponent (default 3)")

    production = sub.add_parser(
        "production", parents=[p["field"], p["zeta"], p["ladder"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Entropy production and its eps decomposition",
    )
    production.add_argument("--entropy", help="Entropy description JSON file")

    kinetic = sub.add_parser(
        "kinetic", parents=[p["field"], p["zeta"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Kinetic residuals over a direction fan",
    )
    kinetic.add_argument("--fan", dest="fan_size", type=int, help=f"Number of directions (default {settings.fan_size})")

    classify = sub.add_parser(
        "classify", parents=[p["field"], p["window"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Vortex or Lipschitz verdict on a window",
    )
    classify.add_argument("--d", type=float, help="Window margin")
    classify.add_argument("--loop", type=float_tuple(3), help="Winding loop circle cx,cy,r")
    classify.add_argument("--loop-samples", dest="loop_samples", type=int, help="Points on the winding loop")
    classify.add_argument("--trace-csv", dest="trace_csv", help="Export characteristics as CSV (seed, t, x1, x2)")

    burgers = sub.add_parser(
        "burgers", parents=[p["generator"], p["field"], p["ladder"], p["output"]], argument_default=argparse.SUPPRESS,
        help="Residual classification of a Burgers space-time field",
    )
    burgers.add_argument("--vl", type=float, help="Left state")
    burgers.add_argument("--vr", type=float, help="Right state")
    burgers.add_argument("--s-star", dest="s_star", type=float, help="Initial discontinuity position")
    burgers.add_argument("--nt", type=int, help="Time nodes (default 256)")
    burgers.add_argument("--ns", type=int, help="Space nodes (default 256)")
    burgers.add_argument("--t-range", dest="t_range", type=float_tuple(2), help="t_min,t_max")
    burgers.add_argument("--s-range", dest="s_range", type=float_tuple(2), help="s_min,s_max")
    burgers.add_argument(
        "--window", dest="windows", type=float_tuple(4), action="append", help="t_min,t_max,s_min,s_max (repeatable)"
    )
    burgers.add_argument("--energy", action="store_true", help="Add the energy residual and its shock oracle")
    return parser


def merged_options(args: argparse.Namespace) -> Dict[str, Any]:
    """Flag values overlaid with the ``--config`` file, which wins on conflicts."""
    options = {k: v for k, v in vars(args).items() if k not in ("config", "print_config")}
    if args.command is None:
        options.pop("command")
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationFailure(f"cannot read config file {args.config}: {e}") from e
        if not isinstance(data, dict):
            raise ValidationFailure("config file must hold a JSON object")
        options.update(data)
    return options


def print_config(options: Dict[str, Any]) -> None:
    run = {
        name: info.get_default(call_default_factory=True)
        for name, info in RunConfig.model_fields.items()
        if not info.is_required()
    }
    run.update(options)
    payload = {"run": run, "settings": settings.model_dump(), "version": __version__}
    sys.stdout.write(json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        options = merged_options(args)
        if args.print_config:
            print_config(options)
            return 0
        if "command" not in options:
            parser.print_help(sys.stderr)
            return ValidationFailure.exit_code
        config = RunConfig(**options)
    except ValidationFailure as e:
        logger.error("❌ Invalid configuration", error=str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error("❌ Invalid configuration", error=str(e))
        return ValidationFailure.exit_code
    return get_command_runner().run(config)


if __name__ == "__main__":
    raise SystemExit(main())
