"""
Command-line entry point.
Точка входа CLI: nlcf run / render / kernel-info.

Exit codes: 0 pass, 1 quantitative failure, 2 configuration error,
3 numerical abort.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import structlog
from pydantic import ValidationError

from nlcf.exceptions import ConfigurationError, NlcfError
from nlcf.schemas.scenario import ScenarioConfig
from nlcf.services.kernels import kernel_service
from nlcf.services.rendering import render_service
from nlcf.services.scenario_service import scenario_service
from nlcf.utils.logger import configure_logging

logger = structlog.get_logger(__name__)


def _load_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError("file not found", path=str(path)) from e
    except json.JSONDecodeError as e:
        raise ConfigurationError("malformed JSON", path=str(path), line=e.lineno, error=e.msg) from e


def _validation_error(e: ValidationError, what: str) -> ConfigurationError:
    errors = [{"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]} for err in e.errors()]
    return ConfigurationError(f"invalid {what}", errors=errors)


def apply_overrides(data: dict[str, Any], h: float | None, T: float | None, s: float | None) -> dict[str, Any]:
    """--h, --T and --s sweep overrides, applied before validation."""
    if not isinstance(data, dict):
        raise ConfigurationError("scenario config must be a JSON object")
    data = dict(data)
    grid = dict(data.get("grid") or {})
    if h is not None:
        grid["h"] = h
    if T is not None:
        grid["T"] = T
    if grid:
        data["grid"] = grid
    if s is not None:
        data["kernel"] = {"type": "fractional", "s": s}
    return data


def load_config(path: Path, h: float | None = None, T: float | None = None, s: float | None = None,
                output: Path | None = None) -> ScenarioConfig:
    data = apply_overrides(_load_json(path), h, T, s)
    if output is not None:
        data["output_dir"] = str(output)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise _validation_error(e, "scenario config") from e


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.h, args.T, args.s, args.output)
    outcome = scenario_service.run(config)
    print(
        json.dumps(
            {
                "scenario": outcome.scenario,
                "passed": outcome.passed,
                "output_dir": str(outcome.output_dir),
                "failed": [c.name for c in outcome.checks if not c.passed],
            },
            sort_keys=True,
            indent=2,
        )
    )
    return outcome.exit_code


def cmd_render(args: argparse.Namespace) -> int:
    paths = render_service.render_frames(args.trace_dir, args.output)
    print(json.dumps({"frames": [str(p) for p in paths]}, indent=2))
    return 0


def cmd_kernel_info(args: argparse.Namespace) -> int:
    k = kernel_service.make_kernel(_load_json(args.kernel))
    k1 = kernel_service.make_kernel(_load_json(args.dominating)) if args.dominating else None
    report = kernel_service.kernel_info(k, k1)
    print(report.model_dump_json(by_alias=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlcf",
        description="Numerical laboratory for planar nonlocal curvature flows",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run scenarios/ball.json --h 0.015625
  %(prog)s run scenarios/cross_strong.json --s 0.3 --output runs/cross_s03
  %(prog)s render runs/cross-strong
  %(prog)s kernel-info kernels/fractional_05.json
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one scenario from a JSON config")
    run.add_argument("config", type=Path)
    run.add_argument("--h", type=float, help="Override grid.h")
    run.add_argument("--T", type=float, help="Override grid.T")
    run.add_argument("--s", type=float, help="Replace the kernel by the fractional kernel of order s")
    run.add_argument("--output", type=Path, help="Run directory (default: <output_dir>/<scenario>)")
    run.set_defaults(func=cmd_run)

    render = sub.add_parser("render", help="Render the frames of a run directory to SVG")
    render.add_argument("trace_dir", type=Path)
    render.add_argument("--output", type=Path, help="SVG directory (default: <trace_dir>/svg)")
    render.set_defaults(func=cmd_render)

    info = sub.add_parser("kernel-info", help="Print integrability, regime and ball constants of a kernel")
    info.add_argument("kernel", type=Path)
    info.add_argument("--dominating", type=Path, help="Kernel K₁ for Φ when K₀ is not monotone")
    info.set_defaults(func=cmd_kernel_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except NlcfError as e:
        logger.error("command_failed", command=args.command, exit_code=e.exit_code, **e.to_dict())
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
