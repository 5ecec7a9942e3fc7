"""CLI `vrrjump`: simulate, optimize, compare, sweep-ratio, envelope."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional

from .. import config
from ..errors import ConfigError, InfeasibleSearchError, SimulationError, VrrJumpError
from . import runner
from .storage import bundled_config_path, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_SIMULATION = 4


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (default: bundled reference config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, default=config.WORKERS, help="worker processes for the grid search")
    common.add_argument("--jacobian-mode", choices=["paper", "geometric", "hip"], help="override leg.jacobian_mode")
    # không có RNG nào; flag chỉ để giữ chỗ
    common.add_argument("--seedless", action="store_true", help="accepted for compatibility; runs are deterministic")

    parser = argparse.ArgumentParser(prog="vrrjump", description="Knee jump simulation and mechanism search")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="simulate one takeoff with the configured mechanism")

    p = sub.add_parser("optimize", parents=[common], help="grid search one joint type")
    p.add_argument("--joint", choices=["vrr", "frr"], default="vrr")
    p.add_argument("--dump-grid", action="store_true", help="write every evaluated candidate")

    p = sub.add_parser("compare", parents=[common], help="EVRR vs FRR at every initial angle")
    p.add_argument("--dump-grid", action="store_true", help="write every evaluated candidate")

    p = sub.add_parser("sweep-ratio", parents=[common], help="reduction ratio curve of the configured linkage")
    p.add_argument("--q2-lo", type=float)
    p.add_argument("--q2-hi", type=float)
    p.add_argument("--n", type=int, default=200)

    p = sub.add_parser("envelope", parents=[common], help="motor torque/power envelope table")
    p.add_argument("--n", type=int, default=101)

    return parser


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def dispatch(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {"output_dir": args.out, "leg.jacobian_mode": args.jacobian_mode}
    run = load_config(args.config or bundled_config_path(), overrides)
    if args.workers < 1:
        raise ConfigError(f"must be >= 1 (got {args.workers})", key="--workers")

    show_progress = sys.stderr.isatty()
    if args.command == "simulate":
        return runner.run_simulate(run)
    if args.command == "optimize":
        return runner.run_optimize(run, args.joint, args.workers, args.dump_grid, show_progress=show_progress)
    if args.command == "compare":
        return runner.run_compare(run, args.workers, args.dump_grid, show_progress=show_progress)
    if args.command == "sweep-ratio":
        return runner.run_sweep_ratio(run, args.q2_lo, args.q2_hi, args.n)
    return runner.run_envelope(run, args.n)


def main(argv: Optional[List[str]] = None) -> int:
    config.setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse: 0 cho --help, 2 cho usage error
        return int(e.code or 0)

    try:
        summary = dispatch(args)
    except ConfigError as e:
        logger.error("[CLI] Config error: %s", e)
        return EXIT_CONFIG
    except InfeasibleSearchError as e:
        logger.error("[CLI] Infeasible search: %s", e)
        return EXIT_INFEASIBLE
    except SimulationError as e:
        logger.error("[CLI] Simulation error: %s", e)
        return EXIT_SIMULATION
    except VrrJumpError as e:
        # domain errors từ tham số cơ cấu / góc
        logger.error("[CLI] Invalid parameters: %s", e)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("[CLI] I/O error: %s", e)
        return 1

    print(json.dumps(_json_safe(summary), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
