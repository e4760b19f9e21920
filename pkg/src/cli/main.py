import argparse
import logging

from cli.commands import cmd_assemble, cmd_build_rom, cmd_mesh, cmd_simulate, cmd_stats, cmd_validate
from errors import VvTwinError

_logger = logging.getLogger("Cli")

COMMANDS = {
    "assemble": (cmd_assemble, "assemble the full-order EM, coupling and structural models"),
    "build-rom": (cmd_build_rom, "reduce the assembled models (EM-ROMs, structural ROM, optional DEIM)"),
    "simulate": (cmd_simulate, "run a scenario on the reduced models"),
    "validate": (cmd_validate, "compare a reduced run with the full-order chain"),
    "mesh": (cmd_mesh, "write the scenario's fixture mesh"),
    "stats": (cmd_stats, "print compression and reduction statistics of a bundle"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vv-twin", description="Vacuum-vessel EM-structural reduced-order toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--mesh", help="mesh file (.msh or .txt); defaults to the scenario's generated mesh")
        sub.add_argument("--scenario", help="scenario JSON file or preset name")
        sub.add_argument("--out", help="bundle directory (mesh file for the mesh command)")
        sub.add_argument("--eps", type=float, help="H-matrix compression tolerance")
        sub.add_argument("--eta-adm", type=float, help="H-matrix admissibility parameter")
        sub.add_argument("--eta-rom", type=float, help="reduced-model tolerance")
        sub.add_argument("--theta", type=float, help="theta-method parameter in [0, 1]")
        sub.add_argument("--tau", type=float, help="time step (s)")
        sub.add_argument("--deim", action="store_true", help="build / use the DEIM force path")
        sub.add_argument("--threads", type=int, help="offline worker threads")
        sub.add_argument("--seed", type=int, help="seed of the randomized training traces")
        sub.add_argument("--fom", help="bundle whose full-order models serve as the validation reference (defaults to --out)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except VvTwinError as e:
        _logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        _logger.exception(f"{args.command} failed unexpectedly: {e}")
        return 1
