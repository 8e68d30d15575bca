"""Command-line entry point: `python main.py <command> [flags]`."""
import argparse
import logging
import re
import sys

from app.deps import config_from_args
from app.errors import LabError
from app.routers import bulk, charsum, density, interface, report, zeros
from utils.config import LOG_LEVEL

logger = logging.getLogger("bergman_lab")

# flags whose values may start with a minus sign, e.g. --beta -2..2:0.5
_SIGNED_FLAGS = {"--beta", "--point", "--w", "--E"}
_SIGNED_VALUE = re.compile(r"^-(\d|\.\d|inf)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bergman-lab",
        description="Exact and asymptotic equivariant and partial Bergman densities",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    # include routers
    for router in (density, bulk, interface, charsum, zeros, report):
        router.register(subparsers)
    return parser


def attach_signed_values(argv: list[str]) -> list[str]:
    """Rewrite `--beta -1..1` as `--beta=-1..1` so argparse does not read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        token = argv[i]
        if token in _SIGNED_FLAGS and i + 1 < len(argv) and _SIGNED_VALUE.match(argv[i + 1]):
            out.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


def configure_logging(verbosity: int = 0) -> None:
    level = logging.getLevelName(LOG_LEVEL.upper())
    if not isinstance(level, int):
        level = logging.WARNING
    if verbosity:
        level = min(level, logging.INFO if verbosity == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(attach_signed_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        extras = {name: getattr(args, name) for name in getattr(args, "extras", ())}
        return args.handler(config, **extras)
    except LabError as exc:
        logger.debug("command %s failed", args.command, exc_info=True)
        print(f"❌ {type(exc).__name__}: {exc.detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
