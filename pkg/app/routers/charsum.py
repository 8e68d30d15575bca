"""`charsum`: the interval character by direct sum, geometric closed form and Euler–MacLaurin form."""
import logging

from app.deps import add_common_arguments, interval
from app.models import CharacterRoute, SpectralInterval
from app.schemas import CharacterRow, ExperimentConfig
from app.services import charsum, storage

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9


def register(subparsers) -> None:
    parser = subparsers.add_parser("charsum", help="three-route interval character agreement")
    add_common_arguments(parser)
    parser.set_defaults(handler=run_charsum)


def character_rows(config: ExperimentConfig) -> list[CharacterRow]:
    P = interval(config, SpectralInterval.below(config.E))
    tolerance = config.tolerance or DEFAULT_TOLERANCE
    rows = []
    for k in config.k_list:
        for w in config.w_list:
            values = {route: charsum.interval_character(k, P, w, route).value for route in CharacterRoute}
            reference = values[CharacterRoute.DIRECT_SUM]
            scale = max(abs(reference), 1e-300)
            discrepancy = max(abs(v - reference) for v in values.values()) / scale
            rows.append(CharacterRow(
                k=k,
                E=config.E,
                w=str(complex(w)),
                direct=repr(values[CharacterRoute.DIRECT_SUM]),
                geometric=repr(values[CharacterRoute.GEOMETRIC]),
                euler_maclaurin=repr(values[CharacterRoute.EULER_MACLAURIN]),
                max_relative_discrepancy=discrepancy,
                passed=discrepancy <= tolerance,
            ))
    return rows


def run_charsum(config: ExperimentConfig) -> int:
    rows = character_rows(config)
    path = storage.write_rows("charsum", rows, config)
    failed = sum(not r.passed for r in rows)
    if failed:
        print(f"❌ charsum: {failed} of {len(rows)} rows disagree beyond tolerance; see {path}")
    else:
        print(f"✅ charsum: {len(rows)} rows agree, written to {path}")
    return 0
