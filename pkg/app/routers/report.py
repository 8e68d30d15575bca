"""`report`: run the acceptance criteria and emit PASS/FAIL per criterion."""
import logging

from app.deps import add_common_arguments
from app.schemas import ExperimentConfig
from app.services import acceptance, storage
from utils.config import thread_cap

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("report", help="acceptance criteria with PASS/FAIL verdicts")
    add_common_arguments(parser)
    parser.add_argument("--only", help="comma separated criterion names", default=None)
    parser.set_defaults(handler=run_report, extras=("only",))


def run_report(config: ExperimentConfig, only: str | None = None) -> int:
    names = [n.strip() for n in only.split(",") if n.strip()] if only else None
    report = acceptance.run_all(names, threads=thread_cap(config.threads))
    path = storage.write_document("report", report, config)
    for criterion in report.criteria:
        mark = "✅ PASS" if criterion.passed else "❌ FAIL"
        print(f"{mark}  {criterion.name}: {criterion.detail}")
    print(f"report written to {path}")
    return 0 if report.passed else 1
