"""`interface`: k^{−m}Π_{k,(−∞,E]} across the interface against the Erf law."""
import logging
import math

from joblib import Parallel, delayed

from app.deps import add_common_arguments, base_point, basis_for_points, build_geometry, interval
from app.models import SpectralInterval
from app.schemas import ConvergenceRow, ExperimentConfig, LogRealOut
from app.services import asymptotics, geometry, spectra, storage
from utils.config import thread_cap

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("interface", help="Erf transition of the partial density at H = E")
    add_common_arguments(parser)
    parser.set_defaults(handler=run_interface)


def _rows_for_k(config: ExperimentConfig, k: int) -> list[ConvergenceRow]:
    geom = build_geometry(config)
    z_E = geometry.level_point(geom, base_point(config, geom), config.E).z_E
    P = interval(config, SpectralInterval.up_to(config.E))
    points = [geometry.flow(geom, z_E, beta / math.sqrt(k)) for beta in config.beta_list]
    basis = basis_for_points(geom, k, points)
    log_km = geom.m * math.log(k)
    rows = []
    for beta, z in zip(config.beta_list, points):
        exact = spectra.partial_density(basis, geom, z, P)
        predicted = asymptotics.predict_interface(geom, k, config.E, z_E, beta)
        scaled = 0.0 if exact.is_zero() else math.exp(exact.log_mag - log_km)
        gap = abs(scaled - math.exp(predicted.value.log_mag - log_km))
        rows.append(ConvergenceRow.compare(k, exact, predicted.value, 0.5, label=geom.label(), beta=beta,
                                           energy=config.E, abs_error=gap,
                                           alternate=LogRealOut.of(predicted.alternate),
                                           inputs=predicted.inputs_echo()))
    return rows


def interface_rows(config: ExperimentConfig) -> list[ConvergenceRow]:
    per_k = Parallel(n_jobs=thread_cap(config.threads), prefer="threads")(
        delayed(_rows_for_k)(config, k) for k in config.k_list
    )
    return [row for rows in per_k for row in rows]


def run_interface(config: ExperimentConfig) -> int:
    rows = interface_rows(config)
    path = storage.write_rows("interface", rows, config)
    worst = max((r.abs_error for r in rows), default=0.0)
    print(f"✅ interface: {len(rows)} rows written to {path} (largest |k^-m Π − Erf| = {worst:.3e})")
    return 0
