"""`density`: equivariant densities Π_{k,j} at e^{β/√k}·z_E against the scaled prediction."""
import logging
import math

from joblib import Parallel, delayed

from app.deps import add_common_arguments, base_point, basis_for_points, build_geometry
from app.errors import DomainError
from app.schemas import ConvergenceRow, ExperimentConfig
from app.services import asymptotics, geometry, spectra, storage
from utils.config import thread_cap

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("density", help="equivariant density near a level set")
    add_common_arguments(parser)
    parser.set_defaults(handler=run_density)


def _rows_for_k(config: ExperimentConfig, k: int) -> list[ConvergenceRow]:
    geom = build_geometry(config)
    j = round(k * config.E)
    if j <= 0:
        raise DomainError(f"k={k} has no positive weight near E={config.E}")
    # the weight fixes the level: E_j = j/k
    level = geometry.level_point(geom, base_point(config, geom), j / k)
    points = [geometry.flow(geom, level.z_E, beta / math.sqrt(k)) for beta in config.beta_list]
    basis = basis_for_points(geom, k, points)
    rows = []
    for beta, z in zip(config.beta_list, points):
        exact = spectra.equivariant_density(basis, geom, z, j)
        predicted = asymptotics.predict_scaled(geom, k, level.z_E, beta)
        rows.append(ConvergenceRow.compare(k, exact, predicted.value, 1.0 if beta == 0 else 0.5,
                                           label=geom.label(), beta=beta, energy=j / k,
                                           inputs=predicted.inputs_echo()))
    logger.info("density k=%d j=%d: %d rows", k, j, len(rows))
    return rows


def density_rows(config: ExperimentConfig) -> list[ConvergenceRow]:
    per_k = Parallel(n_jobs=thread_cap(config.threads), prefer="threads")(
        delayed(_rows_for_k)(config, k) for k in config.k_list
    )
    return [row for rows in per_k for row in rows]


def run_density(config: ExperimentConfig) -> int:
    rows = density_rows(config)
    path = storage.write_rows("density", rows, config)
    print(f"✅ density: {len(rows)} rows written to {path}")
    return 0
