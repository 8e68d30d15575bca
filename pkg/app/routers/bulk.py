"""`bulk`: partial densities away from the interface.

Without --point the evaluation point sits on the ray through (1, …, 1) at
energy halfway between E and min(2E, sup H), i.e. in the forbidden region.
"""
import logging

import numpy as np
from joblib import Parallel, delayed

from app.deps import add_common_arguments, base_point, basis_for_points, build_geometry, interval
from app.models import ModelGeometry, SpectralInterval
from app.schemas import ConvergenceRow, ExperimentConfig
from app.services import asymptotics, geometry, spectra, storage
from utils.config import thread_cap

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("bulk", help="partial density in the allowed or forbidden region")
    add_common_arguments(parser)
    parser.set_defaults(handler=run_bulk)


def _evaluation_point(config: ExperimentConfig, geom: ModelGeometry) -> np.ndarray:
    if config.point is not None:
        return base_point(config, geom)
    _, top = geom.energy_range()
    target = 0.5 * (config.E + min(2.0 * config.E, top))
    return geometry.level_point(geom, np.ones(geom.m, dtype=complex), target).z_E


def _row(config: ExperimentConfig, geom: ModelGeometry, z: np.ndarray, P: SpectralInterval, k: int) -> ConvergenceRow:
    basis = basis_for_points(geom, k, [z])
    exact = spectra.partial_density(basis, geom, z, P)
    predicted = asymptotics.predict_bulk(geom, k, config.E, z)
    return ConvergenceRow.compare(k, exact, predicted.value, 1.0, label=predicted.regime.value, energy=config.E,
                                   inputs=predicted.inputs_echo())


def bulk_rows(config: ExperimentConfig) -> list[ConvergenceRow]:
    geom = build_geometry(config)
    z = _evaluation_point(config, geom)
    P = interval(config, SpectralInterval.below(config.E))
    logger.info("bulk at H(z)=%.6g, E=%.6g, P=%s", geometry.hamiltonian(geom, z), config.E, P)
    return Parallel(n_jobs=thread_cap(config.threads), prefer="threads")(
        delayed(_row)(config, geom, z, P, k) for k in config.k_list
    )


def run_bulk(config: ExperimentConfig) -> int:
    rows = bulk_rows(config)
    path = storage.write_rows("bulk", rows, config)
    print(f"✅ bulk: {len(rows)} rows written to {path}")
    return 0
