import logging
import warnings
from typing import Callable

from scipy import integrate

from app.errors import NumericError

logger = logging.getLogger(__name__)


def quad_checked(func: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-12, **kwargs) -> float:
    """scipy quad; the reported error may exceed the request by at most a factor 1e4."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=rel_tol, limit=kwargs.pop("limit", 200), **kwargs)
    logger.debug("quad [%g, %g] value=%.16g err=%.2e", a, b, value, err)
    if err > max(1e4 * rel_tol * abs(value), 1e-300):
        raise NumericError(f"quadrature on [{a:g}, {b:g}] did not converge (value {value:.6g}, error {err:.2e})")
    return float(value)
