import logging
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x; NaN when some y is not positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError(f"Slope fit needs two matching samples, got {x.size} and {y.size}")
    if np.any(x <= 0):
        raise ValueError("Slope fit needs positive abscissae")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        logger.warning("Non-positive values in log-log fit; slope undefined")
        return float("nan")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def growth_factor(values: Sequence[float]) -> float:
    """max(values) / values[0]."""
    values = np.asarray(values, dtype=float)
    if values[0] == 0.0:
        return float("inf") if np.any(values > 0) else 1.0
    return float(values.max() / values[0])


def convergence_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Observed orders log(e_k / e_{k+1}) / log(ratio) of a refinement sequence."""
    errors = np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(ratio)


def richardson(est_lo: complex, lam_lo: float, est_hi: complex, lam_hi: float, delta: float) -> complex:
    """
    Two-point extrapolation removing an error term c * lambda^(-delta).

    (lam_hi^delta est_hi - lam_lo^delta est_lo) / (lam_hi^delta - lam_lo^delta)
    """
    if not (lam_lo > 0 and lam_hi > 0) or lam_lo == lam_hi:
        raise ValueError(f"Richardson needs distinct positive energies, got {lam_lo}, {lam_hi}")
    if not delta > 0:
        raise ValueError(f"Richardson rate must be positive, got {delta}")
    w_lo = lam_lo ** delta
    w_hi = lam_hi ** delta
    return (w_hi * est_hi - w_lo * est_lo) / (w_hi - w_lo)
