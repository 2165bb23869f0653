"""Matrix discrepancy norms and log-log rate fitting.

Operator norms are estimated by power iteration on the Gram matrix, which
keeps the cost at a few matrix-vector products per step even for matrices
with thousands of rows; a dense SVD stays available in tests as the oracle
for small matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericFailureError

_POWER_ITERATION_BUDGET = 100_000


@dataclass(frozen=True)
class DiscrepancyReport:
    """Norms of the difference between a matrix and its estimate.

    Attributes:
        sup_norm: Largest absolute entry of the difference.
        frobenius: Frobenius norm of the difference.
        frobenius_normalized: Frobenius norm divided by sqrt(rows * cols);
            for a square N x N difference this equals the norm divided by N.
        operator: Largest singular value of the difference.
        rows, cols: Shape of the compared matrices.
        normalization: Label describing the normalization convention.
    """

    sup_norm: float
    frobenius: float
    frobenius_normalized: float
    operator: float
    rows: int
    cols: int
    normalization: str = "sqrt(rows*cols)"


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(value) against log(N).

    Attributes:
        points: The (N, value) pairs that were fitted.
        slope: Fitted exponent of the power law value ~ N^slope.
        intercept: Fitted log-scale offset.
        r_squared: Coefficient of determination; defined as 1.0 when the
            values are constant (the fit is then exact).
    """

    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    r_squared: float


def operator_norm(matrix: np.ndarray, tol: float = 1e-10) -> float:
    """Largest singular value via power iteration on the Gram matrix.

    Starts from the normalized all-ones vector; if an iteration stalls (for
    instance because the start vector lies in the null space) it restarts
    from a different deterministic vector.  Raises
    :class:`NumericFailureError` if no start converges within the shared
    budget of 1e5 iterations.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.size == 0:
        raise InvalidParameterError("operator_norm needs a nonempty matrix")
    if not np.all(np.isfinite(mat)):
        raise InvalidParameterError("operator_norm needs finite entries")
    if tol <= 0:
        raise InvalidParameterError(f"tol must be positive: {tol}")
    if not mat.any():
        return 0.0

    cols = mat.shape[1]
    starts = [
        np.full(cols, 1.0 / math.sqrt(cols)),
        _basis_vector(cols, 0),
        _alternating_vector(cols),
    ]
    budget = _POWER_ITERATION_BUDGET // len(starts)
    for start in starts:
        vec = start
        estimate = 0.0
        for _ in range(budget):
            image = mat @ vec
            norm_image = float(np.linalg.norm(image))
            if norm_image == 0.0:
                break  # start vector is in the null space; restart
            previous = estimate
            estimate = norm_image / float(np.linalg.norm(vec))
            vec = mat.T @ image
            vec_norm = float(np.linalg.norm(vec))
            if vec_norm == 0.0:
                break
            vec = vec / vec_norm
            if abs(estimate - previous) <= tol * max(estimate, 1e-300):
                return estimate
    raise NumericFailureError("power iteration did not converge within its budget")


def _basis_vector(size: int, index: int) -> np.ndarray:
    out = np.zeros(size)
    out[index] = 1.0
    return out


def _alternating_vector(size: int) -> np.ndarray:
    out = np.ones(size)
    out[1::2] = -1.0
    return out / math.sqrt(size)


def discrepancy(matrix: np.ndarray, estimate: np.ndarray) -> DiscrepancyReport:
    """All four norms of the difference between two equal-shape matrices."""
    a = np.asarray(matrix, dtype=np.float64)
    b = np.asarray(estimate, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidParameterError(f"shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or a.size == 0:
        raise InvalidParameterError("discrepancy needs nonempty matrices")
    diff = a - b
    frobenius = float(np.linalg.norm(diff))
    operator = operator_norm(diff) if diff.any() else 0.0
    rows, cols = diff.shape
    return DiscrepancyReport(
        sup_norm=float(np.abs(diff).max()),
        frobenius=frobenius,
        frobenius_normalized=frobenius / math.sqrt(rows * cols),
        operator=operator,
        rows=rows,
        cols=cols,
    )


def fit_rate(points: list[tuple[float, float]]) -> RateFit:
    """Fit log(value) = intercept + slope * log(N) by ordinary least squares."""
    if len(points) < 3:
        raise InvalidParameterError(f"need at least 3 points, got {len(points)}")
    scales = np.array([float(p[0]) for p in points])
    values = np.array([float(p[1]) for p in points])
    if np.any(scales <= 0) or np.any(values <= 0):
        raise InvalidParameterError("rate fitting needs positive scales and values")
    x = np.log(scales)
    y = np.log(values)
    x_center = x - x.mean()
    denom = float(x_center @ x_center)
    if denom == 0.0:
        raise InvalidParameterError("all scales are equal; slope is undefined")
    slope = float(x_center @ (y - y.mean())) / denom
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else 1.0 - float(residuals @ residuals) / total
    return RateFit(
        points=tuple((float(p[0]), float(p[1])) for p in points),
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
    )
