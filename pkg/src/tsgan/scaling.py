"""Zero-mean / unit-variance standardization with an exact inverse.

Fitted on the training closes only; the fitted parameters travel with the
model checkpoint so generated values can be mapped back to price scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ScalerParams:
    mean: float
    stddev: float  # population standard deviation (divide by N)
    n_fitted: int

    def __post_init__(self):
        if self.n_fitted < 2:
            raise DataError(f"scaler needs at least 2 values, got {self.n_fitted}")
        if not (np.isfinite(self.mean) and np.isfinite(self.stddev)):
            raise DataError("scaler parameters must be finite")
        if self.stddev <= 0:
            raise DataError("zero variance: cannot standardize a constant series")


def fit(values: np.ndarray) -> ScalerParams:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise DataError(f"scaler needs at least 2 values, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise DataError("cannot fit scaler on non-finite values")
    mean = float(values.mean())
    stddev = float(values.std())  # ddof=0, population convention
    return ScalerParams(mean=mean, stddev=stddev, n_fitted=int(values.size))


def transform(values: np.ndarray, params: ScalerParams) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DataError("cannot transform non-finite values")
    return (values - params.mean) / params.stddev


def inverse_transform(normalized: np.ndarray, params: ScalerParams) -> np.ndarray:
    normalized = np.asarray(normalized, dtype=np.float64)
    if not np.all(np.isfinite(normalized)):
        raise DataError("cannot inverse-transform non-finite values")
    return normalized * params.stddev + params.mean
