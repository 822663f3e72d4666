"""OLS through the normal equations, coefficient inference and forecast errors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, InsufficientDataError, NotPositiveDefiniteError, ShapeError
from .linalg import as_matrix, cholesky, t_two_sided, tri_solve


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    residual_variance: float
    regressor_names: tuple[str, ...]
    n: int

    @property
    def df(self) -> int:
        return self.n - len(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "df": self.df,
            "residual_variance": self.residual_variance,
            "rows": [
                {"name": name, "parameter": float(b), "std_error": float(se), "t_stat": float(t), "p_value": float(p)}
                for name, b, se, t, p in zip(
                    self.regressor_names, self.coefficients, self.std_errors, self.t_stats, self.p_values
                )
            ],
        }


@dataclass(frozen=True)
class ForecastMetrics:
    rmse: float
    mae: float
    n: int

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "mae": self.mae, "n": self.n}


def fit_ols(x, y, names: Sequence[str] | None = None) -> RegressionFit:
    """Regress ``y`` on the columns of ``x``; no intercept is added."""
    x = as_matrix(x)
    y = np.asarray(y, dtype=float)
    n, q = x.shape
    if y.shape != (n,):
        raise ShapeError(f"y has shape {y.shape}, expected ({n},)")
    if n <= q:
        raise InsufficientDataError(f"OLS needs n > q ({n} <= {q})")
    names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(q))
    if len(names) != q:
        raise AlignmentError(f"{len(names)} names for {q} regressors")

    gram = x.T @ x
    gram = (gram + gram.T) / 2.0
    try:
        lo = cholesky(gram)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            exc.pivot, f"XᵀX is rank deficient at regressor {names[exc.pivot]!r}"
        ) from exc
    beta = tri_solve(lo, tri_solve(lo, x.T @ y), transposed=True)
    resid = y - x @ beta
    df = n - q
    sigma2 = float(resid @ resid) / df
    # diag((XᵀX)^-1) = column norms of L^-1
    l_inv = tri_solve(lo, np.eye(q))
    se = np.sqrt(sigma2 * np.sum(l_inv * l_inv, axis=0))

    t = np.empty(q)
    p = np.empty(q)
    for i in range(q):
        if se[i] > 0:
            t[i] = beta[i] / se[i]
            p[i] = t_two_sided(t[i], df)
        elif beta[i] != 0:
            t[i] = math.copysign(math.inf, beta[i])
            p[i] = 0.0
        else:
            t[i] = 0.0
            p[i] = 1.0
    return RegressionFit(beta, se, t, p, sigma2, names, n)


def predict(fit: RegressionFit, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape[1] != len(fit.coefficients):
        raise AlignmentError(f"{x.shape[1]} columns, fit has {len(fit.coefficients)} regressors")
    return x @ fit.coefficients


def forecast_metrics(y, y_hat) -> ForecastMetrics:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise ShapeError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    n = y.size
    if n == 0:
        raise InsufficientDataError("no observations to score")
    err = y - y_hat
    return ForecastMetrics(
        rmse=math.sqrt(float(err @ err) / n),
        mae=float(np.sum(np.abs(err))) / n,
        n=n,
    )
