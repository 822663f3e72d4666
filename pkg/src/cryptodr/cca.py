"""Canonical correlation analysis between a response block Y and an explanatory block X.

The fit whitens both blocks with their Cholesky factors and takes the
spectrum of the whitened cross-covariance, so the whole computation reduces
to the symmetric eigenproblem in :mod:`cryptodr.linalg`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, NotPositiveDefiniteError, OrientationError, ShapeError
from .features import FeatureMatrix
from .linalg import cholesky, cross_correlation, f_sf, sym_eigen, tri_solve

_ZERO_CORR = 1e-12


@dataclass(frozen=True)
class CcaModel:
    correlations: np.ndarray  # descending, in [0, 1]
    alpha: np.ndarray  # p x p, Y-side coefficient columns
    beta: np.ndarray  # q x p, X-side coefficient columns
    y_names: tuple[str, ...]
    x_names: tuple[str, ...]
    n: int
    y_mean: np.ndarray
    x_mean: np.ndarray

    @property
    def p(self) -> int:
        return len(self.y_names)

    @property
    def q(self) -> int:
        return len(self.x_names)

    def y_variates(self, y: FeatureMatrix) -> np.ndarray:
        _check_names(y, self.y_names)
        return (y.values - self.y_mean) @ self.alpha

    def x_variates(self, x: FeatureMatrix) -> np.ndarray:
        _check_names(x, self.x_names)
        return (x.values - self.x_mean) @ self.beta

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "y_names": list(self.y_names),
            "x_names": list(self.x_names),
            "correlations": self.correlations.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }


@dataclass(frozen=True)
class WilksStep:
    k: int
    correlation: float
    wilks_lambda: float
    df1: float
    df2: float
    f_value: float
    p_value: float


def _check_names(m: FeatureMatrix, names: tuple[str, ...]) -> None:
    if tuple(m.names) != names:
        raise AlignmentError(f"columns {m.names} do not match fitted names {names}")


def _complete_basis(vectors: list[np.ndarray], dim: int) -> np.ndarray:
    """Extend orthonormal ``vectors`` by Gram-Schmidt on the standard basis."""
    basis = list(vectors)
    for e in np.eye(dim):
        if len(basis) == dim:
            break
        w = e - sum(float(b @ e) * b for b in basis) if basis else e.copy()
        norm = math.sqrt(float(w @ w))
        if norm > 1e-8:
            basis.append(w / norm)
    return np.column_stack(basis)


def fit_cca(y: FeatureMatrix, x: FeatureMatrix) -> CcaModel:
    n, p = y.values.shape
    if x.n_rows != n or x.dates != y.dates:
        raise AlignmentError("Y and X blocks must share the same rows")
    q = x.n_cols
    if p == 0 or q == 0:
        raise NotPositiveDefiniteError(
            0, f"empty block covariance (p={p}, q={q}); pruning may have removed every column of a block"
        )
    if p > q:
        raise OrientationError(f"Y block must be the smaller one (p={p} > q={q}); swap the blocks")
    if n <= q:
        raise ShapeError(f"CCA needs n > q ({n} <= {q})")

    y_mean = y.values.mean(axis=0)
    x_mean = x.values.mean(axis=0)
    yc = y.values - y_mean
    xc = x.values - x_mean
    s_yy = yc.T @ yc / (n - 1)
    s_xx = xc.T @ xc / (n - 1)
    s_yx = yc.T @ xc / (n - 1)

    try:
        l_y = cholesky((s_yy + s_yy.T) / 2)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            exc.pivot, f"Y-block covariance is singular at column {y.names[exc.pivot]!r}; prune collinear features"
        ) from exc
    try:
        l_x = cholesky((s_xx + s_xx.T) / 2)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            exc.pivot, f"X-block covariance is singular at column {x.names[exc.pivot]!r}; prune collinear features"
        ) from exc

    # whitened cross-covariance M = L_Y^-1 S_YX L_X^-T
    m = tri_solve(l_x, tri_solve(l_y, s_yx).T).T
    eig = sym_eigen((m @ m.T + (m @ m.T).T) / 2)
    u = eig.eigenvectors
    mt_u = m.T @ u
    rho = np.sqrt(np.sum(mt_u * mt_u, axis=0))

    # re-sort on the directly computed singular values
    order = np.argsort(-rho, kind="stable")
    rho, u, mt_u = rho[order], u[:, order], mt_u[:, order]

    right = [mt_u[:, i] / rho[i] for i in range(p) if rho[i] > _ZERO_CORR]
    v = _complete_basis(right, q)[:, :p]

    alpha = tri_solve(l_y, u, transposed=True)
    beta = tri_solve(l_x, v, transposed=True)
    return CcaModel(
        correlations=np.minimum(rho, 1.0),
        alpha=alpha,
        beta=beta,
        y_names=tuple(y.names),
        x_names=tuple(x.names),
        n=n,
        y_mean=y_mean,
        x_mean=x_mean,
    )


def rao_f(wilks_lambda: float, p_k: int, q_k: int, n: int) -> tuple[float, float, float]:
    """Rao's F approximation for Wilks' lambda; returns ``(F, df1, df2)``."""
    df1 = float(p_k * q_k)
    denom = p_k**2 + q_k**2 - 5
    s = math.sqrt((p_k**2 * q_k**2 - 4) / denom) if denom > 0 else 1.0
    m0 = n - 1 - (p_k + q_k + 1) / 2.0
    df2 = m0 * s - df1 / 2.0 + 1.0
    if wilks_lambda <= 0.0:
        return math.inf, df1, df2
    root = wilks_lambda ** (1.0 / s)
    return (1.0 - root) / root * (df2 / df1), df1, df2


def wilks_sequence(correlations, n: int, q: int) -> list[WilksStep]:
    """Sequential Wilks' lambda tests of H0: canonical correlations k..p are all zero.

    ``correlations`` are the p canonical correlations in descending order,
    ``n`` the sample size and ``q`` the width of the larger block.
    """
    rho = np.asarray(correlations, dtype=float)
    p = len(rho)
    if n <= p + q + 1:
        raise ShapeError(f"Wilks tests need n > p + q + 1 ({n} <= {p + q + 1})")
    steps = []
    for k in range(1, p + 1):
        lam = float(np.prod(1.0 - rho[k - 1:] ** 2))
        f_value, df1, df2 = rao_f(lam, p - k + 1, q - k + 1, n)
        p_value = 0.0 if math.isinf(f_value) else f_sf(max(f_value, 0.0), df1, df2)
        steps.append(WilksStep(k, float(rho[k - 1]), lam, df1, df2, f_value, p_value))
    return steps


def wilks_tests(model: CcaModel) -> list[WilksStep]:
    return wilks_sequence(model.correlations, model.n, model.q)


@dataclass(frozen=True)
class VariateLoadings:
    x_own: np.ndarray  # X features vs X variates
    y_own: np.ndarray  # Y features vs Y variates
    y_cross: np.ndarray  # Y features vs X variates
    x_cross: np.ndarray  # X features vs Y variates


def variate_loadings(model: CcaModel, y: FeatureMatrix, x: FeatureMatrix) -> VariateLoadings:
    vy = model.y_variates(y)
    vx = model.x_variates(x)
    return VariateLoadings(
        x_own=cross_correlation(x.values, vx),
        y_own=cross_correlation(y.values, vy),
        y_cross=cross_correlation(y.values, vx),
        x_cross=cross_correlation(x.values, vy),
    )
