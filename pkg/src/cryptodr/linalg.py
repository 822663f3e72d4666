"""Dense symmetric linear algebra and the special functions behind p-values.

Matrices are plain 2-D ``numpy.ndarray`` objects of float64. numpy is used
for storage and elementwise arithmetic only; the decompositions and the
incomplete beta function are implemented here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    NotPositiveDefiniteError,
    ShapeError,
    SingularMatrixError,
    SymmetryError,
)

MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=float, copy=True)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class SymEigen:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal


def covariance(x) -> np.ndarray:
    """Return ``XᵀX / (n-1)`` for a matrix whose columns are already centered."""
    x = as_matrix(x)
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError(f"covariance needs at least 2 rows, got {n}")
    s = x.T @ x / (n - 1)
    # exact symmetry; the two triangles can differ in the last bit
    return (s + s.T) / 2.0


def sign_normalize(v: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Ties go to the lowest row index.
    """
    v = np.array(v, dtype=float, copy=True)
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    return v


def sym_eigen(s) -> SymEigen:
    """Eigen-decompose a symmetric matrix with cyclic Jacobi rotations."""
    a = as_matrix(s)
    n, m = a.shape
    if n != m:
        raise ShapeError(f"sym_eigen needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise SymmetryError("matrix is not symmetric within tolerance")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    target = 1e-12 * float(np.linalg.norm(a))  # Frobenius norm, not a decomposition

    off_mask = ~np.eye(n, dtype=bool)

    def off_norm() -> float:
        return math.sqrt(float(np.sum(a[off_mask] ** 2)))

    for sweep in range(MAX_SWEEPS):
        if off_norm() <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                # negligible next to both diagonal entries: zero it outright
                if sweep > 3 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(diff) + g == abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                # A <- Jᵀ A J, J the plane rotation in (p, q)
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        if off_norm() > target:
            raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return SymEigen(eigenvalues=lam[order], eigenvectors=sign_normalize(v[:, order]))


def cholesky(s) -> np.ndarray:
    """Lower-triangular ``L`` with ``L Lᵀ = S``."""
    a = as_matrix(s)
    n, m = a.shape
    if n != m:
        raise ShapeError(f"cholesky needs a square matrix, got {a.shape}")
    lo = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - float(lo[j, :j] @ lo[j, :j])
        if not d > 0.0:
            raise NotPositiveDefiniteError(j)
        lo[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            lo[i, j] = (a[i, j] - float(lo[i, :j] @ lo[j, :j])) / lo[j, j]
    return lo


def tri_solve(lower, b, transposed: bool = False) -> np.ndarray:
    """Solve ``L X = B`` (or ``Lᵀ X = B``) by substitution.

    ``b`` may be a vector or a matrix; the result has the same shape.
    """
    lo = as_matrix(lower)
    n = lo.shape[0]
    if lo.shape != (n, n):
        raise ShapeError(f"triangular factor must be square, got {lo.shape}")
    rhs = np.array(b, dtype=float, copy=True)
    vector = rhs.ndim == 1
    if vector:
        rhs = rhs[:, None]
    if rhs.shape[0] != n:
        raise ShapeError(f"right-hand side has {rhs.shape[0]} rows, expected {n}")
    diag = np.diag(lo)
    if np.any(diag == 0.0):
        raise SingularMatrixError(f"zero on the diagonal at index {int(np.argmin(np.abs(diag)))}")
    x = np.zeros_like(rhs)
    if not transposed:
        for i in range(n):
            x[i] = (rhs[i] - lo[i, :i] @ x[:i]) / lo[i, i]
    else:
        for i in range(n - 1, -1, -1):
            x[i] = (rhs[i] - lo[i + 1:, i] @ x[i + 1:]) / lo[i, i]
    return x[:, 0] if vector else x


def spd_inverse(s) -> np.ndarray:
    lo = cholesky(s)
    return tri_solve(lo, tri_solve(lo, np.eye(lo.shape[0])), transposed=True)


# -- special functions -------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
# Bernoulli terms B_2k / (2k (2k-1)) of the Stirling series
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x: float) -> float:
    """ln Γ(x) for x > 0."""
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma needs a finite x > 0, got {x}")
    if x >= 10.0:
        inv = 1.0 / x
        inv2 = inv * inv
        series = 0.0
        power = inv
        for coef in _STIRLING:
            series += coef * power
            power *= inv2
        return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series
    if x < 0.5:
        # reflection
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    x -= 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(acc)


def _beta_cf(a: float, b: float, x: float, max_iter: int = 20000, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= eps:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"shape parameters must be finite and > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return float(x)
    log_front = (
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    # the fraction converges fast on this side of the mean; use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail Pr(F > f) of the F distribution with (d1, d2) degrees of freedom."""
    if not (d1 > 0.0 and d2 > 0.0):
        raise DomainError(f"degrees of freedom must be > 0, got ({d1}, {d2})")
    if math.isnan(f) or f < 0.0:
        raise DomainError(f"F statistic must be >= 0, got {f}")
    if f == 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return reg_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def t_sf(t: float, df: float) -> float:
    """Upper tail Pr(T > t) of Student's t with ``df`` degrees of freedom."""
    if not df > 0.0:
        raise DomainError(f"degrees of freedom must be > 0, got {df}")
    if math.isnan(t):
        raise DomainError("t statistic is NaN")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0.0 else 1.0 - tail


def t_two_sided(t: float, df: float) -> float:
    """Pr(|T| > |t|), computed without the cancellation of ``2 * t_sf``."""
    if not df > 0.0:
        raise DomainError(f"degrees of freedom must be > 0, got {df}")
    if math.isnan(t):
        raise DomainError("t statistic is NaN")
    if math.isinf(t):
        return 0.0
    return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


# -- correlation -------------------------------------------------------------

def cross_correlation(a, b) -> np.ndarray:
    """Pearson correlation of every column of ``a`` with every column of ``b``.

    Zero-variance columns give NaN entries; callers decide whether that is fatal.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise InsufficientDataError("correlation needs at least 2 rows")
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    na = np.sqrt(np.sum(ac * ac, axis=0))
    nb = np.sqrt(np.sum(bc * bc, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (ac.T @ bc) / np.outer(na, nb)
    r[np.logical_or.outer(na == 0, nb == 0)] = np.nan
    return np.clip(r, -1.0, 1.0)


def correlation_matrix(x) -> np.ndarray:
    r = cross_correlation(x, x)
    r = (r + r.T) / 2.0
    finite = ~np.isnan(np.diag(r))
    idx = np.flatnonzero(finite)
    r[idx, idx] = 1.0
    return r
