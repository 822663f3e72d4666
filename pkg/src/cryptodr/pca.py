"""Principal component analysis over a standardized feature block."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, InsufficientDataError, UndefinedEntryError
from .features import FeatureMatrix
from .linalg import covariance, cross_correlation, sym_eigen

CLAMP_TOL = 1e-10
_RATIO_SLACK = 1e-12


@dataclass(frozen=True)
class PcaModel:
    eigenvalues: np.ndarray
    components: np.ndarray  # columns are eigenvectors, same order as eigenvalues
    explained_ratio: np.ndarray
    cumulative_ratio: np.ndarray
    feature_names: tuple[str, ...]

    @classmethod
    def from_spectrum(cls, eigenvalues, components, feature_names) -> PcaModel:
        lam = np.asarray(eigenvalues, dtype=float).copy()
        # roundoff can leave tiny negatives on a PSD spectrum
        lam[(lam < 0) & (lam >= -CLAMP_TOL * max(1.0, float(np.max(np.abs(lam)))))] = 0.0
        total = lam.sum()
        ratio = lam / total if total > 0 else np.full(len(lam), 1.0 / len(lam))
        return cls(lam, np.asarray(components, dtype=float), ratio, np.cumsum(ratio), tuple(feature_names))

    @property
    def n_components(self) -> int:
        return len(self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_ratio": self.explained_ratio.tolist(),
            "cumulative_ratio": self.cumulative_ratio.tolist(),
            "components": self.components.tolist(),
        }


def fit_pca(x: FeatureMatrix) -> PcaModel:
    n, q = x.values.shape
    if n <= q:
        raise InsufficientDataError(f"PCA needs more rows than columns ({n} <= {q})")
    eig = sym_eigen(covariance(x.values))
    return PcaModel.from_spectrum(eig.eigenvalues, eig.eigenvectors, x.names)


def select_components(model: PcaModel, threshold: float) -> int:
    """Smallest k whose cumulative explained ratio reaches ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    reached = np.flatnonzero(model.cumulative_ratio >= threshold - _RATIO_SLACK)
    return int(reached[0]) + 1 if len(reached) else model.n_components


def project(x: FeatureMatrix, model: PcaModel, k: int) -> np.ndarray:
    if tuple(x.names) != model.feature_names:
        raise AlignmentError(f"columns {x.names} do not match the fitted features {model.feature_names}")
    if not 1 <= k <= model.n_components:
        raise ValueError(f"k must lie in [1, {model.n_components}], got {k}")
    return x.values @ model.components[:, :k]


def pc_loadings(x: FeatureMatrix, scores) -> np.ndarray:
    """Pearson correlation of each feature (rows) with each component score (columns)."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[:, None]
    if scores.shape[0] != x.n_rows:
        raise AlignmentError(f"{scores.shape[0]} score rows vs {x.n_rows} feature rows")
    r = cross_correlation(x.values, scores)
    if np.any(np.isnan(r)):
        raise UndefinedEntryError("a feature or component has zero variance")
    return r
