"""Subspace estimation from optimal-transport displacement directions.

For every ordered pair of response classes the mass-weighted displacement
rows ``diag(a_i) X_(i) - G_ij X_(j)`` are stacked into one matrix; its
leading right singular vectors span the estimated sufficient dimension
reduction subspace. Fits run in whitened coordinates by default and the
basis is mapped back to the original predictor scale.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError, InvalidInputError
from .ot import DiscreteMeasure, SolverConfig, solve_coupling

ORTHONORMAL_TOL = 1e-10
RANK_REL_TOL = 1e-10

# ratio of stacked rows to columns above which the SVD is taken through the
# p-by-p Gram matrix instead of the full row matrix
GRAM_PATH_ROW_FACTOR = 4


def apply_sign_convention(vectors):
    """Flip column signs so each column's largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=np.float64)
    for j in range(vectors.shape[1]):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return vectors


def orthonormalize(vectors):
    """Orthonormal basis of the column span, preserving column order."""
    q, r = np.linalg.qr(np.asarray(vectors, dtype=np.float64))
    # keep each column pointing along the original direction
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis of an estimated subspace, in predictor coordinates.

    ``singular_values`` is the full (nonincreasing) spectrum of the fit the
    basis was extracted from, not just the kept leading part.
    """

    vectors: np.ndarray
    singular_values: np.ndarray
    whitening_applied: bool = False

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim == 1:
            vecs = vecs[:, None]
        vecs = apply_sign_convention(vecs)
        gram = vecs.T @ vecs
        if not np.allclose(gram, np.eye(vecs.shape[1]), atol=ORTHONORMAL_TOL):
            raise InvalidInputError("basis columns must be orthonormal")
        sv = np.asarray(self.singular_values, dtype=np.float64).ravel()
        if np.any(np.diff(sv) > 1e-8):
            raise InvalidInputError("singular values must be nonincreasing")
        object.__setattr__(self, "vectors", vecs)
        object.__setattr__(self, "singular_values", sv)

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def ambient_dim(self):
        return self.vectors.shape[0]

    def truncated(self, r):
        """Basis of the leading ``r`` columns."""
        if not 1 <= r <= self.dim:
            raise InvalidInputError(f"r must be in [1, {self.dim}], got {r}")
        return Basis(self.vectors[:, :r], self.singular_values, self.whitening_applied)


@dataclass(frozen=True)
class LabeledDataset:
    """Predictor matrix with a response vector (categorical or real).

    ``class_weights`` optionally maps a label to per-point masses for that
    class, in row order; they are L1-normalized before use.
    """

    X: np.ndarray
    y: np.ndarray
    class_weights: dict | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise InvalidInputError("X must be a matrix with at least 2 rows")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("X contains non-finite entries")
        y = np.asarray(self.y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise InvalidInputError("y must be a vector with one entry per row of X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def classes(self):
        return np.unique(self.y)

    def class_counts(self):
        labels, counts = np.unique(self.y, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))

    def weights_for(self, label, size):
        if self.class_weights is not None and label in self.class_weights:
            w = np.asarray(self.class_weights[label], dtype=np.float64).ravel()
            if w.shape[0] != size:
                raise InvalidInputError(
                    f"class_weights for label {label!r} has length {w.shape[0]}, "
                    f"expected {size}"
                )
            if np.any(w < 0) or w.sum() <= 0:
                raise InvalidInputError(
                    f"class_weights for label {label!r} must be nonnegative "
                    "with positive sum"
                )
            return w / w.sum()
        return np.full(size, 1.0 / size)


@dataclass(frozen=True)
class DisplacementMatrix:
    """Mass-weighted displacement rows for one ordered class pair."""

    rows: np.ndarray
    source_class: object = None
    target_class: object = None


@dataclass(frozen=True)
class SecondOrderDisplacement:
    """Expected outer product of displacement vectors with its spectrum."""

    sigma: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def basis(self, r):
        """Leading ``r`` eigenvectors as a Basis."""
        p = self.sigma.shape[0]
        if not 1 <= r <= p:
            raise InvalidInputError(f"r must be in [1, {p}], got {r}")
        return Basis(self.eigenvectors[:, :r], self.eigenvalues)


def whiten(X):
    """Center and whiten: returns ``(Z, W)`` with ``Z^T Z / n = I``.

    ``W`` is the inverse symmetric square root of the sample covariance;
    a basis ``B`` fitted on ``Z`` maps back to predictor coordinates as
    ``orthonormalize(W @ B)``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("X must be a matrix")
    n, p = X.shape
    if n <= p:
        raise InvalidInputError(f"whitening requires n > p (got n={n}, p={p})")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / n
    evals, evecs = np.linalg.eigh(cov)
    bad = evals <= RANK_REL_TOL * max(evals.max(), 0.0)
    if np.any(bad):
        null_dirs = [int(np.argmax(np.abs(evecs[:, j]))) for j in np.nonzero(bad)[0]]
        raise DegenerateInputError(
            "covariance is rank deficient; null directions are dominated by "
            f"predictor columns {sorted(set(null_dirs))}"
        )
    W = (evecs * evals**-0.5) @ evecs.T
    return Xc @ W, W


def displacement_matrix(source, target, coupling, source_class=None, target_class=None):
    """Weighted displacements ``diag(a_i) X_(i) - G_ij X_(j)``.

    The column sums equal the difference of the two weighted class means.
    """
    if coupling.plan.shape != (source.size, target.size):
        raise InvalidInputError(
            f"coupling shape {coupling.plan.shape} does not match measures "
            f"({source.size}, {target.size})"
        )
    if source.dim != target.dim:
        raise InvalidInputError("source and target point dimensions differ")
    rows = source.weights[:, None] * source.points - coupling.plan @ target.points
    return DisplacementMatrix(rows, source_class, target_class)


def _class_measures(Z, y, data):
    labels = np.unique(y)
    measures = {}
    for label in labels:
        pts = Z[y == label]
        measures[label] = DiscreteMeasure(pts, data.weights_for(label, pts.shape[0]))
    return labels, measures


def _stacked_displacements(Z, y, data, solver):
    """Displacement blocks for every ordered class pair, in label order.

    The coupling for (j, i) is the transpose of the one for (i, j) — the
    cost matrix transposes — so each unordered pair is solved once.
    """
    labels, measures = _class_measures(Z, y, data)
    plans = {}
    blocks = []
    for ci in labels:
        for cj in labels:
            if ci == cj:
                continue
            if (ci, cj) not in plans:
                coupling = solve_coupling(measures[ci], measures[cj], config=solver)
                plans[(ci, cj)] = coupling
                plans[(cj, ci)] = transpose_coupling(coupling)
            blocks.append(
                displacement_matrix(measures[ci], measures[cj], plans[(ci, cj)], ci, cj)
            )
    return blocks


def transpose_coupling(coupling):
    """The coupling of the reversed instance (cost matrix transposed)."""
    return replace(
        coupling,
        plan=coupling.plan.T,
        row_marginal=coupling.col_marginal,
        col_marginal=coupling.row_marginal,
    )


def _right_singular_system(stacked):
    """Singular values and right singular vectors of the stacked rows."""
    rows, p = stacked.shape
    if rows > GRAM_PATH_ROW_FACTOR * p:
        gram = stacked.T @ stacked
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        svals = np.sqrt(np.maximum(evals[order], 0.0))
        return svals, evecs[:, order]
    _, svals, vt = np.linalg.svd(stacked, full_matrices=False)
    return svals, vt.T


def _finish_basis(vectors, svals, whitening, W):
    if whitening:
        vectors = orthonormalize(W @ vectors)
    return Basis(vectors, svals, whitening_applied=whitening)


def potd_fit(data, r, solver=None, whiten_flag=True):
    """Fit the transport-displacement subspace of a categorical dataset.

    Every ordered class pair contributes its displacement rows; the top
    ``r`` right singular vectors of the stack form the basis (mapped back
    to original coordinates when ``whiten_flag`` is on).
    """
    labels = data.classes()
    if labels.shape[0] < 2:
        raise InvalidInputError("need at least 2 classes")
    if not 1 <= r <= data.p:
        raise InvalidInputError(f"r must be in [1, p={data.p}], got {r}")
    if solver is None:
        solver = SolverConfig()
    if whiten_flag:
        Z, W = whiten(data.X)
    else:
        Z, W = data.X, None
    blocks = _stacked_displacements(Z, data.y, data, solver)
    stacked = np.vstack([b.rows for b in blocks])
    svals, vecs = _right_singular_system(stacked)
    return _finish_basis(vecs[:, :r], svals, whiten_flag, W)


def potd_fit_continuous(data, r, cuts=None, solver=None, whiten_flag=True):
    """Continuous-response extension: slice at thresholds, pool displacements.

    Each cut ``c`` splits the sample into ``y < c`` and ``y >= c``; the
    displacement rows of all cuts are pooled before the SVD. Default cuts
    are the 1/3 and 2/3 quantiles of ``y``.
    """
    y = np.asarray(data.y, dtype=np.float64)
    if not 1 <= r <= data.p:
        raise InvalidInputError(f"r must be in [1, p={data.p}], got {r}")
    if cuts is None:
        cuts = np.quantile(y, [1 / 3, 2 / 3])
    cuts = np.atleast_1d(np.asarray(cuts, dtype=np.float64))
    if cuts.shape[0] < 1:
        raise InvalidInputError("need at least one cut")
    if solver is None:
        solver = SolverConfig()
    if whiten_flag:
        Z, W = whiten(data.X)
    else:
        Z, W = data.X, None
    blocks = []
    for c in cuts:
        side = np.where(y < c, 0, 1)
        if len(np.unique(side)) < 2:
            raise InvalidInputError(f"cut {c!r} leaves one side of the split empty")
        blocks.extend(_stacked_displacements(Z, side, data, solver))
    stacked = np.vstack([b.rows for b in blocks])
    svals, vecs = _right_singular_system(stacked)
    return _finish_basis(vecs[:, :r], svals, whiten_flag, W)


def estimate_dimension(singular_values, threshold=0.9):
    """Smallest r whose cumulative singular-value ratio reaches threshold."""
    sv = np.asarray(singular_values, dtype=np.float64).ravel()
    if sv.shape[0] < 1:
        raise InvalidInputError("singular_values must be nonempty")
    if not 0 < threshold <= 1:
        raise InvalidInputError(f"threshold must be in (0, 1], got {threshold}")
    if np.any(sv < -1e-12) or np.any(np.diff(sv) > 1e-8):
        raise InvalidInputError("singular values must be nonnegative and nonincreasing")
    sv = np.maximum(sv, 0.0)
    total = sv.sum()
    if total <= 0:
        raise DegenerateInputError("all singular values are zero")
    ratios = np.cumsum(sv) / total
    return int(np.argmax(ratios >= threshold - 1e-12)) + 1


def second_order_displacement(source, target, coupling):
    """Weighted second moment of the per-point displacement vectors.

    Images of the source atoms are the barycentric projections rescaled by
    the atom masses; the result is the symmetric PSD matrix
    ``sum_l a_l (x_l - image_l)(x_l - image_l)^T`` with its spectrum.
    """
    if coupling.plan.shape != (source.size, target.size):
        raise InvalidInputError(
            f"coupling shape {coupling.plan.shape} does not match measures "
            f"({source.size}, {target.size})"
        )
    a = source.weights
    if np.any(a == 0):
        raise DegenerateInputError(
            "source has zero-weight points; their transport images are undefined"
        )
    images = (coupling.plan @ target.points) / a[:, None]
    diffs = source.points - images
    sigma = diffs.T @ (diffs * a[:, None])
    sigma = 0.5 * (sigma + sigma.T)
    evals, evecs = np.linalg.eigh(sigma)
    order = np.argsort(evals)[::-1]
    return SecondOrderDisplacement(
        sigma, evals[order], apply_sign_convention(evecs[:, order])
    )


def project(X, basis):
    """Coordinates of the rows of X in the basis: ``X @ vectors``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != basis.ambient_dim:
        raise InvalidInputError(
            f"X must have {basis.ambient_dim} columns, got shape {X.shape}"
        )
    return X @ basis.vectors
