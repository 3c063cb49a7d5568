"""Synthetic benchmark generators and subspace-distance metrics.

All generators draw from numpy's PCG64 generator seeded through
``SeedSequence``, so identical specs produce bit-identical datasets on
any platform.
"""

from dataclasses import dataclass

import numpy as np

from .core import Basis, LabeledDataset
from .errors import InvalidInputError

MODELS = ("I", "II", "III", "IV")

# dimension of the informative subspace (leading coordinate directions)
MODEL_SUBSPACE_DIM = {"I": 2, "II": 2, "III": 4, "IV": 4}
_MODEL_MIN_P = {"I": 2, "II": 2, "III": 4, "IV": 4}


def make_rng(seed, *key):
    if int(seed) < 0:
        raise InvalidInputError("seed must be a nonnegative integer")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic draw."""

    model: str
    n: int
    p: int
    seed: int
    noise_scale: float = 0.2

    def __post_init__(self):
        if self.model not in MODELS + ("cshape", "svm3d"):
            raise InvalidInputError(
                f"unknown model {self.model!r}; valid: {', '.join(MODELS)}, "
                "cshape, svm3d"
            )
        if self.model in MODELS and self.p < _MODEL_MIN_P[self.model]:
            raise InvalidInputError(
                f"model {self.model} requires p >= {_MODEL_MIN_P[self.model]}"
            )
        if self.n < 2:
            raise InvalidInputError("n must be >= 2")
        if self.noise_scale < 0:
            raise InvalidInputError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class TrueSubspace:
    """Orthonormal basis of the informative subspace."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim == 1:
            b = b[:, None]
        if not np.allclose(b.T @ b, np.eye(b.shape[1]), atol=1e-10):
            raise InvalidInputError("true subspace basis must be orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self):
        return self.basis.shape[1]


def _leading_axes(p, r0):
    return TrueSubspace(np.eye(p)[:, :r0])


def model_signal(model, X):
    """Noise-free response surface of a synthetic model, one value per row."""
    X = np.asarray(X, dtype=np.float64)
    x1, x2 = X[:, 0], X[:, 1]
    if model == "I":
        return np.sin(x1) / x2**2
    if model == "II":
        return (x1 + 0.5) * (x2 - 0.5) ** 2
    x3, x4 = X[:, 2], X[:, 3]
    if model == "III":
        return np.log(x1**2) * (x2**2 + x3**2 / 2 + x4**2 / 4)
    if model == "IV":
        return np.sin(x1) / (x2 * x3 * x4)
    raise InvalidInputError(f"unknown model {model!r}")


def _degenerate_rows(model, X):
    # rows where the signal is undefined (division by zero, log of zero);
    # a measure-zero event that is resampled away
    if model == "I":
        return X[:, 1] == 0
    if model == "III":
        return X[:, 0] == 0
    if model == "IV":
        return (X[:, 1] == 0) | (X[:, 2] == 0) | (X[:, 3] == 0)
    return np.zeros(X.shape[0], dtype=bool)


def gen_model(spec):
    """Binary-response draw from one of the synthetic models.

    Predictors are i.i.d. uniform on [-2, 2]; the label is the sign of the
    model signal plus ``noise_scale`` times standard normal noise, with
    sign(0) mapped to +1. Returns the dataset and the true subspace.
    """
    if spec.model not in MODELS:
        raise InvalidInputError(
            f"gen_model handles models {', '.join(MODELS)}; got {spec.model!r}"
        )
    rng = make_rng(spec.seed)
    X = rng.uniform(-2.0, 2.0, (spec.n, spec.p))
    bad = _degenerate_rows(spec.model, X)
    while bad.any():
        X[bad] = rng.uniform(-2.0, 2.0, (int(bad.sum()), spec.p))
        bad = _degenerate_rows(spec.model, X)
    noise = rng.standard_normal(spec.n)
    vals = model_signal(spec.model, X) + spec.noise_scale * noise
    y = np.where(vals >= 0, 1, -1)
    r0 = MODEL_SUBSPACE_DIM[spec.model]
    return LabeledDataset(X, y), _leading_axes(spec.p, r0)


def _cshape_class(rng, n, theta_mean, x1_shift):
    theta = rng.normal(theta_mean, 0.25 * np.pi, n)
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    block = np.empty((n, 10))
    block[:, 0] = 20.0 * np.cos(theta) + z1 + x1_shift
    block[:, 1] = 20.0 * np.sin(theta) + z2
    block[:, 2:] = rng.standard_normal((n, 8))
    return block


def gen_cshape(n_per_class=300, seed=0, standardize="per-class"):
    """Two interlocking C-shaped curves in the first two of ten coordinates.

    One arc is centered at angle pi and shifted right by one unit, the
    other at angle 0; the remaining eight coordinates are standard normal
    noise. ``standardize`` is ``"per-class"`` (each class to zero mean and
    unit variance, the default), ``"pooled"`` or ``"none"``.
    """
    if n_per_class < 10:
        raise InvalidInputError("n_per_class must be >= 10")
    if standardize not in ("per-class", "pooled", "none"):
        raise InvalidInputError(
            "standardize must be 'per-class', 'pooled' or 'none'"
        )
    rng = make_rng(seed)
    first = _cshape_class(rng, n_per_class, np.pi, 1.0)
    second = _cshape_class(rng, n_per_class, 0.0, 0.0)
    if standardize == "per-class":
        first = (first - first.mean(axis=0)) / first.std(axis=0)
        second = (second - second.mean(axis=0)) / second.std(axis=0)
    X = np.vstack([first, second])
    if standardize == "pooled":
        X = (X - X.mean(axis=0)) / X.std(axis=0)
    y = np.repeat([1, 2], n_per_class)
    return LabeledDataset(X, y), _leading_axes(10, 2)


def gen_svm3d(n_per_class=200, seed=0):
    """Two 3-D Gaussian classes: equal means but 4:1 variance along the
    first axis, equal variance but means +-0.5 apart along the second,
    identical along the third. Informative subspace: first two axes."""
    if n_per_class < 2:
        raise InvalidInputError("n_per_class must be >= 2")
    rng = make_rng(seed)
    first = rng.standard_normal((n_per_class, 3)) * [2.0, 1.0, 1.0] + [0.0, 0.5, 0.0]
    second = rng.standard_normal((n_per_class, 3)) + [0.0, -0.5, 0.0]
    X = np.vstack([first, second])
    y = np.repeat([1, 2], n_per_class)
    return LabeledDataset(X, y), _leading_axes(3, 2)


def generate(spec, n_per_class=None, standardize="per-class"):
    """Dispatch a SyntheticSpec to its generator."""
    if spec.model in MODELS:
        return gen_model(spec)
    per_class = n_per_class if n_per_class is not None else max(spec.n // 2, 2)
    if spec.model == "cshape":
        return gen_cshape(per_class, spec.seed, standardize=standardize)
    return gen_svm3d(per_class, spec.seed)


# ---------------------------------------------------------------------------
# subspace metrics


def _basis_matrix(obj, name):
    if isinstance(obj, Basis):
        mat = obj.vectors
    elif isinstance(obj, TrueSubspace):
        mat = obj.basis
    else:
        mat = np.asarray(obj, dtype=np.float64)
        if mat.ndim == 1:
            mat = mat[:, None]
    if mat.ndim != 2:
        raise InvalidInputError(f"{name} must be a p-by-r matrix")
    return mat


def subspace_distance(estimated, truth):
    """Frobenius norm of the true basis's residual off the estimated span.

    Equals 0 when the true subspace is contained in the estimate and
    sqrt(r0) when the two are orthogonal; invariant to rotations of
    either basis within its span.
    """
    b_hat = _basis_matrix(estimated, "estimated")
    b_true = _basis_matrix(truth, "truth")
    if b_hat.shape[0] != b_true.shape[0]:
        raise InvalidInputError(
            f"ambient dimensions differ: {b_hat.shape[0]} vs {b_true.shape[0]}"
        )
    if not np.allclose(b_hat.T @ b_hat, np.eye(b_hat.shape[1]), atol=1e-8):
        raise InvalidInputError("estimated basis must be orthonormal")
    residual = b_true - b_hat @ (b_hat.T @ b_true)
    return float(np.linalg.norm(residual))


def sin_distance(V, V_hat):
    """Frobenius norm of the sines of the principal angles between two
    equal-dimension subspaces; 0 iff the spans coincide."""
    a = _basis_matrix(V, "V")
    b = _basis_matrix(V_hat, "V_hat")
    if a.shape[0] != b.shape[0]:
        raise InvalidInputError(
            f"ambient dimensions differ: {a.shape[0]} vs {b.shape[0]}"
        )
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(
            f"subspace dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    for mat, name in ((a, "V"), (b, "V_hat")):
        if not np.allclose(mat.T @ mat, np.eye(mat.shape[1]), atol=1e-8):
            raise InvalidInputError(f"{name} must be orthonormal")
    r = a.shape[1]
    overlap = float(np.linalg.norm(a.T @ b) ** 2)
    return float(np.sqrt(max(r - overlap, 0.0)))
