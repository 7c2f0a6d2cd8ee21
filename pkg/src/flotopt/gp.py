"""Exact Gaussian-process regression with a squared-exponential kernel.

Shared by ground-truth synthesis (prior draws) and belief updating (posterior
conditioning). Hyperparameters are fixed by the caller; there is no
marginal-likelihood optimization. Episodes contribute at most a few hundred
points per GP, so exact O(n^3) inference is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JITTER_SCALE = 1e-8  # relative diagonal jitter for Gram factorizations


class GPConditioningError(Exception):
    """Gram matrix factorization failed (e.g. duplicate inputs, zero noise)."""


@dataclass(frozen=True)
class GPHyperparams:
    """Fixed hyperparameters of a squared-exponential GP.

    Attributes:
        variance: signal variance, squared output units.
        length_scales: one positive length per input dimension.
        noise_variance: observation noise variance, squared output units.
        mean: constant prior mean, output units.
    """

    variance: float
    length_scales: tuple[float, ...]
    noise_variance: float = 0.0
    mean: float = 0.0

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise ValueError(f"signal variance must be >= 0, got {self.variance}")
        if self.noise_variance < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.noise_variance}")
        object.__setattr__(self, "length_scales", tuple(float(l) for l in self.length_scales))
        if not self.length_scales or any(l <= 0 for l in self.length_scales):
            raise ValueError(f"length scales must be positive, got {self.length_scales}")

    @property
    def input_dim(self) -> int:
        return len(self.length_scales)


def _as_points(x, dim: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if dim == 1 and pts.ndim <= 1:
        pts = pts.reshape(-1, 1)
    else:
        pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ValueError(f"expected {dim}-dimensional inputs, got shape {pts.shape}")
    return pts


def se_kernel(hyper: GPHyperparams, x1, x2) -> float:
    """Squared-exponential covariance of a single pair of input points."""
    a = np.asarray(x1, dtype=float).ravel()
    b = np.asarray(x2, dtype=float).ravel()
    if a.shape != b.shape or a.shape[0] != hyper.input_dim:
        raise ValueError(
            f"kernel inputs must both have dimension {hyper.input_dim}, "
            f"got {a.shape} and {b.shape}")
    z = (a - b) / np.asarray(hyper.length_scales)
    return float(hyper.variance * np.exp(-0.5 * np.dot(z, z)))


def se_kernel_matrix(hyper: GPHyperparams, X1, X2) -> np.ndarray:
    """Cross-covariance matrix between two sets of points, shape (n1, n2)."""
    A = _as_points(X1, hyper.input_dim) / np.asarray(hyper.length_scales)
    B = _as_points(X2, hyper.input_dim) / np.asarray(hyper.length_scales)
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    return hyper.variance * np.exp(-0.5 * np.maximum(sq, 0.0))


def _robust_cholesky(M: np.ndarray, jitter: float) -> np.ndarray:
    """Lower Cholesky factor of a PSD matrix, eigh fallback with clipping."""
    n = M.shape[0]
    try:
        return np.linalg.cholesky(M + jitter * np.eye(n))
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        return V * np.sqrt(np.clip(w, 0.0, None))


def sample_mvn(mean: np.ndarray, cov: np.ndarray, rng: np.random.Generator,
               jitter: float = 0.0, size: int | None = None) -> np.ndarray:
    """Draw from N(mean, cov); deterministic given the generator state.

    A zero covariance returns the mean exactly. `size` draws are returned as
    rows when given.
    """
    n = mean.shape[0]
    factor = _robust_cholesky(cov, jitter)
    z = rng.standard_normal((size or 1, n))
    draws = mean[None, :] + z @ factor.T
    return draws if size is not None else draws[0]


def se_axis_factors(length_scales, axes) -> list[np.ndarray]:
    """Cholesky factors of the per-axis SE correlation matrices of a lattice."""
    if len(axes) != len(length_scales):
        raise ValueError("one length scale per lattice axis is required")
    factors = []
    for a, ell in zip(axes, length_scales):
        a = np.asarray(a, dtype=float)
        corr = np.exp(-0.5 * ((a[:, None] - a[None, :]) / ell) ** 2)
        factors.append(_robust_cholesky(corr, JITTER_SCALE))
    return factors


def sample_se_lattice(variance: float, length_scales, axes, rng: np.random.Generator,
                      mean: float = 0.0, size: int | None = None,
                      factors: list[np.ndarray] | None = None) -> np.ndarray:
    """Joint SE-GP prior draw on a tensor-product lattice.

    The separable kernel factorizes the Gram matrix into a Kronecker product
    of one small correlation matrix per axis, so the joint draw costs
    O(sum n_d^3) instead of O((prod n_d)^3). Returns an array shaped like the
    lattice (prepended by `size` when given). Precomputed `factors` from
    `se_axis_factors` skip the per-call factorizations.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    if factors is None:
        factors = se_axis_factors(length_scales, axes)
    shape = tuple(len(a) for a in axes)
    z = rng.standard_normal((size or 1, *shape))
    for d, L in enumerate(factors):
        z = np.moveaxis(np.tensordot(L, z, axes=(1, d + 1)), 0, d + 1)
    out = mean + np.sqrt(variance) * z
    return out if size is not None else out[0]


class GPPosterior:
    """Exact GP posterior; immutable after construction.

    Prediction and sampling are read-only and safe to call concurrently.
    Refitting with more data produces a new posterior via `fit_gp`.
    """

    def __init__(self, hyper: GPHyperparams, X=None, y=None):
        self.hyper = hyper
        if X is None or len(X) == 0:
            self.X = np.empty((0, hyper.input_dim))
            self.y = np.empty(0)
            self._chol = None
            self._alpha = np.empty(0)
            return
        self.X = _as_points(X, hyper.input_dim).copy()
        self.y = np.asarray(y, dtype=float).ravel().copy()
        if self.y.shape[0] != self.X.shape[0]:
            raise ValueError(
                f"{self.X.shape[0]} inputs but {self.y.shape[0]} targets")
        if hyper.noise_variance == 0.0 and \
                len(np.unique(self.X, axis=0)) < len(self.X):
            raise GPConditioningError("duplicate inputs with zero observation noise")
        gram = se_kernel_matrix(hyper, self.X, self.X)
        gram[np.diag_indices_from(gram)] += \
            hyper.noise_variance + JITTER_SCALE * hyper.variance
        try:
            self._chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as exc:
            raise GPConditioningError(f"Gram factorization failed: {exc}") from exc
        self._alpha = self._solve(self.y - hyper.mean)

    @property
    def n_points(self) -> int:
        return self.X.shape[0]

    def _solve(self, b: np.ndarray) -> np.ndarray:
        z = np.linalg.solve(self._chol, b)
        return np.linalg.solve(self._chol.T, z)

    def gram_solve(self, b: np.ndarray) -> np.ndarray:
        """Apply (K + noise*I)^-1 to vectors/columns, via the cached factor."""
        if self.n_points == 0:
            raise ValueError("gram_solve requires a fitted posterior")
        return self._solve(np.asarray(b, dtype=float))

    def predict(self, x):
        """Posterior mean and (latent, noise-free) variance at query points.

        A single point (1-D input) yields scalar floats; an (m, d) array
        yields two length-m arrays.
        """
        arr = np.asarray(x, dtype=float)
        single = (arr.ndim == 0 and self.hyper.input_dim == 1) or \
            (arr.ndim == 1 and arr.shape[0] == self.hyper.input_dim > 1)
        Xq = _as_points(arr, self.hyper.input_dim)
        if self.n_points == 0:
            mean = np.full(Xq.shape[0], self.hyper.mean)
            var = np.full(Xq.shape[0], self.hyper.variance)
        else:
            Kq = se_kernel_matrix(self.hyper, Xq, self.X)
            mean = self.hyper.mean + Kq @ self._alpha
            v = np.linalg.solve(self._chol, Kq.T)
            var = np.maximum(self.hyper.variance - np.sum(v * v, axis=0), 0.0)
        if single:
            return float(mean[0]), float(var[0])
        return mean, var

    def predict_full(self, X):
        """Posterior mean vector and full covariance over query points."""
        Xq = _as_points(X, self.hyper.input_dim)
        prior_cov = se_kernel_matrix(self.hyper, Xq, Xq)
        if self.n_points == 0:
            return np.full(Xq.shape[0], self.hyper.mean), prior_cov
        Kq = se_kernel_matrix(self.hyper, Xq, self.X)
        mean = self.hyper.mean + Kq @ self._alpha
        v = np.linalg.solve(self._chol, Kq.T)
        return mean, prior_cov - v.T @ v

    def sample(self, X, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Joint posterior draw over the query points; deterministic per seed."""
        Xq = _as_points(X, self.hyper.input_dim)
        if Xq.shape[0] == 0:
            raise ValueError("sampling grid must be non-empty")
        mean, cov = self.predict_full(Xq)
        return sample_mvn(mean, cov, rng, JITTER_SCALE * self.hyper.variance, size)


def fit_gp(hyper: GPHyperparams, X=None, y=None) -> GPPosterior:
    """Condition a GP prior on observations; zero points recovers the prior."""
    return GPPosterior(hyper, X, y)
