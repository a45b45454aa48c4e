"""Exact Gaussian-process regression with an RBF kernel (Cholesky solve)."""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist, pdist

log = logging.getLogger(__name__)


class FactorizationError(RuntimeError):
    pass


def median_heuristic(X) -> float:
    """Median pairwise Euclidean distance, or 1.0 when it is zero or undefined."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(X)))
    return med if med > 0 else 1.0


def rbf(A, B, lengthscale: float, variance: float) -> np.ndarray:
    return variance * np.exp(-0.5 * cdist(A, B, "sqeuclidean") / lengthscale ** 2)


def cholesky_with_jitter(K, jitter: float, max_jitter: float):
    """Lower Cholesky factor of ``K + j I``, growing ``j`` tenfold until it succeeds.

    Returns ``(factor, jitter_used)``.
    """
    n = K.shape[0]
    j = jitter
    while True:
        try:
            L = linalg.cholesky(K + j * np.eye(n), lower=True, check_finite=False)
            return L, j
        except linalg.LinAlgError:
            pass
        if j >= max_jitter:
            raise FactorizationError(f"kernel matrix not positive definite even with jitter {j:g}")
        j = max(j * 10.0, 1e-12)


class GaussianProcessRegressor:
    """Zero-mean GP on centred targets.

    Unset hyperparameters follow simple data-driven defaults: length-scale from
    the median heuristic, signal variance from the target variance, noise
    variance as ``noise_ratio`` times the signal variance. With
    ``optimize=True`` the three are refined by maximizing the log marginal
    likelihood from those starting values.
    """

    def __init__(self, lengthscale: float | None = None, signal_variance: float | None = None,
                 noise_variance: float | None = None, noise_ratio: float = 0.1,
                 jitter: float = 1e-8, max_jitter: float = 1e-2, optimize: bool = False):
        self.lengthscale = lengthscale
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance
        self.noise_ratio = noise_ratio
        self.jitter = jitter
        self.max_jitter = max_jitter
        self.optimize = optimize

    def fit(self, X, y) -> "GaussianProcessRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if X.shape[0] == 0:
            raise ValueError("no training rows")
        self.X_ = X
        self.y_mean_ = float(y.mean())
        r = y - self.y_mean_
        var = float(r.var())
        ell = self.lengthscale if self.lengthscale is not None else median_heuristic(X)
        sig = self.signal_variance if self.signal_variance is not None else (var if var > 0 else 1.0)
        noise = self.noise_variance if self.noise_variance is not None else self.noise_ratio * sig
        if self.optimize and X.shape[0] >= 3 and var > 0:
            ell, sig, noise = self._optimize(X, r, ell, sig, max(noise, 1e-6 * sig))
        self.lengthscale_, self.signal_variance_, self.noise_variance_ = ell, sig, noise
        K = rbf(X, X, ell, sig)
        K[np.diag_indices_from(K)] += noise
        scale = max(sig, 1e-300)
        L, used = cholesky_with_jitter(K, self.jitter * scale, self.max_jitter * scale)
        self.jitter_ = used
        self.L_ = L
        self.alpha_ = linalg.cho_solve((L, True), r, check_finite=False)
        return self

    def _nlml(self, log_params, X, r):
        ell, sig, noise = np.exp(log_params)
        K = rbf(X, X, ell, sig)
        K[np.diag_indices_from(K)] += noise + self.jitter * sig
        try:
            L = linalg.cholesky(K, lower=True, check_finite=False)
        except linalg.LinAlgError:
            return 1e25
        alpha = linalg.cho_solve((L, True), r, check_finite=False)
        return 0.5 * r @ alpha + np.log(np.diag(L)).sum() + 0.5 * len(r) * np.log(2 * np.pi)

    def _optimize(self, X, r, ell, sig, noise):
        x0 = np.log([ell, sig, noise])
        res = optimize.minimize(self._nlml, x0, args=(X, r), method="L-BFGS-B",
                                bounds=[(x0[0] - 5, x0[0] + 5), (x0[1] - 5, x0[1] + 5),
                                        (np.log(sig) - 15, x0[1] + 2)])
        if not res.success:
            log.debug("GP marginal-likelihood search did not converge: %s", res.message)
        return tuple(float(v) for v in np.exp(res.x))

    def predict(self, X, return_std: bool = False):
        X = np.asarray(X, dtype=np.float64)
        Ks = rbf(X, self.X_, self.lengthscale_, self.signal_variance_)
        mean = Ks @ self.alpha_ + self.y_mean_
        if not return_std:
            return mean
        v = linalg.solve_triangular(self.L_, Ks.T, lower=True, check_finite=False)
        var = np.maximum(self.signal_variance_ - np.einsum("ij,ij->j", v, v), 0.0)
        return mean, np.sqrt(var)

    def log_marginal_likelihood(self) -> float:
        r = self.L_ @ (self.L_.T @ self.alpha_)
        return -float(self._nlml(np.log([self.lengthscale_, self.signal_variance_,
                                         max(self.noise_variance_, 1e-300)]), self.X_, r))
