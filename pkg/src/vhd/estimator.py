"""Gaussian beliefs, Kalman predict/update, and KL-divergence diagnostics.

All operations are pure functions over immutable values. Covariances are
kept exactly symmetric by construction (Joseph-form update followed by an
explicit symmetrization), which keeps long prediction chains well behaved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import CaModel


def _validate_gaussian(name: str, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    n = mean.shape[0]
    if mean.ndim != 1:
        raise ValueError(f"{name}: mean must be a vector")
    if cov.shape != (n, n):
        raise ValueError(f"{name}: covariance shape {cov.shape} does not match mean length {n}")
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise ValueError(f"{name}: non-finite entries")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if float(np.max(np.abs(cov - cov.T))) > 1e-9 * scale:
        raise ValueError(f"{name}: covariance is not symmetric")
    return mean, cov


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Gaussian state belief: mean vector plus covariance.

    Dimension is not fixed; the tracking code uses 6-D states but every
    operation below works for any consistent (mean, cov) pair.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean, cov = _validate_gaussian("GaussianBelief", self.mean, self.cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class TargetDistribution:
    """Gaussian summary of where the history says the state should be."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean, cov = _validate_gaussian("TargetDistribution", self.mean, self.cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def predict(b: GaussianBelief, model: CaModel) -> GaussianBelief:
    """Time update: mean' = F mean, cov' = F cov F^T + Q."""
    mean = model.F @ b.mean
    cov = _symmetrize(model.F @ b.cov @ model.F.T + model.Q)
    return GaussianBelief(mean, cov)


def _cholesky_or_raise(S: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"{what} is singular or not positive definite") from exc


def update(b: GaussianBelief, z: np.ndarray, R: np.ndarray, H: np.ndarray) -> GaussianBelief:
    """Measurement update with measurement z ~ N(H s, R).

    Uses the Joseph-form covariance update

        P' = (I - K H) P (I - K H)^T + K R K^T

    followed by symmetrization, so the posterior covariance stays
    symmetric positive semi-definite over long call chains.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the innovation covariance H P H^T + R is not positive definite.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))

    S = _symmetrize(H @ b.cov @ H.T + R)
    _cholesky_or_raise(S, "innovation covariance")
    # K = P H^T S^-1, computed through a solve against the symmetric S.
    K = np.linalg.solve(S, H @ b.cov).T

    innovation = z - H @ b.mean
    mean = b.mean + K @ innovation

    A = np.eye(b.dim) - K @ H
    cov = _symmetrize(A @ b.cov @ A.T + K @ R @ K.T)
    return GaussianBelief(mean, cov)


def open_loop_predict(b: GaussianBelief, model: CaModel, steps: int) -> list[GaussianBelief]:
    """Repeated predict() with no measurement updates.

    This is the dead-reckoning baseline: the belief at the last fix is
    propagated through the motion model alone for `steps` steps.

    Returns the sequence of beliefs after 1..steps predictions.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    out = []
    current = b
    for _ in range(steps):
        current = predict(current, model)
        out.append(current)
    return out


def gaussian_kl(a, b) -> float:
    """KL divergence KL(a || b) between two Gaussians, in nats.

    Accepts any objects with `mean` and `cov` attributes of matching
    dimension. Both covariances must be positive definite.
    """
    mu_a, S_a = np.asarray(a.mean, dtype=float), np.asarray(a.cov, dtype=float)
    mu_b, S_b = np.asarray(b.mean, dtype=float), np.asarray(b.cov, dtype=float)
    k = mu_a.shape[0]

    La = _cholesky_or_raise(S_a, "first covariance")
    Lb = _cholesky_or_raise(S_b, "second covariance")

    # tr(S_b^-1 S_a) = ||Lb^-1 La||_F^2
    X = np.linalg.solve(Lb, La)
    trace_term = float(np.sum(X * X))

    d = mu_b - mu_a
    y = np.linalg.solve(Lb, d)
    maha_term = float(y @ y)

    logdet_term = 2.0 * float(np.sum(np.log(np.diag(Lb))) - np.sum(np.log(np.diag(La))))

    return 0.5 * (trace_term + maha_term - k + logdet_term)


@dataclass(frozen=True, eq=False)
class KlArgminResult:
    """Solution of the virtual-measurement KL minimization.

    Attributes
    ----------
    z : ndarray
        The minimizing measurement value.
    rank : int
        Rank of the gain matrix seen through the target metric.
    min_norm : bool
        True when the gain was rank deficient and z is the minimum-norm
        minimizer rather than the unique one.
    """

    z: np.ndarray
    rank: int
    min_norm: bool


def kl_optimal_virtual_measurement(
    prior: GaussianBelief,
    target: TargetDistribution,
    R: np.ndarray,
    H: np.ndarray,
) -> KlArgminResult:
    """Measurement value whose Kalman update lands closest to the target.

    A single update of `prior` with measurement z produces a posterior
    whose covariance does not depend on z and whose mean is affine in z:
    mean(z) = mu + K (z - H mu). Minimizing KL(posterior(z) || target)
    therefore reduces to the quadratic

        (mu + K w - mu_q)^T  Sigma_q^-1  (mu + K w - mu_q),   w = z - H mu,

    solved here in closed form by least squares on the whitened system.
    When K has full column rank through the target metric the minimizer is
    unique; otherwise the minimum-norm w is returned and flagged.
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    H = np.atleast_2d(np.asarray(H, dtype=float))

    S = _symmetrize(H @ prior.cov @ H.T + R)
    _cholesky_or_raise(S, "innovation covariance")
    K = np.linalg.solve(S, H @ prior.cov).T

    Lq = _cholesky_or_raise(np.asarray(target.cov, dtype=float), "target covariance")
    A = np.linalg.solve(Lq, K)
    d = np.linalg.solve(Lq, np.asarray(target.mean, dtype=float) - prior.mean)

    w, _, rank, _ = np.linalg.lstsq(A, d, rcond=None)
    z = H @ prior.mean + w
    return KlArgminResult(z=z, rank=int(rank), min_norm=bool(rank < w.shape[0]))
