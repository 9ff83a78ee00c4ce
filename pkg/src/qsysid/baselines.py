"""Classical estimators: least squares and empirical-Bayes kernel regression.

The kernel-regularized estimator models the response as a zero-mean normal
vector with covariance ``lam * K_beta`` and white measurement noise of
variance ``sigma2``. Hyperparameters are chosen by minimizing the marginal
negative log-likelihood of the observations

    log det(lam * U K U' + sigma2 * I) + w' (lam * U K U' + sigma2 * I)^{-1} w

over a grid, with the noise variance plugged in from the least-squares
residual. The objective has two algebraically identical evaluation routes: a
direct factorization of the N-by-N covariance, and a low-rank route that
only factorizes n-by-n matrices. The direct route is the default below the
size threshold; the low-rank route exists as an independent cross-check and
for long records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConditioningError,
    DomainError,
    EstimationFailureError,
    InsufficientDataError,
)
from .kernel import build_kernel, cached_kernel_factor

# Largest record length for which the objective factorizes the full N-by-N
# covariance by default.
DENSE_SIZE_MAX = 1000

# Default hyperparameter grids: 25 scale points logarithmically spanning
# eight decades around the mean output power, and 30 evenly spaced decay
# values plus 4 extra points pushing toward slow decay.
LAMBDA_DECADES = (1e-4, 1e4)
LAMBDA_POINTS = 25
BETA_GRID = tuple(np.round(np.arange(0.30, 0.889, 0.02), 10)) + (0.90, 0.92, 0.95, 0.98)


@dataclass(frozen=True)
class LsFit:
    g: np.ndarray
    rank_deficient: bool


@dataclass(frozen=True)
class SsmlFit:
    g: np.ndarray
    lam: float
    beta: float
    sigma2: float
    objective: float


def _validate_wU(w: np.ndarray, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or w.ndim != 1 or U.shape[0] != w.shape[0]:
        raise DomainError(
            f"need 1-d output and matching regressor rows, got {w.shape} and {U.shape}"
        )
    if not np.all(np.isfinite(w)) or not np.all(np.isfinite(U)):
        raise DomainError("output and regressor must be finite")
    return w, U


def ls_estimate(w: np.ndarray, U: np.ndarray) -> LsFit:
    """Ordinary least squares of ``w`` on ``U``.

    Uses a minimum-norm solve; rank deficiency is reported, not fatal.
    Needs at least as many rows as columns.
    """
    w, U = _validate_wU(w, U)
    N, n = U.shape
    if N < n:
        raise InsufficientDataError(f"least squares needs N >= n, got N={N}, n={n}")
    g, _, rank, _ = np.linalg.lstsq(U, w, rcond=None)
    return LsFit(g=g, rank_deficient=rank < n)


def empirical_noise_variance(w: np.ndarray, U: np.ndarray) -> float:
    """Degrees-of-freedom-corrected residual variance of the LS fit:
    ``||w - U g_ls||^2 / (N - n)``. Needs N > n."""
    w, U = _validate_wU(w, U)
    N, n = U.shape
    if N <= n:
        raise InsufficientDataError(f"residual variance needs N > n, got N={N}, n={n}")
    fit = ls_estimate(w, U)
    r = w - U @ fit.g
    return float(r @ r) / (N - n)


def default_lambda_grid(w: np.ndarray) -> np.ndarray:
    """Scale grid anchored at the mean output power ``w'w / N``."""
    w = np.asarray(w, dtype=np.float64)
    power = float(w @ w) / len(w)
    if power <= 0.0 or not np.isfinite(power):
        power = 1.0
    return np.geomspace(LAMBDA_DECADES[0] * power, LAMBDA_DECADES[1] * power, LAMBDA_POINTS)


def _validate_hyper(lam: float, beta: float, sigma2: float) -> None:
    if not np.isfinite(lam) or lam <= 0.0:
        raise DomainError(f"scale must be finite and positive, got {lam!r}")
    if not np.isfinite(beta) or not 0.0 < beta < 1.0:
        raise DomainError(f"decay must lie in (0, 1), got {beta!r}")
    if not np.isfinite(sigma2) or sigma2 <= 0.0:
        raise DomainError(f"noise variance must be finite and positive, got {sigma2!r}")


class MarginalObjective:
    """Reusable evaluator of the marginal objective for one (w, U, sigma2).

    Caches per-decay matrices so grid searches pay the kernel setup once per
    decay value rather than once per (scale, decay) pair.
    """

    def __init__(self, w: np.ndarray, U: np.ndarray, sigma2: float,
                 *, dense_size_max: int = DENSE_SIZE_MAX):
        w, U = _validate_wU(w, U)
        if not np.isfinite(sigma2) or sigma2 <= 0.0:
            raise DomainError(f"noise variance must be finite and positive, got {sigma2!r}")
        self.w = w
        self.U = U
        self.sigma2 = float(sigma2)
        self.N, self.n = U.shape
        self.dense = self.N <= dense_size_max
        self._per_beta: dict[float, tuple] = {}

    def _beta_blocks(self, beta: float):
        blocks = self._per_beta.get(beta)
        if blocks is None:
            if self.dense:
                K = build_kernel(beta, self.n).entries
                UKU = self.U @ K @ self.U.T
                blocks = (UKU,)
            else:
                B = self.U @ cached_kernel_factor(beta, self.n)
                blocks = (B.T @ B, B.T @ self.w)
            self._per_beta[beta] = blocks
        return blocks

    def evaluate(self, lam: float, beta: float) -> float:
        _validate_hyper(lam, beta, self.sigma2)
        if self.dense:
            (UKU,) = self._beta_blocks(beta)
            return _objective_dense(self.w, UKU, lam, beta, self.sigma2)
        BtB, Btw = self._beta_blocks(beta)
        return _objective_lowrank(self.w, BtB, Btw, lam, beta, self.sigma2)


def _objective_dense(w: np.ndarray, UKU: np.ndarray, lam: float,
                     beta: float, sigma2: float) -> float:
    N = len(w)
    with np.errstate(over="ignore"):
        cov = lam * UKU + sigma2 * np.eye(N)
    if not np.all(np.isfinite(cov)):
        raise ConditioningError(
            f"marginal covariance overflowed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        )
    try:
        cf = scipy.linalg.cho_factor(cov, lower=True, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise ConditioningError(
            f"marginal covariance factorization failed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        ) from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    quad = float(w @ scipy.linalg.cho_solve(cf, w, check_finite=False))
    return logdet + quad


def _objective_lowrank(w: np.ndarray, BtB: np.ndarray, Btw: np.ndarray,
                       lam: float, beta: float, sigma2: float) -> float:
    # With B = U L_K the covariance is lam*B B' + sigma2*I, and
    #   log det = N log sigma2 + n log lam + log det(M),
    #   quad    = w'w/sigma2 - (B'w)' M^{-1} (B'w) / sigma2^2,
    # where M = I/lam + B'B/sigma2 is n-by-n.
    N = len(w)
    n = BtB.shape[0]
    with np.errstate(over="ignore"):
        M = np.eye(n) / lam + BtB / sigma2
    if not np.all(np.isfinite(M)):
        raise ConditioningError(
            f"low-rank objective overflowed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        )
    try:
        cf = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise ConditioningError(
            f"low-rank objective factorization failed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        ) from exc
    logdet = N * np.log(sigma2) + n * np.log(lam) + 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    quad = float(w @ w) / sigma2 - float(Btw @ scipy.linalg.cho_solve(cf, Btw, check_finite=False)) / sigma2**2
    return logdet + quad


def marginal_likelihood_objective(w: np.ndarray, U: np.ndarray, lam: float,
                                  beta: float, sigma2: float,
                                  *, method: str = "auto") -> float:
    """Negative marginal log-likelihood (up to constants) of ``w``.

    ``method`` selects the evaluation route: ``"dense"`` factorizes the full
    N-by-N covariance, ``"lowrank"`` works in the n-dimensional response
    space, ``"auto"`` picks dense for records up to ``DENSE_SIZE_MAX``.
    The two routes agree to floating-point accuracy.
    """
    if method not in ("auto", "dense", "lowrank"):
        raise DomainError(f"unknown objective method {method!r}")
    w, U = _validate_wU(w, U)
    _validate_hyper(lam, beta, sigma2)
    if method == "auto":
        method = "dense" if len(w) <= DENSE_SIZE_MAX else "lowrank"
    if method == "dense":
        K = build_kernel(beta, U.shape[1]).entries
        return _objective_dense(w, U @ K @ U.T, lam, beta, sigma2)
    B = U @ cached_kernel_factor(float(beta), U.shape[1])
    return _objective_lowrank(w, B.T @ B, B.T @ w, lam, beta, sigma2)


def ssml_estimate(w: np.ndarray, U: np.ndarray,
                  beta_grid=None, lambda_grid=None,
                  sigma2: float | None = None) -> SsmlFit:
    """Kernel-regularized estimate with grid-optimized hyperparameters.

    The noise variance is the least-squares residual variance unless given.
    Grid points whose objective fails to evaluate are skipped; ties prefer
    smaller decay, then smaller scale (grids are searched in sorted order
    with strict improvement). All points failing raises
    :class:`EstimationFailureError`.
    """
    from .conditionals import compute_posterior_gains

    w, U = _validate_wU(w, U)
    if sigma2 is None:
        sigma2 = empirical_noise_variance(w, U)
    if sigma2 == 0.0:
        raise DomainError(
            "residual noise variance is exactly zero; pass an explicit floor"
        )
    betas = np.sort(np.asarray(BETA_GRID if beta_grid is None else beta_grid, dtype=np.float64))
    lams = np.sort(np.asarray(default_lambda_grid(w) if lambda_grid is None else lambda_grid,
                              dtype=np.float64))
    if len(betas) == 0 or len(lams) == 0:
        raise DomainError("hyperparameter grids must be non-empty")
    objective = MarginalObjective(w, U, float(sigma2))
    best = None
    for beta in betas:
        for lam in lams:
            try:
                val = objective.evaluate(float(lam), float(beta))
            except ConditioningError:
                continue
            if not np.isfinite(val):
                continue
            if best is None or val < best[0]:
                best = (val, float(lam), float(beta))
    if best is None:
        raise EstimationFailureError(
            "no hyperparameter grid point produced a finite objective"
        )
    val, lam, beta = best
    gains = compute_posterior_gains(U, lam, beta, float(sigma2))
    return SsmlFit(g=gains.C @ w, lam=lam, beta=beta, sigma2=float(sigma2), objective=val)
