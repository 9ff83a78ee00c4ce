"""Full conditional distributions of the Gibbs sampler.

The sampler alternates four exact conditional draws: the latent
pre-quantization outputs given everything else are independent truncated
normals on the intervals their observed levels invert to; the reciprocal of
the prior scale given the response is gamma with shape n/2 and rate equal to
half the kernel quadratic form; the reciprocal noise variance given the
latent residual is gamma with shape N/2 and rate half the squared residual
norm; and the response given the latent outputs is normal with the
regularized posterior mean and covariance.

Posterior gain computation has two algebraically identical routes. The
direct route factorizes the n-by-n information matrix
``U'U / sigma2 + (lam K)^{-1}`` and is used when the record is at least as
long as the response. The low-data route rewrites the covariance as
``lam K - lam K U' (U lam K U' + sigma2 I)^{-1} U lam K`` and only
factorizes N-by-N matrices, which is preferable when N < n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConditioningError,
    DegeneratePriorError,
    DegenerateResidualError,
    DomainError,
)
from .kernel import build_kernel, cached_kernel_factor, kernel_quadratic_form
from .quantizer import IdentityQuantizer, Quantizer, level_intervals
from .samplers import RngHandle, sample_gamma, sample_mvn, truncated_normal_vector


@dataclass(frozen=True)
class PosteriorGains:
    """Gaussian posterior of the response at fixed hyperparameters.

    ``C`` maps a latent output record to the posterior mean, ``P`` is the
    posterior covariance, and ``factor`` is a square root of ``P``
    (``factor @ factor.T == P``) ready for sampling.
    """

    C: np.ndarray
    P: np.ndarray
    factor: np.ndarray


@dataclass
class GibbsState:
    """Mutable sampler state carried between iterations."""

    g: np.ndarray
    lam: float
    sigma2: float
    z: np.ndarray | None = None


def _validate_gains_inputs(U: np.ndarray, lam: float, beta: float, sigma2: float):
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2:
        raise DomainError(f"regressor must be 2-d, got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise DomainError("regressor must be finite")
    if not np.isfinite(lam) or lam <= 0.0:
        raise DomainError(f"scale must be finite and positive, got {lam!r}")
    if not np.isfinite(beta) or not 0.0 < beta < 1.0:
        raise DomainError(f"decay must lie in (0, 1), got {beta!r}")
    if not np.isfinite(sigma2) or sigma2 <= 0.0:
        raise DomainError(f"noise variance must be finite and positive, got {sigma2!r}")
    return U


def _gains_direct(U: np.ndarray, lam: float, beta: float, sigma2: float,
                  UtU: np.ndarray | None = None,
                  Kinv: np.ndarray | None = None) -> PosteriorGains:
    n = U.shape[1]
    if UtU is None:
        UtU = U.T @ U
    if Kinv is None:
        L = cached_kernel_factor(beta, n)
        Kinv = scipy.linalg.cho_solve((np.asarray(L), True), np.eye(n), check_finite=False)
    with np.errstate(over="ignore"):
        A = UtU / sigma2 + Kinv / lam
    if not np.all(np.isfinite(A)):
        raise ConditioningError(
            f"posterior information overflowed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        )
    try:
        La = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"posterior information factorization failed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        ) from exc
    P = scipy.linalg.cho_solve((La, True), np.eye(n), check_finite=False)
    P = 0.5 * (P + P.T)
    # factor F = La^{-T} satisfies F F' = A^{-1} = P
    factor = scipy.linalg.solve_triangular(La, np.eye(n), lower=True, check_finite=False).T
    C = (P @ U.T) / sigma2
    return PosteriorGains(C=C, P=P, factor=factor)


def _gains_lowdata(U: np.ndarray, lam: float, beta: float, sigma2: float) -> PosteriorGains:
    N, n = U.shape
    K = build_kernel(beta, n).entries
    with np.errstate(over="ignore"):
        lamK = lam * K
        UlamK = U @ lamK
        S = UlamK @ U.T + sigma2 * np.eye(N)
    if not np.all(np.isfinite(S)):
        raise ConditioningError(
            f"output covariance overflowed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        )
    try:
        cf = scipy.linalg.cho_factor(S, lower=True, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise ConditioningError(
            f"output covariance factorization failed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        ) from exc
    C = scipy.linalg.cho_solve(cf, UlamK, check_finite=False).T
    P = lamK - C @ UlamK
    P = 0.5 * (P + P.T)
    try:
        factor = np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"posterior covariance factorization failed at lam={lam:.6g}, "
            f"beta={beta:.6g}, sigma2={sigma2:.6g}",
            lam=lam, beta=beta, sigma2=sigma2,
        ) from exc
    return PosteriorGains(C=C, P=P, factor=factor)


def compute_posterior_gains(U: np.ndarray, lam: float, beta: float,
                            sigma2: float, *, method: str = "auto") -> PosteriorGains:
    """Posterior mean gain and covariance of the response.

    ``method`` is ``"direct"`` (n-by-n information route), ``"lowdata"``
    (N-by-N covariance route), or ``"auto"`` which picks direct when
    N >= n. Both compute ``P = (U'U/sigma2 + (lam K)^{-1})^{-1}`` and
    ``C = P U'/sigma2``.
    """
    U = _validate_gains_inputs(U, lam, beta, sigma2)
    if method not in ("auto", "direct", "lowdata"):
        raise DomainError(f"unknown gains method {method!r}")
    if method == "auto":
        method = "direct" if U.shape[0] >= U.shape[1] else "lowdata"
    if method == "direct":
        return _gains_direct(U, float(lam), float(beta), float(sigma2))
    return _gains_lowdata(U, float(lam), float(beta), float(sigma2))


class GainsWorkspace:
    """Gain recomputation across iterations at fixed regressor and decay.

    Precomputes ``U'U`` and the kernel inverse once; each call only pays the
    n-by-n factorization at the new (scale, noise) pair.
    """

    def __init__(self, U: np.ndarray, beta: float):
        self.U = np.asarray(U, dtype=np.float64)
        self.beta = float(beta)
        n = self.U.shape[1]
        self.UtU = self.U.T @ self.U
        L = cached_kernel_factor(self.beta, n)
        self.Kinv = scipy.linalg.cho_solve((np.asarray(L), True), np.eye(n),
                                           check_finite=False)

    def gains(self, lam: float, sigma2: float) -> PosteriorGains:
        _validate_gains_inputs(self.U, lam, self.beta, sigma2)
        return _gains_direct(self.U, float(lam), self.beta, float(sigma2),
                             UtU=self.UtU, Kinv=self.Kinv)


def sample_z_conditional(g: np.ndarray, sigma2: float, y: np.ndarray,
                         U: np.ndarray, quantizer: Quantizer,
                         rng: RngHandle) -> np.ndarray:
    """Draw the latent output record given response and noise variance.

    Given ``g`` the latent outputs are independent normals with means
    ``U g`` and variance ``sigma2``, truncated to the interval each observed
    level inverts to. Draws are consumed from ``rng`` in time order. The
    identity quantizer makes this step deterministic (``z = y``) and
    consumes no draws.
    """
    y = np.asarray(y, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if U.ndim != 2 or U.shape != (len(y), len(g)):
        raise DomainError(
            f"regressor shape {U.shape} does not match N={len(y)}, n={len(g)}"
        )
    if isinstance(quantizer, IdentityQuantizer):
        return y.copy()
    lo, hi = level_intervals(quantizer, y)
    return truncated_normal_vector(U @ g, sigma2, lo, hi, rng)


def sample_lambda_conditional(g: np.ndarray, beta: float, rng: RngHandle) -> float:
    """Draw the prior scale given the response.

    The reciprocal scale is gamma with shape n/2 and rate
    ``g' K^{-1} g / 2``; the returned value is its inverse. A numerically
    zero quadratic form leaves the draw undefined.
    """
    g = np.asarray(g, dtype=np.float64)
    qf = kernel_quadratic_form(g, beta)
    if qf <= 0.0:
        raise DegeneratePriorError(
            "kernel quadratic form of the response is numerically zero"
        )
    inv = sample_gamma(0.5 * len(g), 0.5 * qf, rng)
    if inv == 0.0:
        raise DegeneratePriorError("reciprocal-scale draw underflowed to zero")
    return 1.0 / inv


def sample_sigma2_conditional(z: np.ndarray, g: np.ndarray, U: np.ndarray,
                              rng: RngHandle) -> float:
    """Draw the noise variance given latent outputs and response.

    The reciprocal variance is gamma with shape N/2 and rate ``v'v / 2``
    where ``v = z - U g``.
    """
    z = np.asarray(z, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape != (len(z), len(g)):
        raise DomainError(
            f"regressor shape {U.shape} does not match N={len(z)}, n={len(g)}"
        )
    v = z - U @ g
    ss = float(v @ v)
    if ss <= 0.0:
        raise DegenerateResidualError("latent residual is numerically zero")
    inv = sample_gamma(0.5 * len(z), 0.5 * ss, rng)
    if inv == 0.0:
        raise DegenerateResidualError("reciprocal-variance draw underflowed to zero")
    return 1.0 / inv


def sample_g_conditional(z: np.ndarray, gains: PosteriorGains,
                         rng: RngHandle) -> np.ndarray:
    """Draw the response given the latent outputs: normal with mean
    ``C z`` and covariance ``P``, sampled through the stored factor."""
    z = np.asarray(z, dtype=np.float64)
    if gains.C.shape[1] != len(z):
        raise DomainError(
            f"gain expects record length {gains.C.shape[1]}, got {len(z)}"
        )
    return sample_mvn(gains.C @ z, gains.factor, rng)
