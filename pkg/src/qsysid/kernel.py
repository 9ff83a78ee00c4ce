"""First-order stable-spline covariance for impulse-response coefficients.

The kernel couples coefficients ``g_i, g_j`` (1-based lags) through
``beta ** max(i, j)`` with decay ``beta`` in the open interval (0, 1). It is
symmetric positive definite for any size, encodes exponentially decaying,
smooth responses, and its inverse is tridiagonal, which keeps the spectrum
benign until ``beta`` approaches 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DomainError, FactorizationError

# Relative scale of the single diagonal jitter retry permitted on a failed
# factorization.
JITTER_SCALE = 1e-12


@dataclass(frozen=True)
class KernelMatrix:
    """A realized kernel matrix together with the decay that produced it."""

    beta: float
    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def build_kernel(beta: float, n: int) -> KernelMatrix:
    """Build the n-by-n first-order stable-spline kernel matrix.

    Parameters
    ----------
    beta : float
        Decay parameter, strictly inside (0, 1).
    n : int
        Matrix size, at least 1.

    Returns
    -------
    KernelMatrix
        With ``entries[i, j] == beta ** (max(i, j) + 1)`` for 0-based storage
        indices, i.e. ``beta ** max(i, j)`` in 1-based coefficient indexing.
    """
    if not np.isfinite(beta) or not 0.0 < beta < 1.0:
        raise DomainError(f"kernel decay must lie in (0, 1), got {beta!r}")
    if n < 1:
        raise DomainError(f"kernel size must be >= 1, got {n}")
    lag = np.arange(1, n + 1, dtype=np.float64)
    entries = float(beta) ** np.maximum.outer(lag, lag)
    return KernelMatrix(beta=float(beta), entries=entries)


def kernel_factor(kernel: KernelMatrix | np.ndarray, *, force_jitter: bool = False) -> np.ndarray:
    """Lower-triangular Cholesky factor of a kernel matrix.

    One retry with diagonal jitter ``JITTER_SCALE * trace / n`` is permitted;
    a second failure raises :class:`FactorizationError`. ``force_jitter``
    skips the clean attempt, which exists so the jittered path can be
    exercised and compared on matrices that do not need it.
    """
    mat = kernel.entries if isinstance(kernel, KernelMatrix) else np.asarray(kernel, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError(f"kernel matrix must be square, got shape {mat.shape}")
    if not force_jitter:
        try:
            return np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            pass
    n = mat.shape[0]
    jitter = JITTER_SCALE * float(np.trace(mat)) / n
    try:
        return np.linalg.cholesky(mat + jitter * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"kernel factorization failed even with diagonal jitter {jitter:.3e}"
        ) from exc


@lru_cache(maxsize=16)
def cached_kernel_factor(beta: float, n: int) -> np.ndarray:
    """Memoized factor for repeated evaluations at a fixed (beta, n).

    The returned array is marked read-only; treat it as shared.
    """
    factor = kernel_factor(build_kernel(beta, n))
    factor.setflags(write=False)
    return factor


def kernel_quadratic_form(g: np.ndarray, beta: float) -> float:
    """Evaluate ``g' K^{-1} g`` through the Cholesky factor of K.

    Never forms the inverse: with ``K = L L'`` the form equals
    ``|| L^{-1} g ||^2``, obtained from one triangular solve.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1:
        raise DomainError(f"coefficient vector must be 1-d, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DomainError("coefficient vector contains non-finite entries")
    factor = cached_kernel_factor(float(beta), g.shape[0])
    half = scipy.linalg.solve_triangular(factor, g, lower=True)
    return float(half @ half)
