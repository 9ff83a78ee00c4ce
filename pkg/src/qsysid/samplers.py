"""Random draw primitives and reproducible stream management.

All randomness flows through :class:`RngHandle`, a (seed, substream) pair
mapped onto numpy's PCG64 via ``SeedSequence(entropy=seed,
spawn_key=(substream,))``. Distinct substreams of one seed are independent,
and a given handle reproduces its draw sequence exactly on every platform.

The truncated-normal sampler is exact rejection sampling with a
region-dependent proposal:

* plain normal proposals while the interval holds noticeable mass or
  straddles the mean,
* a shifted-exponential proposal (one-sided tail rejection) for far tails,
* a uniform proposal on the interval when it is too narrow for either.

Every accepted point satisfies the strict inequalities
``lower < x < upper`` in original units, so re-quantizing a draw always
reproduces the level whose interval was sampled, whatever closure
convention the quantizer uses.

Gamma draws are parameterized by shape and *rate* throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import maybe_jit
from .errors import DegenerateIntervalError, DomainError

# Substream conventions used across the package.
SUBSTREAM_SYSTEM = 0
SUBSTREAM_INPUT = 1
SUBSTREAM_NOISE = 2
SUBSTREAM_CHAIN = 3

_SEED_MASK = 0xFFFFFFFFFFFFFFFF

# Classification constants for the truncated-normal proposal choice. An
# interval with normal mass below NAIVE_MASS_MIN never uses plain normal
# proposals (expected trials would exceed 1/NAIVE_MASS_MIN); a tail window
# narrower than EXP_WINDOW_MIN in units of the exponential proposal's rate
# falls back to uniform proposals.
NAIVE_MASS_MIN = 1e-2
EXP_WINDOW_MIN = 0.35

# Intervals further than this many standard deviations from the mean are
# numerically point masses; floating-point rounding makes exact sampling
# there meaningless, so the wrappers reject them.
TAIL_LIMIT = 1e8


@dataclass(eq=False)
class RngHandle:
    """Deterministic handle on one substream of one seed."""

    seed: int
    substream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.substream < 0:
            raise DomainError(f"substream must be non-negative, got {self.substream}")
        self.seed = int(self.seed) & _SEED_MASK
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.substream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def sibling(self, substream: int) -> "RngHandle":
        """Fresh handle on another substream of the same seed."""
        return RngHandle(self.seed, substream)


def _std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


_std_normal_cdf = maybe_jit(_std_normal_cdf)


def _truncnorm_std(a: float, b: float, rng) -> float:
    """One draw from N(0, 1) conditioned on (a, b), a < b."""
    if a == -np.inf and b == np.inf:
        return rng.standard_normal()
    flip = False
    if b <= 0.0:
        # mirror so the half-line of interest is positive
        flip = True
        a, b = -b, -a
    mass = _std_normal_cdf(b) - _std_normal_cdf(a)
    x = 0.0
    if mass >= NAIVE_MASS_MIN:
        while True:
            x = rng.standard_normal()
            if a < x < b:
                break
    elif a < 0.0:
        # straddles the mode but with tiny mass: uniform proposal, bound at 0
        while True:
            x = a + (b - a) * rng.random()
            if a < x < b and rng.random() <= math.exp(-0.5 * x * x):
                break
    else:
        alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
        if b == np.inf or alpha * (b - a) >= EXP_WINDOW_MIN:
            # shifted-exponential proposal with rate alpha; acceptance
            # probability exp(-(x - alpha)^2 / 2) is maximal near the mode
            # of the truncated density
            while True:
                x = a + rng.standard_exponential() / alpha
                if x < b and rng.random() <= math.exp(-0.5 * (x - alpha) * (x - alpha)):
                    break
        else:
            # narrow tail window: uniform proposal, density bound at a
            while True:
                x = a + (b - a) * rng.random()
                if a < x < b and rng.random() <= math.exp(-0.5 * (x * x - a * a)):
                    break
    return -x if flip else x


_truncnorm_std = maybe_jit(_truncnorm_std)


def _truncnorm_one(mu: float, sigma: float, lo: float, hi: float, rng) -> float:
    """One truncated-normal draw in original units, strictly inside (lo, hi)."""
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    while True:
        x = mu + sigma * _truncnorm_std(a, b, rng)
        if lo < x < hi:
            return x


_truncnorm_one = maybe_jit(_truncnorm_one)


def _truncnorm_fill(mu: np.ndarray, sigma: float, lo: np.ndarray,
                    hi: np.ndarray, out: np.ndarray, rng) -> None:
    for t in range(mu.shape[0]):
        out[t] = _truncnorm_one(mu[t], sigma, lo[t], hi[t], rng)


_truncnorm_fill = maybe_jit(_truncnorm_fill)


def sample_truncated_normal(mu: float, sigma2: float, lower: float,
                            upper: float, rng: RngHandle) -> float:
    """Exact draw from N(mu, sigma2) conditioned on (lower, upper).

    Parameters
    ----------
    mu, sigma2 : float
        Mean and variance of the parent normal; both finite, sigma2 > 0.
    lower, upper : float
        Interval endpoints, lower < upper; either may be infinite.
    rng : RngHandle
        Stream to consume.

    Returns
    -------
    float
        A value strictly inside (lower, upper).
    """
    mu = float(mu)
    sigma2 = float(sigma2)
    if not (np.isfinite(mu) and np.isfinite(sigma2)) or sigma2 <= 0.0:
        raise DomainError(f"need finite mu and sigma2 > 0, got mu={mu!r}, sigma2={sigma2!r}")
    lower = float(lower)
    upper = float(upper)
    if np.isnan(lower) or np.isnan(upper):
        raise DomainError("truncation endpoints must not be NaN")
    if lower == upper:
        raise DegenerateIntervalError(f"zero-width truncation interval at {lower!r}")
    if lower > upper:
        raise DomainError(f"lower must be below upper, got ({lower!r}, {upper!r})")
    sigma = math.sqrt(sigma2)
    if (lower - mu) / sigma > TAIL_LIMIT or (upper - mu) / sigma < -TAIL_LIMIT:
        raise DomainError(
            f"interval ({lower!r}, {upper!r}) lies beyond {TAIL_LIMIT:g} standard "
            f"deviations from the mean; the conditional is numerically a point mass"
        )
    return float(_truncnorm_one(mu, sigma, lower, upper, rng.generator))


def truncated_normal_vector(mu: np.ndarray, sigma2: float, lower: np.ndarray,
                            upper: np.ndarray, rng: RngHandle) -> np.ndarray:
    """Independent truncated-normal draws with per-element means and
    intervals, shared variance, consumed in index order from one stream."""
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    lower = np.ascontiguousarray(lower, dtype=np.float64)
    upper = np.ascontiguousarray(upper, dtype=np.float64)
    if not (mu.shape == lower.shape == upper.shape) or mu.ndim != 1:
        raise DomainError("mean and endpoint arrays must be 1-d with equal shapes")
    sigma2 = float(sigma2)
    if not np.all(np.isfinite(mu)) or not np.isfinite(sigma2) or sigma2 <= 0.0:
        raise DomainError("need finite means and sigma2 > 0")
    if np.isnan(lower).any() or np.isnan(upper).any():
        raise DomainError("truncation endpoints must not be NaN")
    if (lower == upper).any():
        t = int(np.flatnonzero(lower == upper)[0])
        raise DegenerateIntervalError(f"zero-width truncation interval at position {t}")
    if (lower > upper).any():
        raise DomainError("every lower endpoint must be below its upper endpoint")
    sigma = math.sqrt(sigma2)
    far = ((lower - mu) / sigma > TAIL_LIMIT) | ((upper - mu) / sigma < -TAIL_LIMIT)
    if far.any():
        t = int(np.flatnonzero(far)[0])
        raise DomainError(
            f"interval at position {t} lies beyond {TAIL_LIMIT:g} standard "
            f"deviations from the mean; the conditional is numerically a point mass"
        )
    out = np.empty_like(mu)
    _truncnorm_fill(mu, sigma, lower, upper, out, rng.generator)
    return out


def sample_gamma(shape: float, rate: float, rng: RngHandle) -> float:
    """One Gamma(shape, rate) draw; mean is shape / rate."""
    shape = float(shape)
    rate = float(rate)
    if not (np.isfinite(shape) and np.isfinite(rate)) or shape <= 0.0 or rate <= 0.0:
        raise DomainError(f"need shape > 0 and rate > 0, got ({shape!r}, {rate!r})")
    return float(rng.generator.gamma(shape, 1.0 / rate))


def sample_mvn(mean: np.ndarray, cov_factor: np.ndarray, rng: RngHandle) -> np.ndarray:
    """One multivariate normal draw from a mean and a lower Cholesky factor
    of the covariance: ``mean + cov_factor @ standard_normal``."""
    mean = np.asarray(mean, dtype=np.float64)
    cov_factor = np.asarray(cov_factor, dtype=np.float64)
    if mean.ndim != 1:
        raise DomainError(f"mean must be 1-d, got shape {mean.shape}")
    if cov_factor.ndim != 2 or cov_factor.shape != (mean.shape[0], mean.shape[0]):
        raise DomainError(
            f"factor shape {cov_factor.shape} does not match mean length {mean.shape[0]}"
        )
    if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov_factor)):
        raise DomainError("mean and factor must be finite")
    return mean + cov_factor @ rng.generator.standard_normal(mean.shape[0])
