"""Random stable systems, impulse responses, and quantized data generation.

The benchmark draws random discrete-time transfer functions from conjugate
zero and pole pairs, truncates their impulse response at a fixed length,
normalizes it to unit Euclidean norm, and pushes white-noise input through
the resulting finite response. Measurement noise is sized from a target
signal-to-noise ratio before the output is quantized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegenerateSignalError, DomainError, InsufficientDataError
from .quantizer import Quantizer, quantize_array
from .samplers import RngHandle

# Magnitude caps for random conjugate pairs; poles stay a little further
# from the unit circle than zeros.
ZERO_MAG_MAX = 0.95
POLE_MAG_MAX = 0.93


@dataclass(frozen=True)
class TransferFunction:
    """Rational discrete-time system in delay-operator form.

    ``num`` and ``den`` hold ascending powers of the delay operator, with
    ``den[0] == 1``. Stability (all poles strictly inside the unit circle)
    is enforced at construction.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=np.float64))
        den = np.atleast_1d(np.asarray(self.den, dtype=np.float64))
        if num.ndim != 1 or den.ndim != 1 or len(den) < 1:
            raise DomainError("numerator and denominator must be 1-d")
        if not np.all(np.isfinite(num)) or not np.all(np.isfinite(den)):
            raise DomainError("coefficients must be finite")
        if den[0] != 1.0:
            raise DomainError(f"denominator must be monic in the delay, got den[0]={den[0]!r}")
        if len(den) > 1:
            # den read as descending powers of z gives the pole polynomial
            poles = np.roots(den)
            if np.any(np.abs(poles) >= 1.0):
                raise DomainError(
                    f"unstable system: pole magnitude {np.max(np.abs(poles)):.6g} >= 1"
                )
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)


@dataclass
class Dataset:
    """Input/output record, optionally carrying simulation ground truth."""

    u: np.ndarray
    y: np.ndarray
    z_true: np.ndarray | None = None
    g_true: np.ndarray | None = None
    sigma2_true: float | None = None
    quantizer: Quantizer | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.u.shape != self.y.shape or self.u.ndim != 1:
            raise DomainError("u and y must be 1-d with equal length")
        if self.z_true is not None:
            self.z_true = np.asarray(self.z_true, dtype=np.float64)
            if self.z_true.shape != self.y.shape:
                raise DomainError("z_true must match y in length")


def random_system(rng: RngHandle, zero_pairs: int = 10, pole_pairs: int = 10) -> TransferFunction:
    """Draw a random stable system from conjugate root pairs.

    Each pair has magnitude uniform on [0, cap] (caps 0.95 for zeros, 0.93
    for poles) and phase uniform on [0, 2*pi). The numerator carries one
    extra delay so the impulse response starts at lag one. Draw order is
    fixed (zero pairs first, magnitude before phase) so a given handle
    always yields the same system.
    """
    if zero_pairs < 0 or pole_pairs < 0:
        raise DomainError("pair counts must be non-negative")
    gen = rng.generator

    def draw_pairs(count: int, cap: float) -> np.ndarray:
        roots = []
        for _ in range(count):
            mag = cap * gen.random()
            phase = 2.0 * np.pi * gen.random()
            r = mag * np.exp(1j * phase)
            roots.extend([r, np.conj(r)])
        return np.asarray(roots, dtype=np.complex128)

    zeros = draw_pairs(zero_pairs, ZERO_MAG_MAX)
    poles = draw_pairs(pole_pairs, POLE_MAG_MAX)
    num = np.concatenate(([0.0], np.poly(zeros).real)) if len(zeros) else np.array([0.0, 1.0])
    den = np.poly(poles).real if len(poles) else np.array([1.0])
    return TransferFunction(num=num, den=den)


def impulse_response(tf: TransferFunction, n: int) -> np.ndarray:
    """First ``n`` impulse-response coefficients ``g_1..g_n``.

    Runs the difference equation of ``tf`` against a unit pulse and returns
    the response from lag one onward (the lag-zero sample is dropped).
    """
    if n < 1:
        raise DomainError(f"response length must be >= 1, got {n}")
    b = tf.num
    a = tf.den
    h = np.zeros(n + 1)
    for t in range(n + 1):
        acc = b[t] if t < len(b) else 0.0
        for k in range(1, min(t, len(a) - 1) + 1):
            acc -= a[k] * h[t - k]
        h[t] = acc
    return h[1:]


def toeplitz_regressor(u: np.ndarray, n: int) -> np.ndarray:
    """N-by-n convolution matrix of the input.

    Row ``t`` (0-based) holds ``u_t, u_{t-1}, .., u_{t-n+1}`` with zeros
    before the first sample, so ``(U @ g)[t] = sum_k g_k u_{t-k+1}``.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1:
        raise DomainError(f"input must be 1-d, got shape {u.shape}")
    if n < 1 or n > len(u):
        raise DomainError(f"need 1 <= n <= len(u), got n={n}, len(u)={len(u)}")
    return scipy.linalg.toeplitz(u, np.zeros(n))


def normalize_response(g: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm; zero responses are rejected."""
    g = np.asarray(g, dtype=np.float64)
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        raise DegenerateSignalError("impulse response is identically zero")
    return g / norm


def generate_dataset(g: np.ndarray, u: np.ndarray, snr: float,
                     quantizer: Quantizer, rng: RngHandle) -> Dataset:
    """Simulate quantized output data for a known finite impulse response.

    The noise-free output is ``x = U g`` with ``U`` the Toeplitz regressor of
    ``u``; measurement noise is white normal with variance
    ``var(x) / snr`` (population variance), so the realized dataset satisfies
    ``var(x) / sigma2_true == snr`` exactly. ``y`` is the quantized noisy
    output and ``z_true`` the latent pre-quantization record.
    """
    g = np.asarray(g, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if not np.isfinite(snr) or snr <= 0.0:
        raise DomainError(f"snr must be finite and positive, got {snr!r}")
    if g.ndim != 1 or len(g) < 1:
        raise DomainError("impulse response must be a non-empty vector")
    if len(u) < len(g):
        raise InsufficientDataError(
            f"need at least as many samples as response coefficients, "
            f"got N={len(u)}, n={len(g)}"
        )
    U = toeplitz_regressor(u, len(g))
    x = U @ g
    var = float(np.var(x))
    if var == 0.0:
        raise DegenerateSignalError("noise-free output has zero variance")
    sigma2 = var / float(snr)
    z = x + np.sqrt(sigma2) * rng.generator.standard_normal(len(u))
    y = quantize_array(quantizer, z)
    return Dataset(u=u, y=y, z_true=z, g_true=g, sigma2_true=sigma2, quantizer=quantizer)


def white_input(length: int, rng: RngHandle) -> np.ndarray:
    """Unit-variance white normal input of the given length."""
    if length < 1:
        raise DomainError(f"length must be >= 1, got {length}")
    return rng.generator.standard_normal(length)


def save_dataset_csv(dataset: Dataset, path: str, include_z: bool = False) -> None:
    """Write ``t,u,y[,z]`` rows with 17-significant-digit values."""
    cols = ["t", "u", "y"] + (["z"] if include_z else [])
    if include_z and dataset.z_true is None:
        raise DomainError("dataset has no latent record to include")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for t in range(len(dataset.u)):
            row = [str(t), f"{dataset.u[t]:.17g}", f"{dataset.y[t]:.17g}"]
            if include_z:
                row.append(f"{dataset.z_true[t]:.17g}")
            writer.writerow(row)


def load_dataset_csv(path: str) -> Dataset:
    """Read a ``t,u,y[,z]`` file written by :func:`save_dataset_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:3]] != ["t", "u", "y"]:
            raise DomainError(f"expected header t,u,y[,z] in {path!r}, got {header!r}")
        has_z = len(header) >= 4 and header[3].strip() == "z"
        u, y, z = [], [], []
        for row in reader:
            if not row:
                continue
            u.append(float(row[1]))
            y.append(float(row[2]))
            if has_z:
                z.append(float(row[3]))
    if not u:
        raise DomainError(f"no data rows in {path!r}")
    return Dataset(u=np.asarray(u), y=np.asarray(y),
                   z_true=np.asarray(z) if has_z else None)
