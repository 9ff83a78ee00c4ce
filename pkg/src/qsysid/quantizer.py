"""Quantizer maps and their level-to-interval inverses.

Four kinds are supported:

``binary``
    Threshold detector: ``x >= c`` maps to +1 (interval ``[c, inf)``),
    ``x < c`` maps to -1 (interval ``(-inf, c)``).
``ceil``
    Integer ceiling: level ``p`` corresponds to the interval ``(p - 1, p]``.
``custom``
    Finite level set ``p_1..p_Q`` on consecutive intervals
    ``(q_{k-1}, q_k]`` over a strictly increasing threshold ladder
    ``q_0..q_Q`` whose two ends may be infinite.
``identity``
    Pass-through: the level equals the value and the interval is a point.
    Useful for driving quantized-data algorithms with unquantized data.

The interval conventions above are exactly the ones ``roundtrip_check``
verifies, so samples drawn strictly inside an interval re-quantize to the
level that produced it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IdentifiabilityWarning, InvalidLevelError, OutOfRangeError


@dataclass(frozen=True)
class BinaryQuantizer:
    threshold: float

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise DomainError(f"binary threshold must be finite, got {self.threshold!r}")
        if self.threshold == 0.0:
            warnings.warn(
                "binary threshold 0 makes the response scale unidentifiable; "
                "only the sign pattern of the output is informative",
                IdentifiabilityWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class CeilQuantizer:
    pass


@dataclass(frozen=True)
class CustomQuantizer:
    """Thresholds ``q_0..q_Q`` (inner ones finite, ends may be +-inf) and
    pairwise-distinct levels ``p_1..p_Q``."""

    thresholds: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        q = np.asarray(self.thresholds, dtype=np.float64)
        p = np.asarray(self.levels, dtype=np.float64)
        if q.ndim != 1 or p.ndim != 1 or len(q) != len(p) + 1 or len(p) < 1:
            raise DomainError(
                f"custom quantizer needs Q+1 thresholds for Q >= 1 levels, "
                f"got {len(q)} thresholds and {len(p)} levels"
            )
        if np.isnan(q).any() or not np.all(np.isfinite(q[1:-1])):
            raise DomainError("inner thresholds must be finite")
        if not np.all(np.diff(q) > 0):
            raise DomainError("thresholds must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise DomainError("levels must be finite")
        if len(np.unique(p)) != len(p):
            raise DomainError("levels must be pairwise distinct")
        object.__setattr__(self, "thresholds", tuple(float(v) for v in q))
        object.__setattr__(self, "levels", tuple(float(v) for v in p))


@dataclass(frozen=True)
class IdentityQuantizer:
    pass


Quantizer = BinaryQuantizer | CeilQuantizer | CustomQuantizer | IdentityQuantizer


def _check_finite_value(x: float) -> float:
    x = float(x)
    if not np.isfinite(x):
        raise DomainError(f"quantizer input must be finite, got {x!r}")
    return x


def quantize(spec: Quantizer, x: float) -> float:
    """Map one value to its level."""
    x = _check_finite_value(x)
    if isinstance(spec, BinaryQuantizer):
        return 1.0 if x >= spec.threshold else -1.0
    if isinstance(spec, CeilQuantizer):
        return float(np.ceil(x))
    if isinstance(spec, CustomQuantizer):
        q = spec.thresholds
        k = int(np.searchsorted(q, x, side="left"))
        if k == 0 or k == len(q):
            raise OutOfRangeError(
                f"value {x!r} outside quantizer coverage ({q[0]!r}, {q[-1]!r}]"
            )
        return spec.levels[k - 1]
    if isinstance(spec, IdentityQuantizer):
        return x
    raise DomainError(f"unknown quantizer {spec!r}")


def quantize_array(spec: Quantizer, x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantize`."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("quantizer input contains non-finite values")
    if isinstance(spec, BinaryQuantizer):
        return np.where(x >= spec.threshold, 1.0, -1.0)
    if isinstance(spec, CeilQuantizer):
        return np.ceil(x)
    if isinstance(spec, CustomQuantizer):
        q = np.asarray(spec.thresholds)
        k = np.searchsorted(q, x, side="left")
        bad = (k == 0) | (k == len(q))
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise OutOfRangeError(
                f"value {x.flat[t]!r} at position {t} outside quantizer "
                f"coverage ({q[0]!r}, {q[-1]!r}]"
            )
        return np.asarray(spec.levels, dtype=np.float64)[k - 1]
    if isinstance(spec, IdentityQuantizer):
        return x.copy()
    raise DomainError(f"unknown quantizer {spec!r}")


def level_interval(spec: Quantizer, level: float) -> tuple[float, float]:
    """Endpoints of the region mapping to ``level``.

    Closure follows the kind's convention (see module docstring); the
    identity kind returns the degenerate point interval ``(level, level)``.
    """
    if isinstance(spec, BinaryQuantizer):
        if level == 1.0:
            return (spec.threshold, np.inf)
        if level == -1.0:
            return (-np.inf, spec.threshold)
        raise InvalidLevelError(f"binary level must be +-1, got {level!r}", level=level)
    if isinstance(spec, CeilQuantizer):
        lv = float(level)
        if not np.isfinite(lv) or lv != np.round(lv):
            raise InvalidLevelError(f"ceiling level must be an integer, got {level!r}", level=level)
        return (lv - 1.0, lv)
    if isinstance(spec, CustomQuantizer):
        try:
            k = spec.levels.index(float(level))
        except (ValueError, TypeError):
            raise InvalidLevelError(
                f"level {level!r} not in quantizer level set", level=level
            ) from None
        return (spec.thresholds[k], spec.thresholds[k + 1])
    if isinstance(spec, IdentityQuantizer):
        lv = _check_finite_value(level)
        return (lv, lv)
    raise DomainError(f"unknown quantizer {spec!r}")


def invalid_level_positions(spec: Quantizer, levels: np.ndarray) -> np.ndarray:
    """Indices of entries that are not levels of ``spec`` (empty when all
    entries are valid)."""
    y = np.asarray(levels, dtype=np.float64)
    if isinstance(spec, BinaryQuantizer):
        bad = ~((y == 1.0) | (y == -1.0))
    elif isinstance(spec, CeilQuantizer):
        bad = ~np.isfinite(y) | (y != np.round(y))
    elif isinstance(spec, CustomQuantizer):
        bad = ~np.isin(y, np.asarray(spec.levels))
    elif isinstance(spec, IdentityQuantizer):
        bad = ~np.isfinite(y)
    else:
        raise DomainError(f"unknown quantizer {spec!r}")
    return np.flatnonzero(bad)


def level_intervals(spec: Quantizer, levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`level_interval` for a sequence of observed levels.

    Raises :class:`InvalidLevelError` carrying the first offending position.
    """
    y = np.asarray(levels, dtype=np.float64)
    if isinstance(spec, BinaryQuantizer):
        bad = ~((y == 1.0) | (y == -1.0))
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise InvalidLevelError(
                f"binary level must be +-1, got {y[t]!r} at position {t}",
                level=float(y[t]), index=t,
            )
        lo = np.where(y == 1.0, spec.threshold, -np.inf)
        hi = np.where(y == 1.0, np.inf, spec.threshold)
        return lo, hi
    if isinstance(spec, CeilQuantizer):
        bad = ~np.isfinite(y) | (y != np.round(y))
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise InvalidLevelError(
                f"ceiling level must be an integer, got {y[t]!r} at position {t}",
                level=float(y[t]), index=t,
            )
        return y - 1.0, y.copy()
    if isinstance(spec, CustomQuantizer):
        p = np.asarray(spec.levels)
        q = np.asarray(spec.thresholds)
        # match each observation to its level index by exact equality
        order = np.argsort(p)
        pos = np.searchsorted(p[order], y)
        pos = np.clip(pos, 0, len(p) - 1)
        k = order[pos]
        bad = p[k] != y
        if bad.any():
            t = int(np.flatnonzero(bad)[0])
            raise InvalidLevelError(
                f"level {y[t]!r} at position {t} not in quantizer level set",
                level=float(y[t]), index=t,
            )
        return q[k], q[k + 1]
    if isinstance(spec, IdentityQuantizer):
        if not np.all(np.isfinite(y)):
            t = int(np.flatnonzero(~np.isfinite(y))[0])
            raise InvalidLevelError(
                f"identity level must be finite, got {y[t]!r} at position {t}",
                level=float(y[t]), index=t,
            )
        return y.copy(), y.copy()
    raise DomainError(f"unknown quantizer {spec!r}")


def interval_contains(spec: Quantizer, level: float, x: float) -> bool:
    """Membership of ``x`` in the region of ``level`` under the kind's
    closure convention."""
    lo, hi = level_interval(spec, level)
    if isinstance(spec, BinaryQuantizer):
        return (lo <= x) if level == 1.0 else (x < hi)
    if isinstance(spec, IdentityQuantizer):
        return x == level
    return lo < x <= hi


def roundtrip_check(spec: Quantizer, x: float) -> bool:
    """True iff ``x`` lies in the interval of its own level."""
    return interval_contains(spec, quantize(spec, x), x)


def parse_quantizer(text: str) -> Quantizer:
    """Parse the text grammar ``binary:<c>``, ``ceil``, ``identity`` or
    ``custom:<q_1,..,q_{Q-1}>:<p_1,..,p_Q>`` (custom thresholds are the inner
    ones; coverage extends to +-inf)."""
    parts = text.strip().split(":")
    kind = parts[0].strip().lower()
    try:
        if kind == "binary" and len(parts) == 2:
            return BinaryQuantizer(threshold=float(parts[1]))
        if kind == "ceil" and len(parts) == 1:
            return CeilQuantizer()
        if kind == "identity" and len(parts) == 1:
            return IdentityQuantizer()
        if kind == "custom" and len(parts) == 3:
            inner = [float(v) for v in parts[1].split(",") if v.strip() != ""]
            levels = [float(v) for v in parts[2].split(",") if v.strip() != ""]
            return CustomQuantizer(
                thresholds=tuple([-np.inf] + inner + [np.inf]),
                levels=tuple(levels),
            )
    except ValueError as exc:
        raise DomainError(f"cannot parse quantizer {text!r}: {exc}") from exc
    raise DomainError(f"cannot parse quantizer {text!r}")


def format_quantizer(spec: Quantizer) -> str:
    """Inverse of :func:`parse_quantizer` (17 significant digits)."""
    if isinstance(spec, BinaryQuantizer):
        return f"binary:{spec.threshold:.17g}"
    if isinstance(spec, CeilQuantizer):
        return "ceil"
    if isinstance(spec, IdentityQuantizer):
        return "identity"
    if isinstance(spec, CustomQuantizer):
        if np.isfinite(spec.thresholds[0]) or np.isfinite(spec.thresholds[-1]):
            raise DomainError(
                "text grammar cannot express custom quantizers with finite "
                "outer thresholds"
            )
        inner = ",".join(f"{v:.17g}" for v in spec.thresholds[1:-1])
        levels = ",".join(f"{v:.17g}" for v in spec.levels)
        return f"custom:{inner}:{levels}"
    raise DomainError(f"unknown quantizer {spec!r}")
