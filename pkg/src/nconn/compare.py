"""Numeric comparison helpers shared by the verification routines."""
from __future__ import annotations

import numpy as np

REL_FLOOR = 1e-30
# pairs whose magnitudes are both below this are compared as zeros
ZERO_GUARD = 1e-12


def relative_deviation(a, b, floor: float = REL_FLOOR, zero_guard: float = ZERO_GUARD) -> np.ndarray:
    """|a - b| / max(|a|, |b|, floor), with zero pairs (both below ``zero_guard``) mapped to 0.

    NaN inputs propagate.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mag = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        dev = np.abs(a - b) / np.maximum(mag, floor)
    return np.where(mag < zero_guard, 0.0 * dev, dev)


def nanmax(x, default: float = 0.0) -> float:
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    return float(x.max()) if x.size else default
