"""Adaptive Dormand-Prince 5(4) integrator for small ODE systems."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Butcher tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepSizeUnderflow(ArithmeticError):
    def __init__(self, t: float, h: float, y):
        self.t, self.h, self.y = t, h, np.asarray(y)
        super().__init__(f"step size underflow (h={h:.3g}) at t={t:.17g}")


@dataclass
class Trajectory:
    t: np.ndarray          # requested output times
    y: np.ndarray          # shape (len(t), dim)
    steps: int
    rejected: int


def integrate(f: Callable[[float, np.ndarray], np.ndarray], t0: float, y0: Sequence[float],
              t_out: Sequence[float], atol: float = 1e-10, rtol: float = 1e-9,
              h0: float = 0.0, h_min: float = 1e-14, max_steps: int = 200000) -> Trajectory:
    """Integrate y' = f(t, y) from t0, reporting the state at each ``t_out``.

    Output times must be monotone in one direction from ``t0``; the step is
    clipped so every output time is hit exactly.
    """
    y = np.array(y0, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    out = np.empty((len(t_out), y.size))
    if len(t_out) == 0:
        return Trajectory(t_out, out, 0, 0)
    direction = 1.0 if t_out[-1] >= t0 else -1.0
    if np.any(direction * np.diff(np.concatenate([[t0], t_out])) < 0):
        raise ValueError("output times must be monotone away from t0")
    t = float(t0)
    k1 = np.asarray(f(t, y), dtype=float)
    span = abs(t_out[-1] - t0)
    if h0 <= 0.0:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span if span > 0 else 1.0)
    h = h0
    steps = rejected = 0
    for n_out, target in enumerate(t_out):
        while direction * (target - t) > 0:
            if steps >= max_steps:
                raise StepSizeUnderflow(t, h, y)
            last = abs(target - t) <= abs(h) * (1 + 1e-12)
            hs = (target - t) if last else direction * abs(h)
            K = [k1]
            for s in range(1, 7):
                ys = y + hs * sum(a * k for a, k in zip(_A[s], K))
                K.append(np.asarray(f(t + _C[s] * hs, ys), dtype=float))
            y5 = y + hs * sum(b * k for b, k in zip(_B5, K))
            err = hs * sum(e * k for e, k in zip(_E, K))
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            with np.errstate(invalid="ignore", over="ignore"):
                enorm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if not np.isfinite(enorm) or not np.all(np.isfinite(y5)):
                enorm = np.inf
            steps += 1
            if enorm <= 1.0:
                t = target if last else t + hs
                y = y5
                k1 = K[6]  # first-same-as-last
                fac = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
                h = abs(hs) * fac if not last else max(abs(h), abs(hs) * fac)
            else:
                rejected += 1
                fac = 0.2 if not np.isfinite(enorm) else max(0.2, 0.9 * enorm ** -0.25)
                h = abs(hs) * fac
            if abs(h) < h_min * max(1.0, abs(t)):
                raise StepSizeUnderflow(t, h, y)
        out[n_out] = y
    return Trajectory(t_out, out, steps, rejected)
