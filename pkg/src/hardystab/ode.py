"""Dormand-Prince 5(4) embedded Runge-Kutta integrator.

Small and explicit on purpose: the shooting code needs per-step access to
the accepted states (for stop conditions and sign-change counting), and the
order study needs a fixed-step mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
               187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    first_step: Optional[float] = None
    max_step: float = np.inf
    max_steps: int = 1_000_000
    fixed_step: Optional[float] = None  # disables error control when set

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # shape (n_steps + 1, dim)
    f: np.ndarray  # derivative at every accepted state
    status: str  # "t_end", "stopped", "max_steps"
    n_rejected: int = 0
    message: str = ""
    extra: dict = field(default_factory=dict)


def _step(fun, t, y, f0, h):
    k = [f0]
    for i in range(1, 7):
        dy = h * sum(a * kk for a, kk in zip(A[i], k))
        k.append(fun(t + C[i] * h, y + dy))
    y_new = y + h * sum(b * kk for b, kk in zip(B5, k) if b != 0.0)
    err = h * sum(e * kk for e, kk in zip(E, k))
    return y_new, k[-1], err


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    cfg: IntegratorConfig | None = None,
    stop: Callable[[float, np.ndarray], Optional[str]] | None = None,
) -> Solution:
    """Integrate y' = fun(t, y) forward from t0 to t_end.

    ``stop(t, y)`` is called after each accepted step; a non-None return
    value ends the integration and is stored as ``Solution.message``.
    """
    cfg = cfg or IntegratorConfig()
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    f = fun(t, y)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    if cfg.fixed_step is not None:
        h = cfg.fixed_step
    elif cfg.first_step is not None:
        h = cfg.first_step
    else:
        scale = cfg.atol + cfg.rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, cfg.max_step, t_end - t)
    n_rej = 0
    status = "max_steps"
    message = ""
    for _ in range(cfg.max_steps):
        if t >= t_end:
            status = "t_end"
            break
        h = min(h, t_end - t)
        if t_end - (t + h) <= 1e-12 * max(1.0, abs(t_end)):
            h = t_end - t  # do not leave a rounding-sized sliver for a last step
        y_new, f_new, err = _step(fun, t, y, f, h)
        if cfg.fixed_step is None:
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            en = np.sqrt(np.mean((err / scale) ** 2))
            if not np.isfinite(en) or en > 1.0:
                n_rej += 1
                fac = MIN_FACTOR if not np.isfinite(en) else max(MIN_FACTOR, SAFETY * en ** -0.2)
                h *= fac
                if h < 1e-14 * max(1.0, abs(t)):
                    status = "step_underflow"
                    break
                continue
            fac = MAX_FACTOR if en == 0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
            h_next = min(h * fac, cfg.max_step)
        else:
            h_next = h
        t = t_end if h == t_end - t else t + h
        y, f = y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        fs.append(f.copy())
        h = h_next
        if stop is not None:
            msg = stop(t, y)
            if msg is not None:
                status, message = "stopped", msg
                break
    else:
        status = "t_end" if t >= t_end else "max_steps"
    return Solution(np.array(ts), np.array(ys), np.array(fs), status, n_rej, message)
