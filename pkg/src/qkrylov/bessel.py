"""Integer-order Bessel functions of the first kind.

Miller's downward recurrence ``J_{k-1} = (2k/x) J_k - J_{k+1}`` started well
above the largest order needed, normalized with ``J_0 + 2 sum_k J_{2k} = 1``.
"""
from __future__ import annotations

import math

import numpy as np

_RESCALE = 1e250


def max_order(x: float) -> int:
    """Largest supported ``|order|`` at argument ``x``."""
    return int(10 * (x + 20))


def bessel_j_all(n_max: int, x: float) -> np.ndarray:
    """Return ``[J_0(x), ..., J_{n_max}(x)]`` for ``x >= 0``."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError(f"argument must be finite and non-negative, got {x!r}")
    if n_max > max_order(x):
        raise OverflowError(f"order {n_max} beyond supported range {max_order(x)} at x={x}")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out

    # start index: comfortably past both n_max and the turning point x
    top = max(n_max, int(x)) + 30 + int(math.sqrt(60.0 * (max(n_max, x) + 1.0)))
    top += top % 2
    vals = np.zeros(top + 2)
    j_next, j_cur = 0.0, 1e-300
    norm_sum = 0.0
    for k in range(top, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        vals[k - 1] = j_cur
        if abs(j_cur) > _RESCALE:
            vals[k - 1:] /= _RESCALE
            j_next /= _RESCALE
            j_cur /= _RESCALE
            norm_sum /= _RESCALE
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm_sum += j_cur
    norm = vals[0] + 2.0 * norm_sum
    out[:] = vals[: n_max + 1] / norm
    return out


def bessel_j(order: int, x: float) -> float:
    """``J_order(x)`` for integer ``order`` and ``x >= 0``."""
    if int(order) != order:
        raise ValueError(f"order must be an integer, got {order!r}")
    order = int(order)
    n = abs(order)
    if n > max_order(x):
        raise OverflowError(f"|order|={n} beyond supported range {max_order(x)} at x={x}")
    val = bessel_j_all(n, x)[n]
    return -val if order < 0 and n % 2 else val
