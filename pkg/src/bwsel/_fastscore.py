"""Fused numba loop for the CV double sums over sorted pairwise differences."""

import math

import numpy as np
from numba import njit

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)
_CUT = 12.0


@njit(cache=True, fastmath=False)
def score_sums(d, m, h, gaussian_base, r, kap, onesided, a, b, rows, step, last):
    """Return (sum_p c(d_p/h), sum_p kernel contribution) over the first m pairs.

    For symmetric kernels the kernel contribution is ``2 k(s)``; for a
    one-sided kernel it is ``(a - b s) K(s)`` for s > 0, which covers both
    the left kernel at -s and the right kernel at s.
    """
    acf = 0.0
    ks = 0.0
    for p in range(m):
        s = d[p] / h
        # autocorrelation
        if rows.shape[0] == 0:
            acf += _INV_SQRT_2PI * _INV_SQRT_2 * math.exp(-0.25 * s * s)
        else:
            q = s / step
            idx = last if q >= last else int(q)
            t = s - idx * step
            acf += ((rows[idx, 0] * t + rows[idx, 1]) * t + rows[idx, 2]) * t + rows[idx, 3]
        # base kernel at s
        if gaussian_base:
            kb = _INV_SQRT_2PI * math.exp(-0.5 * s * s) if s < _CUT else 0.0
        else:
            kb = kap * (1.0 - s * s) ** r if s < 1.0 else 0.0
        if onesided:
            if s > 0.0:
                ks += (a - b * s) * kb
        else:
            ks += 2.0 * kb
    return acf, ks


@njit(cache=True)
def kde_sums(x, grid, h, gaussian_base, r, kap, onesided, a, b, reach):
    """``sum_i k((x_i - g) / h)`` for every grid point g; x sorted ascending."""
    n = x.shape[0]
    out = np.zeros(grid.shape[0])
    lo = 0
    for j in range(grid.shape[0]):
        g = grid[j]
        # grid is increasing, so the window start only moves right
        while lo < n and x[lo] < g - reach * h:
            lo += 1
        tot = 0.0
        i = lo
        while i < n and x[i] <= g + reach * h:
            u = (x[i] - g) / h
            i += 1
            if onesided == 1 and not u < 0.0:
                continue
            if onesided == 2 and not u > 0.0:
                continue
            s = abs(u)
            if gaussian_base:
                kb = _INV_SQRT_2PI * math.exp(-0.5 * s * s) if s < _CUT else 0.0
            else:
                kb = kap * (1.0 - s * s) ** r if s < 1.0 else 0.0
            if onesided == 1:
                kb *= a + b * u
            elif onesided == 2:
                kb *= a - b * u
            tot += kb
        out[j] = tot
    return out
