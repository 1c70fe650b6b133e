"""Kernel density estimation and (one-sided) least-squares cross-validation scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ._fastscore import kde_sums, score_sums
from .kernels import Kernel, _kappa, onesided_equivalent

__all__ = [
    "Sample",
    "DensityEstimate",
    "kde_evaluate",
    "cv_score",
    "oscv_score",
    "CVScore",
    "read_sample",
]


class Sample:
    """Sorted, finite observations (n >= 2)."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[float]):
        x = np.sort(np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel())
        if x.size < 2:
            raise ValueError(f"a sample needs at least 2 observations, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("sample contains non-finite values")
        x.setflags(write=False)
        self.values = x

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"Sample(n={self.n})"

    def scale(self) -> float:
        """min(sd, IQR / 1.349), falling back to sd when the IQR is zero."""
        x = self.values
        sd = float(np.std(x, ddof=1))
        q75, q25 = np.quantile(x, [0.75, 0.25])
        iqr = float(q75 - q25) / 1.349
        s = min(sd, iqr) if iqr > 0 else sd
        return s

    def reflect(self) -> "Sample":
        return Sample(-self.values)


def read_sample(path: str | Path) -> Sample:
    """One number per line; blank lines and '#' comments are ignored."""
    vals = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: cannot parse {line!r} as a number") from None
    return Sample(vals)


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    h: float
    kernel: Kernel

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def _as_values(s) -> np.ndarray:
    return s.values if isinstance(s, Sample) else np.sort(np.asarray(s, dtype=float))


def kde_evaluate(s: Sample, h: float, k: Kernel, grid) -> DensityEstimate:
    """``fhat(x) = (n h)^-1 sum_i k((X_i - x) / h)`` on ``grid``."""
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    x = _as_values(s)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size > 1 and np.all(np.diff(grid) > 0):
        gauss, r, kap, onesided, a, b = _fast_args(k)[:6]
        side = 0 if not onesided else (1 if k.side == "left" else 2)
        lo, hi = k.support
        vals = kde_sums(x, grid, float(h), gauss, r, kap, side, a, b, max(hi, -lo))
        return DensityEstimate(grid=grid, values=vals / (x.size * h), h=float(h), kernel=k)
    vals = np.zeros(grid.size)
    # chunk over grid so memory stays bounded for long samples
    step = max(1, 2_000_000 // max(x.size, 1))
    for i in range(0, grid.size, step):
        g = grid[i : i + step]
        vals[i : i + step] = k((x[None, :] - g[:, None]) / h).sum(axis=1)
    vals /= x.size * h
    return DensityEstimate(grid=grid, values=vals, h=float(h), kernel=k)


class CVScore:
    """Least-squares CV score ``int fhat^2 - 2/n sum_i fhat(X_i)`` as a function of h.

    ``int fhat^2`` is the exact double sum over the kernel autocorrelation.
    The second term uses leave-one-out estimates exactly when ``k(0) != 0``;
    kernels vanishing at the origin (the one-sided ones) use the plain
    estimator, the diagonal contributing nothing.
    """

    def __init__(self, s: Sample, k: Kernel):
        x = _as_values(s)
        n = x.size
        iu = np.triu_indices(n, k=1)
        # sorted sample => all differences X_j - X_i (j > i) are >= 0
        d = np.sort((x[None, :] - x[:, None])[iu])
        self.n = n
        self.kernel = k
        self._d = d
        self._acf = k.autocorrelation
        self._c0 = float(self._acf(0.0))
        self._k0 = float(k(0.0))
        self.leave_one_out = self._k0 != 0.0
        lo, hi = k.support
        self._reach = max(k.width, hi, -lo)
        self._fast_args = _fast_args(k)

    def _sums_numpy(self, h: float, m: int) -> tuple[float, float]:
        k = self.kernel
        s = self._d[:m] / h
        acf = float(self._acf.eval_nonneg(s).sum())
        if k.symmetric:
            ksum = 2.0 * k(s).sum()
        elif k.side == "left":
            # s >= 0: k(s) vanishes for a left kernel, k(-s) for a right one
            ksum = k(-s).sum()
        else:
            ksum = k(s).sum()
        return acf, float(ksum)

    def __call__(self, h: float, use_numba: bool = True) -> float:
        if not h > 0:
            raise ValueError(f"bandwidth must be positive, got {h}")
        n = self.n
        m = int(np.searchsorted(self._d, self._reach * h, side="right"))
        if use_numba:
            acf, ksum = score_sums(self._d, m, float(h), *self._fast_args)
        else:
            acf, ksum = self._sums_numpy(h, m)
        quad = (n * self._c0 + 2.0 * acf) / (n * n * h)
        if self.leave_one_out:
            cross = ksum / (n * (n - 1) * h)
        else:
            cross = (n * self._k0 + ksum) / (n * n * h)
        return float(quad - 2.0 * cross)


def _fast_args(k: Kernel) -> tuple:
    base = k if k.symmetric else k.base
    gauss = base.family == "gaussian"
    r = 0 if gauss else base.order
    kap = 0.0 if gauss else _kappa(base.order)
    a, b = (0.0, 0.0) if k.symmetric else k._local_linear_coefs()
    acf = k.autocorrelation
    if k.family == "gaussian":
        rows, step, last = np.zeros((0, 4)), 1.0, 0
    else:
        rows, step, last = acf._rows, acf._step, acf._last
    return (gauss, r, kap, not k.symmetric, a, b, rows, step, last)


def cv_score(s: Sample, h: float, k: Kernel) -> float:
    return CVScore(s, k)(h)


def oscv_score(s: Sample, h: float, base: Kernel, side: str) -> float:
    """CV score with the one-sided local-linear equivalent of ``base``."""
    return CVScore(s, onesided_equivalent(base, side))(h)
