"""Kernel algebra: evaluation, derivatives, moment functionals, one-sided
local-linear equivalent kernels and bandwidth rescaling constants.

Kernels are immutable descriptors.  Three families are supported:

* ``polynomial(r)``: ``K_2r(u) = kappa_r (1 - u^2)^r`` on ``(-1, 1)``,
  ``r = 1`` is Epanechnikov, ``r = 2`` the quartic kernel;
* ``gaussian()``: the standard normal density, numerically cut at ``|u| = 12``;
* ``onesided(base, side)``: the equivalent kernel of a local-linear estimator
  built from ``2 K(u)`` restricted to the open half-line ``u < 0`` (left) or
  ``u > 0`` (right).

Vectorised evaluation is available through ``Kernel.__call__`` and
``Kernel.deriv``; ``Kernel.scalar`` / ``Kernel.scalar_deriv`` return plain
Python closures, which are much faster inside nested adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import QuadratureError, gauss_legendre, integrate_1d

__all__ = [
    "Kernel",
    "KernelFunctionals",
    "DegenerateKernelError",
    "polynomial",
    "epanechnikov",
    "quartic",
    "gaussian",
    "onesided",
    "onesided_equivalent",
    "eval_kernel",
    "eval_kernel_deriv",
    "functionals",
    "rescale_factor",
    "GAUSS_CUTOFF",
    "CONV_GRID_POINTS",
]

GAUSS_CUTOFF = 12.0
CONV_GRID_POINTS = 4096
_FUNCTIONAL_TOL = 1e-10
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

LEFT = "left"
RIGHT = "right"


class DegenerateKernelError(ValueError):
    """mu_2(K) - mu_1*(K)^2 <= 0: no local-linear equivalent kernel exists."""


@dataclass(frozen=True)
class KernelFunctionals:
    R: float
    mu0: float
    mu1: float
    mu2: float
    mu1_star: float


def _kappa(r: int) -> float:
    # 1 / int_{-1}^{1} (1-u^2)^r du = Gamma(r+3/2) / (sqrt(pi) Gamma(r+1))
    return math.exp(math.lgamma(r + 1.5) - math.lgamma(r + 1.0)) / math.sqrt(math.pi)


def _normalize_side(side: str) -> str:
    s = str(side).lower()
    if s in ("left", "l"):
        return LEFT
    if s in ("right", "r"):
        return RIGHT
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


@dataclass(frozen=True)
class Kernel:
    family: str  # "polynomial" | "gaussian" | "onesided"
    order: Optional[int] = None
    base: Optional["Kernel"] = None
    side: Optional[str] = None

    def __post_init__(self):
        if self.family == "polynomial":
            if not isinstance(self.order, int) or self.order < 1:
                raise ValueError("polynomial kernel needs a positive integer order")
        elif self.family == "onesided":
            if self.base is None or not self.base.symmetric:
                raise ValueError("one-sided kernels need a symmetric base kernel")
            object.__setattr__(self, "side", _normalize_side(self.side))
        elif self.family != "gaussian":
            raise ValueError(f"unknown kernel family {self.family!r}")

    # -- descriptors -------------------------------------------------------
    @property
    def symmetric(self) -> bool:
        return self.family != "onesided"

    @property
    def name(self) -> str:
        if self.family == "polynomial":
            return {1: "epanechnikov", 2: "quartic"}.get(self.order, f"K{2 * self.order}")
        if self.family == "gaussian":
            return "gaussian"
        return f"{self.base.name}_{self.side}"

    def __repr__(self) -> str:
        return f"Kernel({self.name})"

    @property
    def support(self) -> tuple[float, float]:
        """Closed hull of the (numerical) support."""
        if self.family == "polynomial":
            return (-1.0, 1.0)
        if self.family == "gaussian":
            return (-GAUSS_CUTOFF, GAUSS_CUTOFF)
        lo, hi = self.base.support
        return (lo, 0.0) if self.side == LEFT else (0.0, hi)

    @property
    def width(self) -> float:
        lo, hi = self.support
        return hi - lo

    # -- scalar closures ---------------------------------------------------
    @cached_property
    def scalar(self) -> Callable[[float], float]:
        if self.family == "polynomial":
            r, kap = self.order, _kappa(self.order)

            def k(u):
                return kap * (1.0 - u * u) ** r if -1.0 < u < 1.0 else 0.0

            return k
        if self.family == "gaussian":

            def k(u):
                return _INV_SQRT_2PI * math.exp(-0.5 * u * u) if -GAUSS_CUTOFF < u < GAUSS_CUTOFF else 0.0

            return k
        a, b = self._local_linear_coefs()
        kb = self.base.scalar
        if self.side == LEFT:

            def k(u):
                return (a + b * u) * kb(u) if u < 0.0 else 0.0

        else:

            def k(u):
                return (a - b * u) * kb(u) if u > 0.0 else 0.0

        return k

    @cached_property
    def scalar_deriv(self) -> Callable[[float], float]:
        if self.family == "polynomial":
            r, kap = self.order, _kappa(self.order)

            # closed interval: interior one-sided derivative at +-1
            def dk(u):
                return -2.0 * r * kap * u * (1.0 - u * u) ** (r - 1) if -1.0 <= u <= 1.0 else 0.0

            return dk
        if self.family == "gaussian":

            def dk(u):
                return -u * _INV_SQRT_2PI * math.exp(-0.5 * u * u) if -GAUSS_CUTOFF < u < GAUSS_CUTOFF else 0.0

            return dk
        a, b = self._local_linear_coefs()
        kb, dkb = self.base.scalar, self.base.scalar_deriv
        if self.side == LEFT:

            def dk(u):
                return b * kb(u) + (a + b * u) * dkb(u) if u < 0.0 else 0.0

        else:

            def dk(u):
                return -b * kb(u) + (a - b * u) * dkb(u) if u > 0.0 else 0.0

        return dk

    # -- vectorised evaluation ---------------------------------------------
    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "polynomial":
            inside = np.abs(u) < 1.0
            out = np.where(inside, _kappa(self.order) * np.clip(1.0 - u * u, 0.0, None) ** self.order, 0.0)
        elif self.family == "gaussian":
            out = np.where(np.abs(u) < GAUSS_CUTOFF, _INV_SQRT_2PI * np.exp(-0.5 * u * u), 0.0)
        else:
            a, b = self._local_linear_coefs()
            if self.side == LEFT:
                out = np.where(u < 0.0, (a + b * u) * self.base(u), 0.0)
            else:
                out = np.where(u > 0.0, (a - b * u) * self.base(u), 0.0)
        return out if out.ndim else float(out)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "polynomial":
            r = self.order
            inside = np.abs(u) <= 1.0
            out = np.where(inside, -2.0 * r * _kappa(r) * u * np.clip(1.0 - u * u, 0.0, None) ** (r - 1), 0.0)
        elif self.family == "gaussian":
            out = np.where(np.abs(u) < GAUSS_CUTOFF, -u * _INV_SQRT_2PI * np.exp(-0.5 * u * u), 0.0)
        else:
            a, b = self._local_linear_coefs()
            kb, dkb = self.base(u), self.base.deriv(u)
            if self.side == LEFT:
                out = np.where(u < 0.0, b * kb + (a + b * u) * dkb, 0.0)
            else:
                out = np.where(u > 0.0, -b * kb + (a - b * u) * dkb, 0.0)
        return out if out.ndim else float(out)

    # -- functionals -------------------------------------------------------
    def _local_linear_coefs(self) -> tuple[float, float]:
        """(a, b) with K_L(u) = (a + b u) K(u) on u < 0."""
        f = self.base.functionals
        den = f.mu2 - f.mu1_star ** 2
        if not den > 0:
            raise DegenerateKernelError(
                f"mu2 - mu1*^2 = {den:.3g} <= 0 for base kernel {self.base.name}"
            )
        return 2.0 * f.mu2 / den, 2.0 * f.mu1_star / den

    @cached_property
    def functionals(self) -> KernelFunctionals:
        if self.family == "polynomial":
            r = self.order
            kap = _kappa(r)
            return KernelFunctionals(
                R=kap * kap / _kappa(2 * r), mu0=1.0, mu1=0.0, mu2=1.0 / (2 * r + 3), mu1_star=kap / (r + 1)
            )
        if self.family == "gaussian":
            return KernelFunctionals(
                R=1.0 / (2.0 * math.sqrt(math.pi)), mu0=1.0, mu1=0.0, mu2=1.0, mu1_star=2.0 * _INV_SQRT_2PI
            )
        k = self.scalar
        lo, hi = self.support

        def q(g):
            return integrate_1d(g, lo, hi, tol=_FUNCTIONAL_TOL)

        return KernelFunctionals(
            R=q(lambda u: k(u) ** 2),
            mu0=q(k),
            mu1=q(lambda u: u * k(u)),
            mu2=q(lambda u: u * u * k(u)),
            mu1_star=2.0 * integrate_1d(lambda u: u * k(u), max(lo, 0.0), hi, tol=_FUNCTIONAL_TOL),
        )

    # -- autocorrelation -----------------------------------------------------
    @cached_property
    def autocorrelation(self) -> "Autocorrelation":
        """c(s) = int k(t) k(t + s) dt, an even function of s."""
        return Autocorrelation.build(self)


class Autocorrelation:
    """Tabulated kernel autocorrelation with uniform-grid cubic interpolation.

    ``int fhat_h^2 = (n^2 h)^-1 sum_ij c((X_i - X_j) / h)``.  The Gaussian
    kernel uses its closed form; every other kernel is tabulated on
    ``CONV_GRID_POINTS`` nodes of ``[0, width]`` by Gauss-Legendre quadrature,
    which is exact for polynomial kernels.
    """

    def __init__(self, smax: float, coefs: Optional[np.ndarray], closed_form: Optional[Callable] = None):
        self.smax = smax
        self._closed = closed_form
        if coefs is not None:
            # rows are segments (Horner order, highest power first); the
            # trailing zero row absorbs every s >= smax
            self._rows = np.vstack([coefs.T, np.zeros((1, 4))])
            self._step = smax / coefs.shape[1]
            self._last = coefs.shape[1]

    @classmethod
    def build(cls, kernel: Kernel, points: int = CONV_GRID_POINTS, nodes: int = 128) -> "Autocorrelation":
        if kernel.family == "gaussian":
            return cls(2 * GAUSS_CUTOFF, None, lambda s: _INV_SQRT_2PI * np.exp(-0.25 * s * s) / math.sqrt(2.0))
        lo, hi = kernel.support
        smax = hi - lo
        s = np.linspace(0.0, smax, points)
        x, w = gauss_legendre(nodes)
        # t in [lo, hi - s]
        half = 0.5 * (hi - s - lo)
        t = lo + half[:, None] * (x[None, :] + 1.0)
        vals = (kernel(t) * kernel(t + s[:, None])) @ w * half
        vals[-1] = 0.0
        spline = CubicSpline(s, vals)
        return cls(smax, np.ascontiguousarray(spline.c))

    def __call__(self, s):
        return self.eval_nonneg(np.abs(np.asarray(s, dtype=float)))

    def eval_nonneg(self, s: np.ndarray):
        """Evaluate at s >= 0 (no sign handling)."""
        if self._closed is not None:
            return self._closed(s)
        q = s / self._step
        idx = np.minimum(q, self._last).astype(np.intp)
        t = s - idx * self._step
        c = self._rows[idx]
        return ((c[..., 0] * t + c[..., 1]) * t + c[..., 2]) * t + c[..., 3]


# -- constructors ------------------------------------------------------------


@lru_cache(maxsize=None)
def polynomial(r: int) -> Kernel:
    return Kernel("polynomial", order=int(r))


def epanechnikov() -> Kernel:
    return polynomial(1)


def quartic() -> Kernel:
    return polynomial(2)


@lru_cache(maxsize=None)
def gaussian() -> Kernel:
    return Kernel("gaussian")


@lru_cache(maxsize=None)
def onesided(base: Kernel, side: str) -> Kernel:
    k = Kernel("onesided", base=base, side=side)
    k._local_linear_coefs()  # surface DegenerateKernelError at construction
    return k


def onesided_equivalent(base: Kernel, side: str) -> Kernel:
    """Local-linear equivalent kernel of ``2 K 1_{u<0}`` (left) or ``2 K 1_{u>0}`` (right)."""
    return onesided(base, _normalize_side(side))


# -- functional API ----------------------------------------------------------


def eval_kernel(k: Kernel, u):
    return k(u)


def eval_kernel_deriv(k: Kernel, u):
    return k.deriv(u)


def functionals(k: Kernel) -> KernelFunctionals:
    return k.functionals


def rescale_factor(K: Kernel, L: Kernel) -> float:
    """Factor turning a bandwidth for kernel L into one for kernel K.

    ``(R(K) / mu2(K)^2 * mu2(L)^2 / R(L)) ** (1/5)``.
    """
    fk, fl = K.functionals, L.functionals
    if fk.mu2 == 0 or fl.mu2 == 0:
        raise DegenerateKernelError("second moment vanishes")
    return (fk.R / fk.mu2 ** 2 * fl.mu2 ** 2 / fl.R) ** 0.2


def kernel_from_name(name: str) -> Kernel:
    """Parse 'epanechnikov', 'quartic', 'gaussian' or 'K<2r>' / 'poly<r>'."""
    s = name.strip().lower()
    if s in ("epanechnikov", "epan", "k2"):
        return epanechnikov()
    if s in ("quartic", "biweight", "k4"):
        return quartic()
    if s in ("gaussian", "gauss", "normal", "g"):
        return gaussian()
    if s.startswith("poly") and s[4:].isdigit():
        return polynomial(int(s[4:]))
    if s.startswith("k") and s[1:].isdigit() and int(s[1:]) % 2 == 0 and int(s[1:]) > 0:
        return polynomial(int(s[1:]) // 2)
    raise ValueError(f"unknown kernel {name!r}")


__all__ += ["kernel_from_name", "Autocorrelation", "QuadratureError"]
