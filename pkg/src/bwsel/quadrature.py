"""Thin wrapper around QUADPACK adaptive Gauss-Kronrod integration."""

from __future__ import annotations

import warnings
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = ["QuadratureError", "integrate_1d", "gauss_legendre"]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    points: Sequence[float] | None = None,
    limit: int = 400,
) -> float:
    """Integrate a scalar function over [a, b] to absolute tolerance ``tol``.

    ``points`` are interior breakpoints (kinks, jumps) handed to QUADPACK.
    Raises QuadratureError when QUADPACK flags non-convergence and the
    returned error estimate is worse than 100 * tol.
    """
    if not b > a:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted({float(p) for p in points if a < p < b}) or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, _info, *msg = integrate.quad(
            f, a, b, epsabs=tol, epsrel=tol, limit=limit, points=pts, full_output=1
        )
    # a trailing message means QUADPACK reported a problem
    if msg and err > 100 * tol:
        raise QuadratureError(f"quad failed on [{a}, {b}]: {msg[0].splitlines()[0]}", err)
    return float(val)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1]."""
    if m not in _GL_CACHE:
        _GL_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GL_CACHE[m]
