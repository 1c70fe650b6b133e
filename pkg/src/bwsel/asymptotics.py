"""Asymptotic-variance constants of CV-type and plug-in bandwidth selectors.

For a selector family the bandwidth-error variance is
``C_{f,K} {4 R(K) V(f'') / (R(f'') R(f)) + c}`` and only ``c`` depends on
the selector.  Here ``c = alpha * I`` with

* ``I = int [H(u) - R(K)/R(L) H_L(u)]^2 du`` for CV/ICV/DO/IDO and
* ``I = int H(u)^2 du`` for the plug-in selector,

where ``H(u) = 4 int K(u-v) [K(v) + v K'(v)] dv`` and ``H_L`` is the
family-specific function (``h_icv_function`` or ``h_do_function``).

Two normalizations of ``alpha`` are provided: ``"calibrated"`` fixes alpha so
that classical CV with the Epanechnikov kernel gives exactly 7.42, and
``"analytic"`` uses alpha = 1/2, the factor left after pulling
``C_{f,K} = R(K)^(-7/5) mu2(K)^(-6/5) R(f'')^(-3/5) R(f) / 25`` out of the
variance expression.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .kernels import GAUSS_CUTOFF, Kernel, epanechnikov, gaussian, onesided_equivalent, polynomial, rescale_factor
from .quadrature import integrate_1d

__all__ = [
    "CV_ANCHOR",
    "ANALYTIC_ALPHA",
    "FAMILIES",
    "VarianceConstant",
    "HFunctionTable",
    "d_factor",
    "h_function",
    "h_icv_function",
    "h_do_function",
    "h_ido_function",
    "h_table",
    "variance_integral",
    "variance_constant",
    "calibrated_alpha",
    "constant_table",
]

CV_ANCHOR = 7.42
ANALYTIC_ALPHA = 0.5
FAMILIES = ("CV", "ICV", "DO", "IDO", "PI")
INNER_TOL = 1e-10
OUTER_TOL = 1e-9

Indirect = Union[None, int, str, Kernel]


def _reach(k: Kernel) -> float:
    lo, hi = k.support
    return max(hi, -lo)


def d_factor(target: Kernel, L: Kernel) -> float:
    """Argument scaling ``(R(K)/R(L) mu2(L)^2/mu2(K)^2)^(-1/5)``."""
    return 1.0 / rescale_factor(target, L)


def _conv_minus(K: Kernel, u: float) -> float:
    """``int K(u - v) [K(v) + v K'(v)] dv`` for symmetric K."""
    k, dk = K.scalar, K.scalar_deriv
    lo, hi = K.support
    a, b = max(lo, u - hi), min(hi, u - lo)
    if not b > a:
        return 0.0
    pts = [0.0, u] if K.family == "gaussian" else [0.0]
    return integrate_1d(lambda v: k(u - v) * (k(v) + v * dk(v)), a, b, tol=INNER_TOL, points=pts)


def _conv_plus(KL: Kernel, u: float) -> float:
    """``int K_L(u + v) [K_L(v) + v K_L'(v)] dv`` for a one-sided kernel."""
    k, dk = KL.scalar, KL.scalar_deriv
    lo, hi = KL.support
    a, b = max(lo, lo - u), min(hi, hi - u)
    if not b > a:
        return 0.0
    return integrate_1d(lambda v: k(u + v) * (k(v) + v * dk(v)), a, b, tol=INNER_TOL)


def h_function(K: Kernel, u: float) -> float:
    """``H(u) = 4 int K(u-v) [K(v) + v K'(v)] dv``."""
    if not K.symmetric:
        raise ValueError("H is defined for symmetric kernels")
    return 4.0 * _conv_minus(K, float(u))


def h_icv_function(L: Kernel, w: float, target: Optional[Kernel] = None) -> float:
    """``H_ICV,L`` at its own argument w (the defining display is at ``d_L u``)."""
    target = target or epanechnikov()
    if not L.symmetric:
        raise ValueError("indirect CV kernels must be symmetric")
    u = float(w) / d_factor(target, L)
    return 4.0 * _conv_minus(L, u) - 4.0 * (L.scalar(u) + u * L.scalar_deriv(u))


def h_do_function(KL: Kernel, w: float, target: Optional[Kernel] = None) -> float:
    """``H*`` for do-validation with one-sided kernel ``KL``, at its own argument w."""
    target = target or epanechnikov()
    if KL.symmetric:
        raise ValueError("h_do_function needs a one-sided kernel")
    u = float(w) / d_factor(target, KL)
    k, dk = KL.scalar, KL.scalar_deriv
    return (
        2.0 * _conv_plus(KL, u)
        + 2.0 * _conv_plus(KL, -u)
        - 2.0 * (k(u) + u * dk(u) + k(-u) - u * dk(-u))
    )


def h_ido_function(KL2r: Kernel, w: float, target: Optional[Kernel] = None) -> float:
    """``H_IDO,r``: same construction as ``H*`` with ``K_{L,2r}`` in place of ``K_L``."""
    return h_do_function(KL2r, w, target)


@dataclass(frozen=True)
class HFunctionTable:
    kind: str
    grid: np.ndarray
    values: np.ndarray
    d_factor: float


def h_table(kind: str, kernel: Kernel, grid, target: Optional[Kernel] = None) -> HFunctionTable:
    """Tabulate ``H`` / ``H_ICV`` / ``H_star_DO`` / ``H_IDO`` on a grid."""
    target = target or epanechnikov()
    grid = np.asarray(grid, dtype=float)
    if kind == "H":
        vals, d = [h_function(kernel, w) for w in grid], 1.0
    elif kind == "H_ICV":
        vals, d = [h_icv_function(kernel, w, target) for w in grid], d_factor(target, kernel)
    elif kind in ("H_star_DO", "H_IDO"):
        vals, d = [h_do_function(kernel, w, target) for w in grid], d_factor(target, kernel)
    else:
        raise ValueError(f"unknown H-function kind {kind!r}")
    return HFunctionTable(kind=kind, grid=grid, values=np.asarray(vals), d_factor=d)


# ---------------------------------------------------------------------------


def _indirect_kernel(indirect: Indirect) -> Optional[Kernel]:
    if indirect is None or isinstance(indirect, Kernel):
        return indirect
    if isinstance(indirect, str):
        if indirect.upper() == "G":
            return gaussian()
        indirect = int(indirect)
    return polynomial(int(indirect))


def _family_setup(family: str, target: Kernel, indirect: Indirect):
    """Return (ratio, H_family callable, kernel L, outer half-width, breakpoints)."""
    ind = _indirect_kernel(indirect)
    fam = family.upper()
    if fam == "CV":
        L = target
        fn, support = (lambda w: h_icv_function(L, w, target)), 2.0 * _reach(L)
    elif fam == "ICV":
        if ind is None:
            raise ValueError("ICV needs an indirect kernel")
        L = ind
        fn, support = (lambda w: h_icv_function(L, w, target)), 2.0 * _reach(L)
    elif fam in ("DO", "IDO"):
        base = target if (fam == "DO" or ind is None) else ind
        L = onesided_equivalent(base, "left")
        fn, support = (lambda w: h_do_function(L, w, target)), L.width
    else:
        raise ValueError(f"unknown family {family!r}")
    d = d_factor(target, L)
    if L.family == "gaussian" or (not L.symmetric and L.base.family == "gaussian"):
        support = min(support, GAUSS_CUTOFF)
    ratio = target.functionals.R / L.functionals.R
    half = support * d
    pts = [0.0, d, -d, 2 * d, -2 * d]
    return ratio, fn, half, pts


@lru_cache(maxsize=None)
def _variance_integral(family: str, target: Kernel, ind: Optional[Kernel]) -> float:
    hk = lambda u: h_function(target, u)  # noqa: E731
    k_half = min(2.0 * _reach(target), GAUSS_CUTOFF)
    k_pts = [0.0, 1.0, -1.0, 2.0, -2.0]
    if family == "PI":
        return integrate_1d(lambda u: hk(u) ** 2, -k_half, k_half, tol=OUTER_TOL, points=k_pts)
    ratio, fn, half, pts = _family_setup(family, target, ind)
    lim = max(half, k_half)
    return integrate_1d(lambda u: (hk(u) - ratio * fn(u)) ** 2, -lim, lim, tol=OUTER_TOL, points=k_pts + pts)


def variance_integral(family: str, target: Optional[Kernel] = None, indirect: Indirect = None) -> float:
    """Raw integral I (before normalization) for a selector family."""
    target = target or epanechnikov()
    fam = family.upper()
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    ind = _indirect_kernel(indirect)
    if fam == "ICV" and ind == target:
        fam, ind = "CV", None
    if fam == "IDO" and ind == target:
        fam, ind = "DO", None
    if fam in ("CV", "DO", "PI"):
        ind = None
    return _variance_integral(fam, target, ind)


def calibrated_alpha() -> float:
    """alpha such that Epanechnikov CV maps to exactly 7.42."""
    return CV_ANCHOR / variance_integral("CV", epanechnikov())


def _alpha(normalization: Union[str, float]) -> float:
    if isinstance(normalization, (int, float)):
        return float(normalization)
    if normalization == "calibrated":
        return calibrated_alpha()
    if normalization == "analytic":
        return ANALYTIC_ALPHA
    raise ValueError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class VarianceConstant:
    selector_family: str
    indirect_descriptor: Optional[str]
    target: str
    integral: float
    value: float
    normalization: float


def _describe(indirect: Indirect) -> Optional[str]:
    k = _indirect_kernel(indirect)
    if k is None:
        return None
    if k.family == "gaussian":
        return "G"
    return str(k.order) if k.family == "polynomial" else k.name


def variance_constant(
    family: str,
    target: Optional[Kernel] = None,
    indirect: Indirect = None,
    normalization: Union[str, float] = "calibrated",
) -> VarianceConstant:
    target = target or epanechnikov()
    alpha = _alpha(normalization)
    i = variance_integral(family, target, indirect)
    return VarianceConstant(
        selector_family=family.upper(),
        indirect_descriptor=_describe(indirect),
        target=target.name,
        integral=i,
        value=alpha * i,
        normalization=alpha,
    )


def constant_table(max_order: int = 8, targets=None) -> list[dict]:
    """Rows for the CLI: CV, ICV_r (r = 2..max_order), ICV_G, DO, IDO_r, IDO_G, PI per target."""
    targets = targets or [epanechnikov()]
    alpha_c = calibrated_alpha()
    rows = []
    for t in targets:
        entries = [("CV", None)]
        entries += [("ICV", r) for r in range(2, max_order + 1)] + [("ICV", "G")]
        entries += [("DO", None)]
        entries += [("IDO", r) for r in range(2, max_order + 1)] + [("IDO", "G")]
        entries += [("PI", None)]
        for fam, ind in entries:
            i = variance_integral(fam, t, ind)
            rows.append(
                {
                    "target": t.name,
                    "family": fam,
                    "indirect": _describe(ind) or "",
                    "raw_integral": i,
                    "value": alpha_c * i,
                    "analytic_value": ANALYTIC_ALPHA * i,
                }
            )
    return rows
