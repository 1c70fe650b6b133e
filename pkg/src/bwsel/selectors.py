"""Bandwidth selectors.

All selectors target the ISE of a kernel density estimator with kernel
``target`` (Epanechnikov by default):

* ``cv``      classical least-squares cross-validation;
* ``icv``     CV with an indirect kernel L, rescaled to the target;
* ``oscv``    one-sided CV (left or right local-linear equivalent kernel);
* ``do``      do-validation, the mean of left and right OSCV bandwidths;
* ``ido``     do-validation carried out with K_2r (or the Gaussian) and rescaled;
* ``pi``      direct plug-in with a normal-reference pilot;
* ``median13`` median of the eight CV-type bandwidths and five copies of ``pi``.

Raw minimizations are memoized per kernel in an optional ``cache`` dict so
that a caller computing many selectors on one sample (the Monte Carlo
driver, ``median13``) never repeats a score minimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .density import CVScore, Sample
from .kernels import Kernel, epanechnikov, gaussian, onesided_equivalent, polynomial, rescale_factor

__all__ = [
    "SelectionError",
    "PluginError",
    "SelectorSpec",
    "SelectionResult",
    "MinimizeResult",
    "minimize_score",
    "search_interval",
    "select",
    "select_cv",
    "select_icv",
    "select_oscv",
    "select_do",
    "select_ido",
    "select_plugin",
    "select_median13",
    "ido_constants",
    "parse_selector",
    "MEDIAN13_COMPONENTS",
    "GRID_POINTS",
    "REL_TOL",
]

GRID_POINTS = 60
REL_TOL = 1e-4
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

Order = Union[int, str]  # positive int or "G"


class SelectionError(RuntimeError):
    """The score could not be minimized (e.g. non-finite everywhere)."""


class PluginError(SelectionError):
    """A plug-in functional estimate came out with the wrong sign."""


# ---------------------------------------------------------------------------
# minimizer
# ---------------------------------------------------------------------------


@dataclass
class MinimizeResult:
    h: float
    value: float
    trace: list
    at_boundary: bool


def _golden(f: Callable[[float], float], a: float, b: float, rtol: float, trace: list) -> tuple[float, float]:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    trace += [(c, fc), (d, fd)]
    while (b - a) > rtol * 0.5 * (a + b):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            trace.append((c, fc))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            trace.append((d, fd))
    return (c, fc) if fc <= fd else (d, fd)


def minimize_score(
    score: Callable[[float], float],
    interval: tuple[float, float],
    points: int = GRID_POINTS,
    rtol: float = REL_TOL,
) -> MinimizeResult:
    """Global minimum of a univariate score over ``interval``.

    A log-spaced grid scan locates the global grid minimum (smallest h wins
    ties); golden-section search then refines inside its bracketing triple.
    ``at_boundary`` is set when the minimizer sits on an interval edge.
    """
    lo, hi = map(float, interval)
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < h_lo < h_hi, got {interval}")
    grid = np.geomspace(lo, hi, points)
    vals = np.array([score(h) for h in grid], dtype=float)
    trace = list(zip(grid.tolist(), vals.tolist()))
    finite = np.isfinite(vals)
    if not finite.any():
        raise SelectionError("score is not finite anywhere on the search grid")
    i = int(np.argmin(np.where(finite, vals, np.inf)))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]

    def f(h):
        v = score(h)
        return v if np.isfinite(v) else np.inf

    h_ref, v_ref = _golden(f, a, b, rtol, trace)
    best_h, best_v = (h_ref, v_ref) if v_ref < vals[i] else (float(grid[i]), float(vals[i]))
    at_boundary = False
    if i == 0 or i == points - 1:
        edge = float(grid[i])
        if abs(best_h - edge) <= rtol * edge or vals[i] <= best_v:
            best_h, best_v, at_boundary = edge, float(vals[i]), True
    return MinimizeResult(h=float(best_h), value=float(best_v), trace=trace, at_boundary=at_boundary)


def search_interval(s: Sample) -> tuple[float, float]:
    """``[0.05, 10] * scale * n^(-1/5)`` with scale = min(sd, IQR/1.349)."""
    sc = s.scale()
    if not sc > 0:
        raise SelectionError("sample has zero spread")
    base = sc * s.n ** -0.2
    return 0.05 * base, 10.0 * base


# ---------------------------------------------------------------------------
# specs and results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectorSpec:
    kind: str  # cv, icv, oscv, do, ido, pi, median13
    target: Kernel = field(default_factory=epanechnikov)
    indirect: Optional[Kernel] = None  # icv
    side: Optional[str] = None  # oscv
    order: Optional[Order] = None  # ido: r or "G"

    @property
    def label(self) -> str:
        if self.kind == "icv":
            ind = self.indirect
            if ind.family == "gaussian":
                return "ICV_G"
            return f"ICV_{ind.order}" if ind.family == "polynomial" else f"ICV_{ind.name}"
        if self.kind == "ido":
            return f"IDO_{self.order}"
        if self.kind == "oscv":
            return f"OSCV_{self.side}"
        return {"cv": "CV", "do": "DO", "pi": "PI", "median13": "median"}[self.kind]


@dataclass
class SelectionResult:
    h: float
    raw_h: float
    score_trace: list
    spec: SelectorSpec
    warnings: list = field(default_factory=list)
    components: dict = field(default_factory=dict)


def _indirect_kernel(order: Order) -> Kernel:
    if isinstance(order, str):
        if order.upper() != "G":
            raise ValueError(f"indirect order must be a positive integer or 'G', got {order!r}")
        return gaussian()
    return polynomial(int(order))


def parse_selector(name: str, target: Optional[Kernel] = None) -> SelectorSpec:
    """'cv', 'icv2', 'icvG', 'oscv_left', 'do', 'ido8', 'idoG', 'pi', 'median13'."""
    t = target or epanechnikov()
    s = name.strip().lower().replace("-", "_")
    if s in ("cv", "do", "pi", "median13"):
        return SelectorSpec(kind=s, target=t)
    if s in ("oscv_left", "oscv_l", "oscvl"):
        return SelectorSpec(kind="oscv", target=t, side="left")
    if s in ("oscv_right", "oscv_r", "oscvr"):
        return SelectorSpec(kind="oscv", target=t, side="right")
    for prefix in ("icv", "ido"):
        if s.startswith(prefix):
            rest = s[len(prefix) :].lstrip("_")
            if rest == "g":
                order: Order = "G"
            elif rest.isdigit() and int(rest) >= 1:
                order = int(rest)
            else:
                break
            if prefix == "icv":
                return SelectorSpec(kind="icv", target=t, indirect=_indirect_kernel(order))
            return SelectorSpec(kind="ido", target=t, order=order)
    raise ValueError(f"unknown selector {name!r}")


# ---------------------------------------------------------------------------
# selectors
# ---------------------------------------------------------------------------


def _check_n(s: Sample):
    if s.n < 10:
        raise SelectionError(f"selectors need n >= 10, got {s.n}")


def _raw_minimize(s: Sample, k: Kernel, cache: Optional[dict], factor: float = 1.0) -> MinimizeResult:
    """Minimize the CV score of kernel k.

    ``factor`` maps a raw bandwidth to the target scale; the search interval
    is divided by it so every selector searches the same target-scale range.
    """
    key = (k, factor)
    if cache is not None and key in cache:
        return cache[key]
    lo, hi = search_interval(s)
    res = minimize_score(CVScore(s, k), (lo / factor, hi / factor))
    if cache is not None:
        cache[key] = res
    return res


def _boundary_warning(res: MinimizeResult, k: Kernel) -> list:
    return [f"score minimizer for {k.name} at search-interval boundary (h={res.h:.6g})"] if res.at_boundary else []


def select_icv(s: Sample, target: Kernel, indirect: Kernel, cache: Optional[dict] = None) -> SelectionResult:
    _check_n(s)
    factor = 1.0 if indirect == target else rescale_factor(target, indirect)
    res = _raw_minimize(s, indirect, cache, factor)
    return SelectionResult(
        h=factor * res.h,
        raw_h=res.h,
        score_trace=res.trace,
        spec=SelectorSpec(kind="icv" if indirect != target else "cv", target=target, indirect=None if indirect == target else indirect),
        warnings=_boundary_warning(res, indirect),
    )


def select_cv(s: Sample, target: Optional[Kernel] = None, cache: Optional[dict] = None) -> SelectionResult:
    target = target or epanechnikov()
    return select_icv(s, target, target, cache)


def select_oscv(s: Sample, target: Optional[Kernel] = None, side: str = "left", cache: Optional[dict] = None) -> SelectionResult:
    """One-sided CV bandwidth ``C * h_side`` with C = rescale_factor(K, K_side)."""
    target = target or epanechnikov()
    _check_n(s)
    ks = onesided_equivalent(target, side)
    c = rescale_factor(target, ks)
    res = _raw_minimize(s, ks, cache, c)
    return SelectionResult(
        h=c * res.h,
        raw_h=res.h,
        score_trace=res.trace,
        spec=SelectorSpec(kind="oscv", target=target, side=ks.side),
        warnings=_boundary_warning(res, ks),
    )


def ido_constants(target: Kernel, order: Order) -> dict:
    """Constants of indirect do-validation with indirect kernel K_2r (or Gaussian).

    ``C_I`` rescales a K_2r bandwidth to the target, ``C_r`` rescales a
    one-sided K_{L,2r} bandwidth to K_2r and ``direct`` is their product.
    """
    ind = _indirect_kernel(order)
    kl = onesided_equivalent(ind, "left")
    c_i = 1.0 if ind == target else rescale_factor(target, ind)
    return {"C_I": c_i, "C_r": rescale_factor(ind, kl), "direct": rescale_factor(target, kl)}


def _do_core(s: Sample, target: Kernel, base: Kernel, cache: Optional[dict]):
    _check_n(s)
    kl, kr = onesided_equivalent(base, "left"), onesided_equivalent(base, "right")
    c = rescale_factor(target, kl)
    res_l = _raw_minimize(s, kl, cache, c)
    res_r = _raw_minimize(s, kr, cache, c)
    warns = _boundary_warning(res_l, kl) + _boundary_warning(res_r, kr)
    return res_l, res_r, warns


def select_do(s: Sample, target: Optional[Kernel] = None, cache: Optional[dict] = None) -> SelectionResult:
    """``h_DO = (h_L,OSCV + h_R,OSCV) / 2``."""
    target = target or epanechnikov()
    res_l, res_r, warns = _do_core(s, target, target, cache)
    c = rescale_factor(target, onesided_equivalent(target, "left"))
    h_l, h_r = c * res_l.h, c * res_r.h
    return SelectionResult(
        h=0.5 * (h_l + h_r),
        raw_h=0.5 * (res_l.h + res_r.h),
        score_trace=res_l.trace + res_r.trace,
        spec=SelectorSpec(kind="do", target=target),
        warnings=warns,
        components={"OSCV_left": h_l, "OSCV_right": h_r},
    )


def select_ido(s: Sample, target: Optional[Kernel] = None, order: Order = 2, cache: Optional[dict] = None) -> SelectionResult:
    """Indirect do-validation ``h = C_I * h_DO,r`` with ``h_DO,r = C_r (h_L + h_R) / 2``.

    The 1/2 keeps ``order=1`` identical to plain do-validation; the direct
    single-constant form is reported in ``components['direct']``.
    """
    target = target or epanechnikov()
    ind = _indirect_kernel(order)
    res_l, res_r, warns = _do_core(s, target, ind, cache)
    const = ido_constants(target, order)
    h_do_r = 0.5 * (const["C_r"] * res_l.h + const["C_r"] * res_r.h)
    h = const["C_I"] * h_do_r
    raw = 0.5 * (res_l.h + res_r.h)
    return SelectionResult(
        h=h,
        raw_h=raw,
        score_trace=res_l.trace + res_r.trace,
        spec=SelectorSpec(kind="ido", target=target, order=order),
        warnings=warns,
        components={"h_L": res_l.h, "h_R": res_r.h, "h_DO_r": h_do_r, "direct": const["direct"] * raw},
    )


# -- plug-in -------------------------------------------------------------------

_PHI0 = 1.0 / math.sqrt(2.0 * math.pi)


def _psi_hat(x: np.ndarray, g: float, order: int) -> float:
    """``n^-2 g^-(order+1) sum_ij phi^(order)((X_i - X_j) / g)`` for order 4 or 6."""
    n = x.size
    iu = np.triu_indices(n, k=1)
    u = ((x[None, :] - x[:, None])[iu]) / g
    u2 = u * u
    phi = _PHI0 * np.exp(-0.5 * u2)
    if order == 4:
        poly, p0 = u2 * u2 - 6.0 * u2 + 3.0, 3.0
    elif order == 6:
        poly, p0 = u2 * u2 * u2 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0, -15.0
    else:
        raise ValueError(order)
    total = 2.0 * float(np.sum(phi * poly)) + n * _PHI0 * p0
    return total / (n * n * g ** (order + 1))


def select_plugin(s: Sample, target: Optional[Kernel] = None, cache: Optional[dict] = None, stages: int = 1) -> SelectionResult:
    """Direct plug-in bandwidth ``h = (R(K) / (mu2(K)^2 psi_4 n))^(1/5)``.

    ``psi_4 = R(f'')`` is estimated by the Gaussian-kernel functional estimator
    at a pilot bandwidth g.  With ``stages=1`` g is the normal-reference rule
    ``(2 / (5 n))^(1/7) sqrt(2) scale``.  With ``stages=2`` a normal-scale psi_8
    gives a pilot for psi_6, whose estimate then sets g (Sheather-Jones style).
    """
    target = target or epanechnikov()
    _check_n(s)
    if stages not in (1, 2):
        raise ValueError(f"stages must be 1 or 2, got {stages}")
    key = ("plugin", target, stages)
    if cache is not None and key in cache:
        return cache[key]
    x, n = s.values, s.n
    sc = s.scale()
    if not sc > 0:
        raise SelectionError("sample has zero spread")
    comps = {}
    if stages == 1:
        g = (2.0 / (5.0 * n)) ** (1.0 / 7.0) * math.sqrt(2.0) * sc
    else:
        psi8 = 105.0 / (32.0 * math.sqrt(math.pi) * sc ** 9)
        g1 = (2.0 * 15.0 * _PHI0 / (psi8 * n)) ** (1.0 / 9.0)
        psi6 = _psi_hat(x, g1, 6)
        if not psi6 < 0:
            raise PluginError(f"psi_6 estimate {psi6:.3g} is not negative")
        g = (-6.0 * _PHI0 / (psi6 * n)) ** (1.0 / 7.0)
        comps.update(g1=g1, psi6=psi6)
    psi4 = _psi_hat(x, g, 4)
    if not psi4 > 0:
        raise PluginError(f"R(f'') estimate {psi4:.3g} is not positive")
    f = target.functionals
    h = (f.R / (f.mu2 ** 2 * psi4 * n)) ** 0.2
    comps.update(g=g, R_f2=psi4)
    out = SelectionResult(h=h, raw_h=h, score_trace=[], spec=SelectorSpec(kind="pi", target=target), components=comps)
    if cache is not None:
        cache[key] = out
    return out


# -- median of 13 ----------------------------------------------------------------

MEDIAN13_COMPONENTS = ("cv", "icv2", "icv8", "icvG", "do", "ido2", "ido8", "idoG")


def median13(cv_values, h_pi: float) -> float:
    """Median of eight CV-type values and five copies of the plug-in value."""
    vals = np.asarray(list(cv_values), dtype=float)
    if vals.size != 8:
        raise ValueError(f"need 8 CV-type bandwidths, got {vals.size}")
    return float(np.median(np.concatenate([vals, np.full(5, float(h_pi))])))


def select_median13(s: Sample, target: Optional[Kernel] = None, cache: Optional[dict] = None) -> SelectionResult:
    target = target or epanechnikov()
    cache = {} if cache is None else cache
    comps, warns = {}, []
    for name in MEDIAN13_COMPONENTS:
        r = select(s, parse_selector(name, target), cache)
        comps[r.spec.label] = r.h
        warns += r.warnings
    pi = select_plugin(s, target, cache)
    comps["PI"] = pi.h
    h = median13([comps[k] for k in comps if k != "PI"], pi.h)
    return SelectionResult(
        h=h, raw_h=h, score_trace=[], spec=SelectorSpec(kind="median13", target=target), warnings=warns, components=comps
    )


def select(s: Sample, spec: SelectorSpec, cache: Optional[dict] = None) -> SelectionResult:
    """Dispatch on ``spec.kind``."""
    k = spec.kind
    if k == "cv":
        return select_cv(s, spec.target, cache)
    if k == "icv":
        return select_icv(s, spec.target, spec.indirect, cache)
    if k == "oscv":
        return select_oscv(s, spec.target, spec.side, cache)
    if k == "do":
        return select_do(s, spec.target, cache)
    if k == "ido":
        return select_ido(s, spec.target, spec.order, cache)
    if k == "pi":
        return select_plugin(s, spec.target, cache)
    if k == "median13":
        return select_median13(s, spec.target, cache)
    raise ValueError(f"unknown selector kind {k!r}")
