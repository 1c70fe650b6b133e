"""Monte Carlo harness: the six test designs, ISE, the ISE-optimal oracle
bandwidth, a replication driver and the m1-m5 summary measures.

Reported measures follow the usual table units: m1, m2 and m4 (and the
standard error of m1) are multiplied by ``TABLE_UNIT = 100``; m3 and m5 are
ratios and left as they are.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from .density import Sample, kde_evaluate
from .kernels import Kernel, epanechnikov, kernel_from_name
from .selectors import SelectionError, minimize_score, parse_selector, search_interval, select

__all__ = [
    "Component",
    "Design",
    "DESIGNS",
    "get_design",
    "design_density",
    "design_density_d2",
    "design_sample",
    "ise",
    "find_h_ise",
    "ExperimentConfig",
    "SummaryMeasures",
    "ExperimentResult",
    "ExperimentFailure",
    "run_experiment",
    "summarize",
    "TABLE_UNIT",
    "ORACLE",
]

TABLE_UNIT = 100.0
ORACLE = "ISE"
MAX_FAILURE_RATE = 0.02
GAMMA_TAIL = 1e-9
NORMAL_SDS = 6.0


# ---------------------------------------------------------------------------
# designs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Component:
    """Normal(mean, sd) or scaled gamma: X = G / c with G ~ Gamma(shape a, rate b)."""

    kind: str  # "normal" | "gamma"
    p1: float  # mean | shape a
    p2: float  # sd | rate b
    scale: float = 1.0  # c, gamma only

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return stats.norm.pdf(x, self.p1, self.p2)
        c, a, b = self.scale, self.p1, self.p2
        return c * stats.gamma.pdf(c * x, a, scale=1.0 / b)

    def pdf_d2(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            m, s = self.p1, self.p2
            z = (x - m) / s
            return (z * z - 1.0) * stats.norm.pdf(z) / s ** 3
        c, a, b = self.scale, self.p1, self.p2
        y = c * x
        out = np.zeros_like(y)
        pos = y > 0
        yp = y[pos]
        g = stats.gamma.pdf(yp, a, scale=1.0 / b)
        t = (a - 1.0) / yp - b
        out[pos] = c ** 3 * g * (t * t - (a - 1.0) / (yp * yp))
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return stats.norm.cdf(x, self.p1, self.p2)
        return special.gammainc(self.p1, self.p2 * self.scale * np.maximum(x, 0.0))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "normal":
            return rng.normal(self.p1, self.p2, n)
        return rng.gamma(self.p1, 1.0 / self.p2, n) / self.scale

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "normal":
            return (self.p1 - NORMAL_SDS * self.p2, self.p1 + NORMAL_SDS * self.p2)
        hi = stats.gamma.ppf(1.0 - GAMMA_TAIL, self.p1, scale=1.0 / self.p2) / self.scale
        return (0.0, float(hi))


def _gamma(b: float, c: float) -> Component:
    return Component("gamma", b * b, b, c)


@dataclass(frozen=True)
class Design:
    id: int
    components: tuple  # ((weight, Component), ...)

    def __post_init__(self):
        w = sum(wt for wt, _ in self.components)
        if abs(w - 1.0) > 1e-12:
            raise ValueError(f"design weights sum to {w}")

    def density(self, x):
        return sum(w * c.pdf(x) for w, c in self.components)

    def density_d2(self, x):
        return sum(w * c.pdf_d2(x) for w, c in self.components)

    def cdf(self, x):
        return sum(w * c.cdf(x) for w, c in self.components)

    @cached_property
    def support(self) -> tuple[float, float]:
        """Effective support: mean +- 6 sd for normals, [0, 1-1e-9 quantile] for gammas."""
        los, his = zip(*(c.support for _, c in self.components))
        return (min(los), max(his))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        w = np.array([wt for wt, _ in self.components])
        if len(w) == 1:
            return self.components[0][1].draw(rng, n)
        counts = rng.multinomial(n, w)
        x = np.concatenate([c.draw(rng, k) for k, (_, c) in zip(counts, self.components)])
        return x


DESIGNS = {
    1: Design(1, ((1.0, Component("normal", 0.5, 0.2)),)),
    2: Design(2, ((0.5, Component("normal", 0.35, 0.1)), (0.5, Component("normal", 0.65, 0.1)))),
    3: Design(3, tuple((1.0 / 3.0, Component("normal", m, 0.075)) for m in (0.25, 0.5, 0.75))),
    4: Design(4, ((1.0, _gamma(1.5, 5.0)),)),
    5: Design(5, ((0.5, _gamma(1.5, 6.0)), (0.5, _gamma(3.0, 6.0)))),
    6: Design(6, tuple((1.0 / 3.0, _gamma(b, 8.0)) for b in (1.5, 3.0, 6.0))),
}


def get_design(d) -> Design:
    if isinstance(d, Design):
        return d
    try:
        return DESIGNS[int(d)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown design {d!r}; expected 1-6") from None


def design_density(d, x):
    return get_design(d).density(x)


def design_density_d2(d, x):
    return get_design(d).density_d2(x)


def design_sample(d, n: int, rng: np.random.Generator) -> Sample:
    if n < 1:
        raise ValueError("n must be positive")
    return Sample(get_design(d).sample(n, rng))


# ---------------------------------------------------------------------------
# ISE and the oracle
# ---------------------------------------------------------------------------


def ise(s: Sample, h: float, k: Kernel, d, grid_resolution: int = 1024) -> float:
    """Trapezoid ISE on [min(lo, X_min) - 3h, max(hi, X_max) + 3h]."""
    d = get_design(d)
    lo, hi = d.support
    x = s.values
    grid = np.linspace(min(lo, x[0]) - 3 * h, max(hi, x[-1]) + 3 * h, grid_resolution)
    fhat = kde_evaluate(s, h, k, grid).values
    return float(np.trapezoid((fhat - d.density(grid)) ** 2, grid))


def find_h_ise(s: Sample, k: Kernel, d, grid_resolution: int = 1024):
    """Oracle bandwidth minimizing ISE over the selectors' search interval."""
    return minimize_score(lambda h: ise(s, h, k, d, grid_resolution), search_interval(s))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    designs: Sequence[int] = (1,)
    sample_sizes: Sequence[int] = (100,)
    replications: int = 500
    selectors: Sequence[str] = ("cv",)
    seed: int = 0
    grid_resolution: int = 1024
    target: str = "epanechnikov"

    def validate(self) -> None:
        errs = []
        if not self.designs:
            errs.append("designs: must be non-empty")
        for d in self.designs:
            if d not in DESIGNS:
                errs.append(f"designs: {d!r} is not one of 1-6")
        if not self.sample_sizes:
            errs.append("sample_sizes: must be non-empty")
        for n in self.sample_sizes:
            if not isinstance(n, int) or isinstance(n, bool) or n < 10:
                errs.append(f"sample_sizes: {n!r} must be an integer >= 10")
        if not isinstance(self.replications, int) or isinstance(self.replications, bool) or self.replications < 1:
            errs.append(f"replications: {self.replications!r} must be a positive integer")
        if not self.selectors:
            errs.append("selectors: must be non-empty")
        for name in self.selectors:
            try:
                parse_selector(name)
            except (ValueError, TypeError, AttributeError):
                errs.append(f"selectors: unknown selector {name!r}")
        if len(set(self.selectors)) != len(list(self.selectors)):
            errs.append("selectors: duplicates")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2 ** 64:
            errs.append(f"seed: {self.seed!r} must be an integer in [0, 2^64)")
        if not isinstance(self.grid_resolution, int) or self.grid_resolution < 16:
            errs.append(f"grid_resolution: {self.grid_resolution!r} must be an integer >= 16")
        try:
            kernel_from_name(self.target)
        except (ValueError, AttributeError):
            errs.append(f"target: unknown kernel {self.target!r}")
        if errs:
            raise ValueError("; ".join(errs))

    @property
    def kernel(self) -> Kernel:
        return kernel_from_name(self.target)


@dataclass
class SummaryMeasures:
    selector: str
    m1: float
    m2: float
    m3: float
    m4: float
    m5: float
    m1_stderr: float
    failures: int
    boundary_hits: int

    FIELDS = ("selector", "m1", "m2", "m3", "m4", "m5", "m1_stderr", "failures", "boundary_hits")

    def row(self) -> list[str]:
        return [self.selector] + [f"{getattr(self, f):.6g}" for f in self.FIELDS[1:7]] + [str(self.failures), str(self.boundary_hits)]


RAW_FIELDS = ("design", "n", "rep", "selector", "h", "ise", "h_ise", "ise_oracle", "boundary", "failed")


def _rng(seed: int, design: int, n: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, design, n, rep]))


def _replication(args) -> list[tuple]:
    """All selectors and the oracle on one sample; returns raw records."""
    seed, design, n, rep, selectors, grid_resolution, target = args
    k = kernel_from_name(target)
    s = design_sample(design, n, _rng(seed, design, n, rep))
    orc = find_h_ise(s, k, design, grid_resolution)
    h_o, ise_o = orc.h, orc.value
    out = [(design, n, rep, ORACLE, h_o, ise_o, h_o, ise_o, int(orc.at_boundary), 0)]
    cache: dict = {}
    for name in selectors:
        spec = parse_selector(name, k)
        try:
            r = select(s, spec, cache)
        except SelectionError:
            out.append((design, n, rep, spec.label, math.nan, math.nan, h_o, ise_o, 0, 1))
            continue
        out.append((design, n, rep, spec.label, r.h, ise(s, r.h, k, design, grid_resolution), h_o, ise_o, int(bool(r.warnings)), 0))
    return out


def summarize(records: Sequence[tuple], label: str) -> SummaryMeasures:
    """m1-m5 for one selector from raw records of a single (design, n)."""
    rows = [r for r in records if r[3] == label]
    ok = [r for r in rows if not r[9]]
    if not ok:
        nan = math.nan
        return SummaryMeasures(label, nan, nan, nan, nan, nan, nan, len(rows), 0)
    h = np.array([r[4] for r in ok])
    e = np.array([r[5] for r in ok])
    h_o = np.array([r[6] for r in ok])
    e_o = np.array([r[7] for r in ok])
    m2 = float(np.std(e, ddof=1)) if len(ok) > 1 else 0.0
    return SummaryMeasures(
        selector=label,
        m1=TABLE_UNIT * float(e.mean()),
        m2=TABLE_UNIT * m2,
        m3=float(np.quantile(np.abs(e - e_o) / e_o, 0.9)),
        m4=TABLE_UNIT * float(np.mean(h - h_o)),
        m5=float(np.quantile(np.abs(h - h_o) / h_o, 0.9)),
        m1_stderr=TABLE_UNIT * m2 / math.sqrt(len(ok)),
        failures=len(rows) - len(ok),
        boundary_hits=int(sum(r[8] for r in ok)),
    )


class ExperimentFailure(RuntimeError):
    """A selector failed on more than 2% of replications."""

    def __init__(self, message: str, result: "ExperimentResult"):
        super().__init__(message)
        self.result = result


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)  # (design, n) -> [SummaryMeasures]

    def summary(self, design: int, n: int, label: str) -> SummaryMeasures:
        return next(m for m in self.summaries[(design, n)] if m.selector == label)

    def summary_csv(self, design: int, n: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SummaryMeasures.FIELDS)
        for m in self.summaries[(design, n)]:
            w.writerow(m.row())
        return buf.getvalue()

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RAW_FIELDS)
        for r in self.records:
            w.writerow([r[0], r[1], r[2], r[3], repr(float(r[4])), repr(float(r[5])), repr(float(r[6])), repr(float(r[7])), r[8], r[9]])
        return buf.getvalue()

    def failure_rates(self) -> dict:
        out = {}
        for (d, n), rows in self.summaries.items():
            for m in rows:
                out[(d, n, m.selector)] = m.failures / self.config.replications
        return out


def run_experiment(cfg: ExperimentConfig, workers: int = 1, check_failures: bool = True) -> ExperimentResult:
    """Run every (design, n) cell; replication streams come from (seed, design, n, rep)."""
    cfg.validate()
    k = cfg.kernel
    labels = [ORACLE] + [parse_selector(s, k).label for s in cfg.selectors]
    tasks = [
        (cfg.seed, d, n, rep, tuple(cfg.selectors), cfg.grid_resolution, cfg.target)
        for d in cfg.designs
        for n in cfg.sample_sizes
        for rep in range(cfg.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_replication, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        chunks = [_replication(t) for t in tasks]
    res = ExperimentResult(config=cfg, records=[r for c in chunks for r in c])
    for d in cfg.designs:
        for n in cfg.sample_sizes:
            cell = [r for r in res.records if r[0] == d and r[1] == n]
            res.summaries[(d, n)] = [summarize(cell, lab) for lab in labels]
    if check_failures:
        bad = {key: v for key, v in res.failure_rates().items() if v > MAX_FAILURE_RATE}
        if bad:
            msg = ", ".join(f"design {d} n={n} {lab}: {100 * v:.1f}%" for (d, n, lab), v in bad.items())
            raise ExperimentFailure(f"selector failure rate above {100 * MAX_FAILURE_RATE:.0f}%: {msg}", res)
    return res
