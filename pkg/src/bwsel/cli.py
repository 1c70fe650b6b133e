"""Command-line entry points.

    bwsel run --config exp.yaml [--workers N] [--out DIR] [--set key=value ...]
    bwsel constants [--max-order R] [--targets epanechnikov,quartic] [--out DIR]
    bwsel select --data x.txt --selector do [--target K] [--emit-density] [--out DIR]

The output directory defaults to $BWSEL_OUT, then ./bwsel_out.

Experiment configs are JSON or YAML documents::

    schema_version: 1
    designs: [1, 4]
    sample_sizes: [100, 200]
    replications: 500
    selectors: [cv, icv2, icv8, icvG]
    seed: 20240501
    grid_resolution: 1024      # optional
    target: epanechnikov       # optional

``--set replications=50`` overrides a field; the value is parsed as YAML,
so ``--set designs=[1,2]`` works too.  Overrides are validated like the
document itself.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .asymptotics import constant_table
from .density import kde_evaluate, read_sample
from .kernels import kernel_from_name
from .selectors import SelectionError, parse_selector, select
from .simulation import ExperimentConfig, ExperimentFailure, run_experiment

SCHEMA_VERSION = 1
CONFIG_KEYS = {"schema_version", "designs", "sample_sizes", "replications", "selectors", "seed", "grid_resolution", "target"}
REQUIRED_KEYS = {"schema_version", "designs", "sample_sizes", "replications", "selectors", "seed"}
DENSITY_GRID = 512

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_FAILURES = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def default_out() -> Path:
    return Path(os.environ.get("BWSEL_OUT", "bwsel_out"))


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r}: expected key=value")
        try:
            out[key.strip()] = yaml.safe_load(val)
        except yaml.YAMLError as e:
            raise ConfigError(f"{key.strip()}: cannot parse override value: {e}") from None
    return out


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate an experiment config; raises ConfigError with field-level messages."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a key-value document")
    doc.update(overrides or {})
    errs = []
    for k in sorted(REQUIRED_KEYS - doc.keys()):
        errs.append(f"{k}: missing")
    for k in sorted(doc.keys() - CONFIG_KEYS):
        errs.append(f"{k}: unknown field")
    if "schema_version" in doc and doc["schema_version"] != SCHEMA_VERSION:
        errs.append(f"schema_version: expected {SCHEMA_VERSION}, got {doc['schema_version']!r}")
    for k in ("designs", "sample_sizes", "selectors"):
        if k in doc and not isinstance(doc[k], list):
            errs.append(f"{k}: must be a list")
    if errs:
        raise ConfigError("; ".join(errs))
    cfg = ExperimentConfig(
        designs=list(doc["designs"]),
        sample_sizes=list(doc["sample_sizes"]),
        replications=doc["replications"],
        selectors=[str(s) for s in doc["selectors"]],
        seed=doc["seed"],
        grid_resolution=doc.get("grid_resolution", 1024),
        target=str(doc.get("target", "epanechnikov")),
    )
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "designs": list(cfg.designs),
        "sample_sizes": list(cfg.sample_sizes),
        "replications": cfg.replications,
        "selectors": list(cfg.selectors),
        "seed": cfg.seed,
        "grid_resolution": cfg.grid_resolution,
        "target": cfg.target,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _write(out: Path, name: str, text: str, files: dict) -> None:
    (out / name).write_text(text)
    files[name] = hashlib.sha256(text.encode()).hexdigest()


def _manifest(out: Path, command: str, files: dict, **extra) -> None:
    doc = {"tool": "bwsel", "version": __version__, "command": command, **extra, "files": files}
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, parse_overrides(args.set))
    except ConfigError as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out) if args.out else default_out()
    status = EXIT_OK
    try:
        res = run_experiment(cfg, workers=args.workers)
    except ExperimentFailure as e:
        print(f"error: {e}", file=sys.stderr)
        res, status = e.result, EXIT_FAILURES
    out.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    for d in cfg.designs:
        for n in cfg.sample_sizes:
            _write(out, f"summary_design{d}_n{n}.csv", res.summary_csv(d, n), files)
    _write(out, "raw.csv", res.raw_csv(), files)
    if status == EXIT_OK:
        _manifest(out, "run", files, config_hash=config_hash(cfg), seed=cfg.seed, config=str(args.config))
        print(f"wrote {len(files)} files to {out}")
    return status


def constants_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["target", "family", "indirect", "raw_integral", "value", "analytic_value"]
    w.writerow(cols)
    for r in rows:
        w.writerow([r["target"], r["family"], r["indirect"]] + [f"{r[c]:.10g}" for c in cols[3:]])
    return buf.getvalue()


def cmd_constants(args) -> int:
    if args.max_order < 2:
        print("error: --max-order must be >= 2", file=sys.stderr)
        return EXIT_INVALID
    try:
        targets = [kernel_from_name(t) for t in args.targets.split(",")]
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    text = constants_csv(constant_table(args.max_order, targets))
    sys.stdout.write(text)
    out = Path(args.out) if args.out else default_out()
    out.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    _write(out, "constants.csv", text, files)
    _manifest(out, "constants", files, max_order=args.max_order, targets=args.targets)
    return EXIT_OK


def cmd_select(args) -> int:
    try:
        s = read_sample(args.data)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if s.n < 10:
        print(f"error: need at least 10 observations, got {s.n}", file=sys.stderr)
        return EXIT_INVALID
    try:
        target = kernel_from_name(args.target)
        spec = parse_selector(args.selector, target)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    try:
        r = select(s, spec)
    except SelectionError as e:
        print(f"error: selection failed: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(f"selector: {spec.label}")
    print(f"n: {s.n}")
    print(f"h: {r.h!r}")
    print(f"raw_h: {r.raw_h!r}")
    for k, v in r.components.items():
        print(f"component {k}: {v!r}")
    for w in r.warnings:
        print(f"warning: {w}")
    if args.emit_density:
        x = s.values
        grid = np.linspace(x[0] - 3 * r.h, x[-1] + 3 * r.h, DENSITY_GRID)
        est = kde_evaluate(s, r.h, target, grid)
        out = Path(args.out) if args.out else default_out()
        out.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "density"])
        for g, v in zip(est.grid, est.values):
            w.writerow([repr(float(g)), repr(float(v))])
        files: dict = {}
        _write(out, "density.csv", buf.getvalue(), files)
        _manifest(out, "select", files, selector=spec.label, h=r.h, data=str(args.data))
        print(f"density written to {out / 'density.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bwsel", description="Kernel density bandwidth selection toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte Carlo experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (repeatable)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("constants", help="print the asymptotic variance constants as CSV")
    c.add_argument("--max-order", type=int, default=8)
    c.add_argument("--targets", default="epanechnikov,quartic")
    c.add_argument("--out")
    c.set_defaults(func=cmd_constants)

    s = sub.add_parser("select", help="select a bandwidth for a data file")
    s.add_argument("--data", required=True)
    s.add_argument("--selector", required=True)
    s.add_argument("--target", default="epanechnikov")
    s.add_argument("--emit-density", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
