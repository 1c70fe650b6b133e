"""Run a simulation config and print every summary table to stdout.

    python scripts/run_tables.py scripts/configs/acceptance.yaml --workers 4
"""

import argparse
import os
import sys

from bwsel.cli import main as cli_main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--out", default="tables_out")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    return p.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    code = cli_main(["run", "--config", args.config, "--out", args.out, "--workers", str(args.workers)])
    for name in sorted(os.listdir(args.out)):
        if name.startswith("summary_"):
            print(f"\n# {name}")
            with open(os.path.join(args.out, name)) as fh:
                sys.stdout.write(fh.read())
    return code


if __name__ == "__main__":
    sys.exit(main())
