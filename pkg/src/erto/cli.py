"""Command line: ``erto run`` executes a sweep, ``erto verify`` runs the oracles."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import __version__
from .config import load_config
from .errors import ErtoError
from .sim.metrics import to_csv
from .sim.sweep import cell_seed, plan, summarize, summary_csv, sweep

log = logging.getLogger("erto")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="erto", description=__doc__)
    ap.add_argument("--version", action="version", version=f"erto {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured sweep and write CSV + manifest")
    run.add_argument("--config", required=True, help="YAML experiment file")
    run.add_argument("--out", help="output directory (default: output.dir of the config)")
    run.add_argument("--trace", action="store_true", help="write one event trace per run")
    run.add_argument("--seed", type=int, help="override sweep.base_seed")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    ver = sub.add_parser("verify", help="run the built-in oracle suites")
    ver.add_argument("--suite", required=True,
                     choices=["linkmodel", "area", "degree", "energy", "pareto", "all"])
    return ap


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ErtoError("--seed must be >= 0")
        cfg.values["sweep"]["base_seed"] = args.seed
    if args.workers < 1:
        raise ErtoError("--workers must be >= 1")
    out = args.out or cfg["output.dir"]
    trace = args.trace or cfg["output.trace"]
    os.makedirs(out, exist_ok=True)
    cells = cfg.cells()
    reps = cfg["sweep.replications"]
    base = cfg["sweep.base_seed"]
    algorithms = tuple(cfg["sweep.algorithms"])
    t0 = time.time()
    records, traces = sweep(cells, reps, base, algorithms, cfg.settings(), args.workers, trace)
    with open(os.path.join(out, "metrics.csv"), "w", newline="") as fh:
        fh.write(to_csv(records))
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        fh.write(summary_csv(summarize(records)))
    if trace:
        tdir = os.path.join(out, "traces")
        os.makedirs(tdir, exist_ok=True)
        for job, text in zip(plan(cells, algorithms, reps, base), traces):
            with open(os.path.join(tdir, f"{job.scenario_id}-{job.algorithm}.csv"), "w",
                      newline="") as fh:
                fh.write(text)
    manifest = {
        "config_hash": cfg.digest(),
        "base_seed": base,
        "cell_seeds": {f"n{c.n_nodes}-c{c.n_cbr}": [cell_seed(base, i, r) for r in range(reps)]
                       for i, c in enumerate(cells)},
        "tool_version": __version__,
        "config": cfg.values,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("%d runs in %.1f s -> %s", len(records), time.time() - t0, out)
    return 0


def cmd_verify(args) -> int:
    from . import verify

    checks = verify.run(args.suite)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_verify(args)
    except (ErtoError, OSError) as exc:
        print(f"erto: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
