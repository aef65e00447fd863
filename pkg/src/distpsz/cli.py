"""Command-line entry point.

    distpsz run --config scenario.cfg --out results/
    distpsz preset --name paper --out paper.cfg [--variant centralized]
    distpsz sweep --config paper.cfg --param kappa --values 0.2,0.5,0.8 --out sweep/

Exit status is 0 on success, otherwise the error category code
(2 config, 3 dimension, 4 data, 5 numeric divergence, 6 protocol, 7 I/O).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import _engine
from .errors import OutputError, PszError
from .harness import emit, run, sweep
from .metrics import steady_state
from .scenario import PRESETS, SCENARIO_VARIANTS, format_scenario, load_scenario

log = logging.getLogger("distpsz")


def _load(path):
    try:
        return load_scenario(path)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc


def cmd_run(args) -> int:
    sc = _load(args.config)
    log.info("running %s for %d iterations (%s kernel)", sc.variant, sc.iterations, _engine.BACKEND)
    result = run(sc)
    emit(result, args.out)
    if len(result.curve):
        mse, ac = steady_state(result.curve, args.fraction)
        print(f"steady-state mse_db={mse:.2f} ac_db={ac:.2f}")
    print(f"wrote {args.out}")
    return 0


def cmd_preset(args) -> int:
    sc = PRESETS[args.name](args.variant)
    try:
        with open(args.out, "w") as fh:
            fh.write(format_scenario(sc))
    except OSError as exc:
        raise OutputError(f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    sc = _load(args.config)
    param = args.param
    if args.values:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
    elif param == "kappa" and sc.sweep_kappa:
        values = [repr(v) for v in sc.sweep_kappa]
    else:
        raise OutputError("no sweep values given and none stored in the config")
    rows = sweep(sc, param, values, args.out, jobs=args.jobs, fraction=args.fraction)
    print(f"{param:>10} {'mse_db':>10} {'ac_db':>10}")
    for value, mse, ac in rows:
        print(f"{value:>10} {mse:10.2f} {ac:10.2f}")
    if param == "kappa" and len(rows) > 1:
        ordered = sorted(rows, key=lambda r: float(r[0]))
        mse_ok = all(a[1] > b[1] for a, b in zip(ordered, ordered[1:]))
        ac_ok = all(a[2] > b[2] for a, b in zip(ordered, ordered[1:]))
        print(f"mse decreasing in kappa: {mse_ok}; ac decreasing in kappa: {ac_ok}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distpsz", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--fraction", type=float, default=0.2, help="steady-state tail fraction")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="write a preset scenario config")
    pr.add_argument("--name", required=True, choices=sorted(PRESETS))
    pr.add_argument("--out", required=True)
    pr.add_argument("--variant", default="distributed-efficient", choices=SCENARIO_VARIANTS)
    pr.set_defaults(func=cmd_preset)

    s = sub.add_parser("sweep", help="run a scenario over several values of one key")
    s.add_argument("--config", required=True)
    s.add_argument("--param", default="kappa")
    s.add_argument("--values", default="", help="comma-separated values")
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--fraction", type=float, default=0.2)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PszError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
