"""Command line entry point: ``genusflow [global flags] VERB [verb flags]``.

Verbs write their artifacts under ``--out`` and exit with status 0 only when
every verdict they compute passes.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from .config import ExperimentConfig
from .exceptions import GenusFlowError
from . import io


class _Timer:
    def __init__(self):
        self.rows = []

    def __call__(self, name, fn, *a, **kw):
        t = time.perf_counter()
        out = fn(*a, **kw)
        self.rows.append((name, time.perf_counter() - t, 1))
        return out


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_simulate(cfg, args, timer):
    from .grid import grid_for
    from .harness import event_consistency_check, genus_timeline_check, run_flow
    surface = cfg.surface()
    run = cfg.run
    if args.full:
        from dataclasses import replace
        run = replace(run, post_frames=None)
    grid = grid_for(surface, run.h, run.margin)
    rec = timer("run", run_flow, surface, grid, run)
    rec.ledger.to_csv(_out(args, "ledger.csv"))
    rec.ledger.to_json(_out(args, "ledger.json"))
    io.write_frames_csv(rec.archive, _out(args, "frames.csv"))
    io.write_frame_svgs(rec.archive, _out(args, "frames"))
    timeline = genus_timeline_check(rec)
    events_ok = event_consistency_check(rec)
    report = {"classification": rec.classification.to_dict(),
              "events": [{"kind": e.kind, "time": e.time, "location": list(e.location)}
                         for e in rec.events],
              "genus_timeline": {"passed": timeline.passed, "drop_frame": timeline.drop_frame,
                                 "termination_frame": timeline.termination_frame},
              "event_consistency": events_ok}
    io.write_json(report, _out(args, "simulate.json"))
    return {"genus_timeline": timeline.passed, "event_consistency": events_ok}


def cmd_bisect(cfg, args, timer):
    from .harness import RunCache, bisect
    fam = timer("family", cfg.family)
    tol = float(args.tol if args.tol is not None else cfg.section("bisect")["tol"])
    rep = timer("bisect", bisect, fam, tol, cfg.run, RunCache())
    with open(_out(args, "bisect.json"), "w") as fh:
        fh.write(rep.to_json())
    io.write_series_csv({k: [row[k] for row in rep.samples] for k in ("s", "label", "t")},
                        _out(args, "samples.csv"))
    return {"bracket": rep.success, "monotone": rep.diagnostics["labels_monotone"]}


def cmd_shrinker(cfg, args, timer):
    from .shrinker import catalogue, write_catalogue_csv, write_profile_csv
    entries = timer("catalogue", catalogue)
    write_catalogue_csv(entries, _out(args, "catalogue.csv"))
    for e in entries:
        write_profile_csv(e.profile, _out(args, f"profile_{e.name}.csv"))
        io.write_profile_svg(e.profile, _out(args, f"profile_{e.name}.svg"), e.name)
    io.write_json([e.row() for e in entries], _out(args, "catalogue.json"))
    torus = entries[-1]
    return {"closure": all(e.closure_residual < 1e-5 for e in entries),
            "torus_below_two": torus.gaussian_area < 2.0}


def cmd_entropy(cfg, args, timer):
    from .entropy import entropy
    if args.profile:
        from .shrinker import read_profile_csv
        prof = read_profile_csv(args.profile, closed=True, axis_ends=args.axis_ends)
    else:
        from .shrinker import find_torus_shrinker
        prof = find_torus_shrinker().profile
    opts = cfg.section("entropy")
    res = timer("entropy", entropy, prof, grid=opts["grid"], max_iter=opts["max_iter"],
                restarts=opts["restarts"])
    io.write_json(res.to_dict(), _out(args, "entropy.json"))
    return {"at_least_one": res.value >= 1 - 1e-3}


def cmd_validate(cfg, args, timer):
    from .homology import fixture_zoo, save_masks
    from .validation import descent_suite, fixture_suite
    opts = cfg.section("validate")
    fixtures = timer("fixtures", fixture_suite)
    save_masks({k: (m, {"b1": b}) for k, (m, b) in fixture_zoo().items()},
               _out(args, "fixtures.bin"))
    verdicts = {"fixtures": all(f.passed for f in fixtures)}
    report = {"fixtures": [{"name": f.name, "expected": f.expected, "betti1": f.betti1,
                            "dual": list(f.dual)} for f in fixtures]}
    if not args.skip_descent:
        scen = timer("descent", descent_suite, opts["descent_n"], opts["slices"])
        report["descent"] = [{"name": r.name, "ledger": r.ledger, "oracle": r.oracle,
                              "ranks": [list(x) for x in r.ranks], "agree": r.agree} for r in scen]
        verdicts["descent"] = all(r.agree for r in scen)
    io.write_json(report, _out(args, "validate.json"))
    return verdicts


VERBS = {"simulate": cmd_simulate, "bisect": cmd_bisect, "shrinker": cmd_shrinker,
         "entropy": cmd_entropy, "validate": cmd_validate}


def build_parser():
    p = argparse.ArgumentParser(prog="genusflow", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", default="genusflow-out", help="output directory")
    p.add_argument("--seed", type=int, help="seed recorded in reports")
    p.add_argument("--h", type=float, help="override the grid spacing")
    p.add_argument("--n", type=int, help="override the voxel resolution")
    p.add_argument("--workers", type=int, help="worker processes for family sweeps")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="verb", required=True)
    s = sub.add_parser("simulate", help="evolve the config's surface")
    s.add_argument("--full", action="store_true", help="run to extinction or t_max")
    b = sub.add_parser("bisect", help="bracket the critical family parameter")
    b.add_argument("--tol", type=float)
    sub.add_parser("shrinker", help="shrinker catalogue")
    e = sub.add_parser("entropy", help="entropy of a profile CSV")
    e.add_argument("--profile", help="CSV with r,z columns (default: torus shrinker)")
    e.add_argument("--axis-ends", action="store_true", help="profile ends on the axis")
    v = sub.add_parser("validate", help="fixture and descent suites")
    v.add_argument("--skip-descent", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    timer = _Timer()
    try:
        cfg = ExperimentConfig.load(args.config).with_overrides(args.seed, args.h, args.n,
                                                               args.workers)
        verdicts = VERBS[args.verb](cfg, args, timer)
    except GenusFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    io.write_profile_timings(timer.rows, _out(args, "profile.csv"))
    for name, ok in verdicts.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return 0 if all(verdicts.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
