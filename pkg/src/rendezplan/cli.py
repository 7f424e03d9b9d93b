"""Command-line front end: seeded mission runs and algorithm comparisons.

Exit codes, in order of detection:

* 3  invalid configuration (bad flags, malformed scenario document)
* 5  unreadable scenario file or map input
* 4  unknown optimization algorithm
* 0  mission reached the rendezvous (all runs, in multi-run mode)
* 2  mission cancelled before departure (initial plan infeasible)
* 1  mission failed in flight

With ``--runs N`` the exit code reports the worst outcome across seeds; a
failure outranks a cancellation.  ``--compare`` sweeps all four algorithms
over the seed range and exits 0 once the sweep and its report complete.

Artifacts are pure functions of (scenario, algorithm, seed): re-running with
the same inputs rewrites byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .errors import ConfigError, MapInputError, RendezplanError
from .mission import OUTCOME_CANCEL, OUTCOME_FAILED, OUTCOME_RENDEZVOUS, run_mission
from .optimizers import ALGORITHMS
from .render import mission_svgs
from .scenarios import PRESET_NAMES, load_preset, load_scenario

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CANCEL = 2
EXIT_CONFIG = 3
EXIT_BAD_ALGO = 4
EXIT_MAP = 5

FORMATS = ("csv", "json", "svg")

log = logging.getLogger("rendezplan.cli")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rendezplan",
        description="Plan and simulate underwater rendezvous missions.",
    )
    p.add_argument(
        "--scenario",
        required=True,
        metavar="PATH",
        help="scenario JSON file, or a bundled preset name "
        f"({', '.join(PRESET_NAMES)})",
    )
    p.add_argument("--algo", metavar="NAME", default=None,
                   help=f"optimizer, one of {', '.join(ALGORITHMS)} "
                   "(default: the scenario's choice)")
    p.add_argument("--seed", type=int, default=None, metavar="N",
                   help="first run seed (default: the scenario's)")
    p.add_argument("--runs", type=int, default=None, metavar="N",
                   help="number of consecutive seeds to run")
    p.add_argument("--compare", action="store_true",
                   help="sweep every algorithm over the seed range and "
                   "report mean/std of the achieved arrival time")
    p.add_argument("--out", metavar="DIR", default=None,
                   help="write artifacts under this directory")
    p.add_argument("--format", dest="formats", default="csv,json,svg",
                   metavar="LIST", help="comma-separated artifact kinds "
                   "(csv, json, svg)")
    return p


def _setup_logging() -> None:
    name = os.environ.get("RP_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _parse_formats(text: str) -> frozenset[str]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    bad = [p for p in parts if p not in FORMATS]
    if bad or not parts:
        raise ConfigError(f"unknown output format(s) {bad or [text]}, "
                          f"expected a subset of {list(FORMATS)}")
    return frozenset(parts)


def _load(ref: str, base: str = "."):
    if not os.path.exists(ref) and ref in PRESET_NAMES:
        return load_preset(ref)
    return load_scenario(ref if os.path.isabs(ref) else os.path.join(base, ref))


def _convergence_csv(mission) -> str:
    lines = ["plan,iteration,best_total,mean_total,collision_violation"]
    for i, plan in enumerate(mission.plans):
        for row in plan.run.history_csv().splitlines()[1:]:
            lines.append(f"{i},{row}")
    return "\n".join(lines) + "\n"


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_artifacts(directory: str, mission, scenario, formats) -> None:
    os.makedirs(directory, exist_ok=True)
    _write(os.path.join(directory, "events.log"), mission.event_log())
    if "json" in formats:
        _write(os.path.join(directory, "summary.json"),
               json.dumps(mission.to_json(), indent=2, sort_keys=True) + "\n")
    if "csv" in formats:
        _write(os.path.join(directory, "flown.csv"), mission.flown_csv())
        _write(os.path.join(directory, "convergence.csv"), _convergence_csv(mission))
    if "svg" in formats:
        for name, svg in mission_svgs(mission, scenario):
            _write(os.path.join(directory, f"{name}.svg"), svg)


def _outcome_line(mission) -> str:
    if mission.outcome == OUTCOME_RENDEZVOUS:
        tail = f"arrived at t={mission.achieved_t_f:.1f} s"
    else:
        tail = mission.reason
    return (f"{mission.scenario} {mission.algorithm} seed {mission.seed}: "
            f"{mission.outcome} ({tail}, {len(mission.plans)} plan(s))")


_BADNESS = {OUTCOME_RENDEZVOUS: 0, OUTCOME_CANCEL: 1, OUTCOME_FAILED: 2}
_EXIT_FOR = {OUTCOME_RENDEZVOUS: EXIT_OK, OUTCOME_CANCEL: EXIT_CANCEL,
             OUTCOME_FAILED: EXIT_FAILED}


def _run_block(scenario, algo, seed0, runs, out_dir, formats, stream):
    """Run consecutive seeds for one algorithm, returning the worst outcome."""
    worst = OUTCOME_RENDEZVOUS
    missions = []
    for k in range(runs):
        seed = seed0 + k
        mission = run_mission(scenario, algo=algo, seed=seed)
        print(_outcome_line(mission), file=stream)
        if out_dir is not None:
            _write_artifacts(os.path.join(out_dir, f"seed_{seed}"),
                             mission, scenario, formats)
        if _BADNESS[mission.outcome] > _BADNESS[worst]:
            worst = mission.outcome
        missions.append(mission)
    return worst, missions


def _compare(scenario, seed0, runs, out_dir, formats, stream) -> int:
    rows = []
    for algo in ALGORITHMS:
        sub = os.path.join(out_dir, algo) if out_dir is not None else None
        _, missions = _run_block(scenario, algo, seed0, runs, sub, formats, stream)
        arrivals = [m.achieved_t_f for m in missions
                    if m.outcome == OUTCOME_RENDEZVOUS]
        mean = float(np.mean(arrivals)) if arrivals else math.nan
        std = float(np.std(arrivals)) if arrivals else math.nan
        rows.append({"algorithm": algo, "runs": runs,
                     "rendezvous": len(arrivals),
                     "mean_t_f": mean, "std_t_f": std})
    print(f"{'algorithm':<10}{'runs':>6}{'rendezvous':>12}"
          f"{'mean_t_f':>12}{'std_t_f':>10}", file=stream)
    for r in rows:
        print(f"{r['algorithm']:<10}{r['runs']:>6}{r['rendezvous']:>12}"
              f"{r['mean_t_f']:>12.1f}{r['std_t_f']:>10.2f}", file=stream)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        lines = ["algorithm,runs,rendezvous,mean_t_f,std_t_f"]
        for r in rows:
            lines.append(f"{r['algorithm']},{r['runs']},{r['rendezvous']},"
                         f"{r['mean_t_f']:.9g},{r['std_t_f']:.9g}")
        _write(os.path.join(out_dir, "comparison.csv"), "\n".join(lines) + "\n")
        _write(os.path.join(out_dir, "comparison.json"),
               json.dumps({"schema": 1, "scenario": scenario.name,
                           "first_seed": seed0, "rows": rows},
                          indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging()
    log.debug("flags: %s", vars(args))
    try:
        formats = _parse_formats(args.formats)
        if args.runs is not None and args.runs < 1:
            raise ConfigError(f"--runs must be at least 1, got {args.runs}")
        scenario = _load(args.scenario)
    except MapInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MAP
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    algo = args.algo if args.algo is not None else scenario.algorithm
    if algo not in ALGORITHMS:
        print(f"error: unknown algorithm '{algo}', expected one of "
              f"{', '.join(ALGORITHMS)}", file=sys.stderr)
        return EXIT_BAD_ALGO

    seed0 = args.seed if args.seed is not None else scenario.default_seed
    runs = args.runs if args.runs is not None else (
        scenario.default_runs if args.compare else 1)
    log.info("scenario %s, algorithm %s, seeds %d..%d",
             scenario.name, algo, seed0, seed0 + runs - 1)

    try:
        if args.compare:
            return _compare(scenario, seed0, runs, args.out, formats, sys.stdout)
        worst, _ = _run_block(scenario, algo, seed0, runs, args.out,
                              formats, sys.stdout)
        return _EXIT_FOR[worst]
    except MapInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MAP
    except RendezplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
