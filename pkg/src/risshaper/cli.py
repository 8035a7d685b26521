"""Command-line front end.

Subcommands: ``validate`` a scenario file, ``run`` a campaign figure
(CSV + JSON + PNG outputs), ``threshold`` for the per-position transmit
power calculator.  Exit codes: 0 success, 1 configuration error, 2 runtime
failure.  Diagnostics go to stderr; machine-readable summaries to stdout.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import channel as ch
from . import risdesign as rd
from . import transceiver as tr
from .config import ScenarioConfig, load_scenario, watts_to_dbm
from .errors import InvalidConfigError, RisShaperError
from .experiments import FIGURES, build_scene, run_figure, write_report
from .geometry import solve_geometry
from .segmentation import greedy_segment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risshaper",
                                 description="Multi-panel reflective channel shaping studies")
    sub = ap.add_subparsers(dest="command", required=True)

    val = sub.add_parser("validate", help="check a scenario configuration file")
    val.add_argument("--config", default=None, help="YAML scenario (defaults when omitted)")

    run = sub.add_parser("run", help="run a campaign and write CSV/JSON/PNG outputs")
    run.add_argument("--config", default=None)
    run.add_argument("--figure", required=True, choices=FIGURES)
    run.add_argument("--seed", type=int, default=None, help="override campaign master seed")
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out-dir", default=None)
    run.add_argument("--s", type=int, default=None,
                     help="restrict stream counts to this single value")
    run.add_argument("--strategy", default=None,
                     help="restrict to one strategy (hpg, mpg, rpg, no-ris)")
    run.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    thr = sub.add_parser("threshold", help="transmit-power threshold calculator")
    thr.add_argument("--config", default=None)
    thr.add_argument("--rx", nargs=2, type=float, metavar=("X", "Y"), required=True)
    thr.add_argument("--s", type=int, default=4)
    return ap


def _apply_overrides(scenario: ScenarioConfig, args) -> ScenarioConfig:
    campaign = scenario.campaign
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.s is not None:
        updates["s_values"] = (args.s,)
        updates["heatmap_s"] = (args.s,)
        updates["se_streams"] = args.s
    if args.strategy is not None:
        updates["strategies"] = (args.strategy,)
    if updates:
        campaign = dataclasses.replace(campaign, **updates)
        scenario = dataclasses.replace(scenario, campaign=campaign)
    if args.out_dir is not None:
        scenario = dataclasses.replace(scenario, out_dir=args.out_dir)
    scenario.validate()
    return scenario


def cmd_validate(args) -> int:
    scenario = load_scenario(args.config)
    print(json.dumps({"valid": True, "scenario_hash": scenario.scenario_hash()}))
    return 0


def cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.config), args)
    report = run_figure(scenario, args.figure)
    csv_path, json_path = write_report(report, scenario, scenario.out_dir)
    outputs = {"csv": str(csv_path), "json": str(json_path)}
    if not args.no_plot:
        from .figures import render_figure

        png_path = csv_path.with_suffix(".png")
        render_figure(csv_path, args.figure, png_path)
        outputs["png"] = str(png_path)
    if report.meta.get("excluded_flag"):
        print(f"warning: excluded-trial fraction "
              f"{report.meta['excluded_fraction']:.3f} exceeds 1%", file=sys.stderr)
    print(json.dumps({"figure": args.figure, "rows": len(report.rows),
                      "excluded_trials": report.meta["excluded_trials"],
                      "outputs": outputs}))
    return 0


def cmd_threshold(args) -> int:
    scenario = load_scenario(args.config)
    system = scenario.system
    tx, positions, _, _, panels = build_scene(scenario)
    rx = np.asarray(args.rx, dtype=float)
    cov = scenario.deployment.coverage
    inside = (rx[0] - cov.center_m[0]) ** 2 + (rx[1] - cov.center_m[1]) ** 2 <= cov.radius_m ** 2
    if not inside:
        print("warning: receiver outside the coverage disk; sizing guarantee void",
              file=sys.stderr)
    dep = solve_geometry(tx, positions, rx, system)
    seg = greedy_segment(dep, args.s, system)
    design = rd.design_reflections(dep, panels, seg.selected, "mpg", system)
    gains = ch.cascade_gains(dep, panels, design, system)
    idx = [0] + [k + 1 for k in seg.selected]
    achieved = np.abs(gains[idx])
    e_th = tr.stream_power_threshold(achieved, system.noise_w)
    e_th_max = tr.max_stream_power_threshold(dep, panels, seg.selected, system)
    extras = {
        str(k): tr.extra_stream_threshold_increase(dep, panels, k, system)
        for k in range(len(panels)) if k not in seg.selected
        and k not in seg.excluded_collinear
    }
    out = {
        "rx": [float(rx[0]), float(rx[1])],
        "streams": args.s,
        "selected_panels": list(seg.selected),
        "excluded_collinear": list(seg.excluded_collinear),
        "threshold_w": e_th,
        "threshold_dbm": watts_to_dbm(e_th) if e_th > 0 else None,
        "max_threshold_w": e_th_max,
        "max_threshold_dbm": watts_to_dbm(e_th_max) if e_th_max > 0 else None,
        "best_gains": {str(k): float(ch.max_cascade_gain(dep, panels[k], k, system))
                       for k in seg.selected},
        "extra_stream_increase_w": extras,
    }
    print(json.dumps(out, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "threshold":
            return cmd_threshold(args)
        raise RuntimeError("unreachable")
    except InvalidConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (RisShaperError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
