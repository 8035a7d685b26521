"""Monte Carlo campaigns over the reference scenario.

Every trial derives its generator from (master seed, trial key) alone, so
results are bit-identical for any worker count and execution order.  Each
figure's campaign emits one CSV (documented schema, 17-significant-digit
floats) plus a JSON summary carrying the scenario hash, assumptions, and
excluded-trial accounting.

Strategy semantics per figure follow the reference evaluation:

* rank/erank statistics for the undesigned case use the fully uncontrolled
  surface state (every panel active, random column phases) since no
  customization is possible there;
* conditioning, heatmap, and rate statistics use the stream-count-customized
  channel for every strategy: the selected panels are driven (gain-matched,
  gain-maximized, or left in the reset state) and the rest are off.
"""
from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import channel as ch
from . import risdesign as rd
from . import transceiver as tr
from .config import ScenarioConfig, SystemConfig, dbm_to_watts
from .errors import CoverageViolationError, InfeasibleStreamCountError, RisShaperError
from .geometry import sample_rx, solve_geometry
from .metrics import spectrum, truncated_condition
from .segmentation import SegmentationResult, greedy_segment

FIGURES = ("erank-cdf", "tcn-cdf", "heatmap", "se-power", "se-rician")

CSV_COLUMNS = {
    "erank-cdf": ("strategy", "s", "metric", "value", "cdf"),
    "tcn-cdf": ("strategy", "s", "value", "cdf"),
    "heatmap": ("strategy", "s", "x_m", "y_m", "t_s"),
    "se-power": ("strategy", "scheme", "allocation", "power_dbm",
                 "mean_se", "median_se", "ci95", "trials"),
    "se-rician": ("strategy", "scheme", "rician_db", "power_dbm",
                  "mean_se", "median_se", "ci95", "trials"),
}


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent, order-insensitive generator for one trial."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


@lru_cache(maxsize=8)
def build_scene(scenario: ScenarioConfig):
    """Panel placement and sizing shared by every trial of a campaign."""
    positions, offsets, counts, panels = rd.plan_panels(scenario.system, scenario.deployment)
    tx = np.asarray(scenario.deployment.tx_position_m, dtype=float)
    return tx, positions, offsets, counts, panels


@dataclass(frozen=True)
class CampaignReport:
    figure: str
    rows: list[dict]
    meta: dict

    def to_csv(self, path: str | Path) -> None:
        cols = CSV_COLUMNS[self.figure]
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in cols))
        Path(path).write_text("\n".join(lines) + "\n")

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    if math.isnan(f):
        return "nan"
    return format(f, ".17g")


def _cdf_rows(values: list[float]) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF on the unique sample values."""
    arr = np.asarray(values, dtype=float)
    uniq, counts = np.unique(arr, return_counts=True)
    cum = np.cumsum(counts) / arr.size
    return list(zip(uniq.tolist(), cum.tolist()))


def _design_strategies(scenario: ScenarioConfig):
    return tuple(s for s in scenario.campaign.strategies if s != "no-ris")


def _trial_geometry(scenario: ScenarioConfig, rng: np.random.Generator, s_max: int):
    tx, positions, _, _, panels = build_scene(scenario)
    rx = sample_rx(scenario.deployment.coverage, rng)
    dep = solve_geometry(tx, positions, rx, scenario.system)
    seg = greedy_segment(dep, s_max, scenario.system)
    return dep, seg, panels


def _segmented_channel(dep, panels, seg_prefix, design, system: SystemConfig):
    """Line-of-sight composite restricted to the direct link + active panels."""
    gains = ch.cascade_gains(dep, panels, design, system)
    idx = [0] + [k + 1 for k in seg_prefix]
    a_r = ch.steering_matrix(system.n_rx, dep.rx_arrive_step[idx])
    a_t = ch.steering_matrix(system.n_tx, dep.tx_depart_step[idx])
    h = (a_r * gains[idx]) @ a_t.conj().T
    return h, gains


# --- CDF campaigns ---------------------------------------------------------

def _cdf_trial(args):
    scenario, trial, want_tcn = args
    system = scenario.system
    rng = substream(scenario.campaign.master_seed, trial, 0)
    s_values = sorted(scenario.campaign.s_values)
    s_max = max(s_values)
    try:
        dep, seg, panels = _trial_geometry(scenario, rng, s_max)
    except (InfeasibleStreamCountError, CoverageViolationError) as exc:
        return {"excluded": str(exc)}
    out = {"excluded": None, "rows": []}
    for strategy in _design_strategies(scenario):
        if strategy == "rpg" and not want_tcn:
            scatter_rng = substream(scenario.campaign.master_seed, trial, 1)
            design = rd.design_reflections(dep, panels, (), "rpg", system,
                                           rng=scatter_rng, rpg_scatter=True)
            h = ch.compose(ch.draw_realization(dep, panels, system), design)
            rep = spectrum(h)
            out["rows"].append(("rpg", 0, rep.rank, rep.erank, None))
            continue
        try:
            design = rd.design_reflections(dep, panels, seg.selected, strategy, system)
        except CoverageViolationError as exc:
            return {"excluded": str(exc)}
        for s in s_values:
            prefix = seg.selected[: s - 1]
            h, _ = _segmented_channel(dep, panels, prefix, design, system)
            rep = spectrum(h)
            t_s = rep.truncated(s)
            out["rows"].append((strategy, s, rep.rank, rep.erank, t_s))
    return out


def run_cdf_campaign(scenario: ScenarioConfig, figure: str = "erank-cdf") -> CampaignReport:
    """Rank/effective-rank CDFs or conditioning CDFs over random receivers."""
    want_tcn = figure == "tcn-cdf"
    results = _map_trials(_cdf_trial, scenario,
                          [(scenario, t, want_tcn) for t in range(scenario.campaign.trials)])
    samples: dict[tuple, list] = {}
    excluded = 0
    for res in results:
        if res["excluded"] is not None:
            excluded += 1
            continue
        for strategy, s, rank, erank, t_s in res["rows"]:
            if want_tcn:
                if t_s is not None:
                    samples.setdefault((strategy, s), []).append(t_s)
            else:
                samples.setdefault((strategy, s, "rank"), []).append(float(rank))
                samples.setdefault((strategy, s, "erank"), []).append(erank)
    rows = []
    for key in sorted(samples, key=lambda k: (k[0], k[1:])):
        for value, prob in _cdf_rows(samples[key]):
            if want_tcn:
                rows.append({"strategy": key[0], "s": key[1], "value": value, "cdf": prob})
            else:
                rows.append({"strategy": key[0], "s": key[1], "metric": key[2],
                             "value": value, "cdf": prob})
    meta = _base_meta(scenario, figure, excluded)
    return CampaignReport(figure=figure, rows=rows, meta=meta)


# --- heatmap campaign -------------------------------------------------------

def _heatmap_point(args):
    scenario, xy = args
    system = scenario.system
    tx, positions, _, _, panels = build_scene(scenario)
    s_values = sorted(scenario.campaign.heatmap_s)
    try:
        dep = solve_geometry(tx, np.asarray(positions), np.asarray(xy), system)
        seg = greedy_segment(dep, max(s_values), system)
    except (InfeasibleStreamCountError, RisShaperError) as exc:
        return {"excluded": str(exc)}
    out = {"excluded": None, "rows": []}
    for strategy in _design_strategies(scenario):
        try:
            design = rd.design_reflections(dep, panels, seg.selected, strategy, system)
        except CoverageViolationError:
            for s in s_values:
                out["rows"].append((strategy, s, math.nan))
            continue
        for s in s_values:
            prefix = seg.selected[: s - 1]
            h, _ = _segmented_channel(dep, panels, prefix, design, system)
            out["rows"].append((strategy, s, truncated_condition(
                np.linalg.svd(h, compute_uv=False), s)))
    return out


def run_heatmap_campaign(scenario: ScenarioConfig) -> CampaignReport:
    """Deterministic conditioning map over a grid masked to the coverage disk."""
    cov = scenario.deployment.coverage
    n = scenario.campaign.heatmap_grid
    cx, cy = cov.center_m
    axis_x = np.linspace(cx - cov.radius_m, cx + cov.radius_m, n)
    axis_y = np.linspace(cy - cov.radius_m, cy + cov.radius_m, n)
    points = [(x, y) for x in axis_x for y in axis_y
              if (x - cx) ** 2 + (y - cy) ** 2 <= cov.radius_m ** 2 + 1e-9]
    results = _map_trials(_heatmap_point, scenario, [(scenario, p) for p in points])
    rows = []
    excluded = 0
    by_key: dict[tuple, list] = {}
    for point, res in zip(points, results):
        if res["excluded"] is not None:
            excluded += 1
            continue
        for strategy, s, t_s in res["rows"]:
            by_key.setdefault((strategy, s), []).append((point[0], point[1], t_s))
    for (strategy, s) in sorted(by_key):
        for x, y, t_s in by_key[(strategy, s)]:
            rows.append({"strategy": strategy, "s": s, "x_m": x, "y_m": y, "t_s": t_s})
    meta = _base_meta(scenario, "heatmap", excluded, total=len(points))
    meta["grid_points_in_disk"] = len(points)
    return CampaignReport(figure="heatmap", rows=rows, meta=meta)


# --- spectral-efficiency campaigns ------------------------------------------

def _se_schemes(scenario, dep, seg, panels, design, h, powers_w):
    """Rate of every (scheme, allocation, power) cell for one strategy."""
    system = scenario.system
    s = scenario.campaign.se_streams
    gains = ch.cascade_gains(dep, panels, design, system)
    cells = {}
    for alloc in ("equal", "waterfill"):
        for i, e_w in enumerate(powers_w):
            bf = tr.cc_hybrid_beamformers(dep, seg, gains, e_w, s, system, allocation=alloc)
            cells[("cc-hybrid", alloc, i)] = tr.solution_rate(h, bf, system.noise_w)
    for truncated, scheme in ((False, "svd"), (True, "truncated-svd")):
        for i, e_w in enumerate(powers_w):
            try:
                bf = tr.svd_beamformers(h, e_w, s, system.noise_w, truncated=truncated)
            except InfeasibleStreamCountError:
                cells[(scheme, "waterfill", i)] = math.nan
                continue
            cells[(scheme, "waterfill", i)] = tr.solution_rate(h, bf, system.noise_w)
    return cells


def _se_trial(args):
    scenario, trial = args
    system = scenario.system
    campaign = scenario.campaign
    rng = substream(campaign.master_seed, trial, 0)
    s = campaign.se_streams
    try:
        dep, seg, panels = _trial_geometry(scenario, rng, s)
    except (InfeasibleStreamCountError, CoverageViolationError) as exc:
        return {"excluded": str(exc)}
    powers_w = [dbm_to_watts(p) for p in campaign.power_dbm]
    out = {"excluded": None, "cells": {}}
    seg_s = SegmentationResult(selected=seg.selected[: s - 1],
                               excluded_collinear=seg.excluded_collinear,
                               objective=seg.objective, op_count=seg.op_count)
    for strategy in _design_strategies(scenario):
        try:
            design = rd.design_reflections(dep, panels, seg_s.selected, strategy, system)
        except CoverageViolationError as exc:
            return {"excluded": str(exc)}
        h, _ = _segmented_channel(dep, panels, seg_s.selected, design, system)
        for key, val in _se_schemes(scenario, dep, seg_s, panels, design, h, powers_w).items():
            out["cells"][(strategy,) + key] = val
    if "no-ris" in campaign.strategies:
        idx = [0]
        a_r = ch.steering_matrix(system.n_rx, dep.rx_arrive_step[idx])
        a_t = ch.steering_matrix(system.n_tx, dep.tx_depart_step[idx])
        h_d = (a_r * ch.direct_gain(dep, system)) @ a_t.conj().T
        for i, e_w in enumerate(powers_w):
            bf = tr.svd_beamformers(h_d, e_w, 1, system.noise_w)
            out["cells"][("no-ris", "svd", "waterfill", i)] = tr.solution_rate(
                h_d, bf, system.noise_w)
    return out


def _rician_trial(args):
    scenario, trial, kappa_idx = args
    campaign = scenario.campaign
    kappa_db = campaign.rician_sweep_db[kappa_idx]
    system = dataclasses.replace(scenario.system, rician_db=kappa_db)
    rng = substream(campaign.master_seed, 2, kappa_idx, trial)
    s = campaign.se_streams
    try:
        tx, positions, _, _, panels = build_scene(scenario)
        rx = sample_rx(scenario.deployment.coverage, rng)
        dep = solve_geometry(tx, positions, rx, system)
        seg = greedy_segment(dep, s, system)
    except (InfeasibleStreamCountError, CoverageViolationError) as exc:
        return {"excluded": str(exc)}
    realization = ch.draw_realization(dep, panels, system, rng=rng)
    e_w = dbm_to_watts(campaign.se_power_dbm)
    out = {"excluded": None, "cells": {}}
    for strategy in _design_strategies(scenario):
        try:
            design = rd.design_reflections(dep, panels, seg.selected, strategy, system)
        except CoverageViolationError as exc:
            return {"excluded": str(exc)}
        h = ch.compose(realization, design)
        gains = ch.cascade_gains(dep, panels, design, system)
        bf = tr.cc_hybrid_beamformers(dep, seg, gains, e_w, s, system)
        out["cells"][(strategy, "cc-hybrid")] = tr.solution_rate(h, bf, system.noise_w)
        for truncated, scheme in ((False, "svd"), (True, "truncated-svd")):
            try:
                bf = tr.svd_beamformers(h, e_w, s, system.noise_w, truncated=truncated)
                out["cells"][(strategy, scheme)] = tr.solution_rate(h, bf, system.noise_w)
            except InfeasibleStreamCountError:
                out["cells"][(strategy, scheme)] = math.nan
    if "no-ris" in campaign.strategies:
        off = rd.RisDesign(strategy="off", bits=system.bits, active_set=(),
                           panels=[rd.design_off(p) for p in panels])
        h_d = ch.compose(realization, off)
        bf = tr.svd_beamformers(h_d, e_w, s, system.noise_w)
        out["cells"][("no-ris", "svd")] = tr.solution_rate(h_d, bf, system.noise_w)
    return out


def _aggregate_cells(results, make_row):
    """Mean/median/CI aggregation of per-trial cell dicts, in trial order."""
    samples: dict[tuple, list] = {}
    excluded = 0
    for res in results:
        if res["excluded"] is not None:
            excluded += 1
            continue
        for key, val in res["cells"].items():
            samples.setdefault(key, []).append(val)
    rows = []
    for key in sorted(samples):
        vals = np.asarray(samples[key], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            continue
        rows.append(make_row(key, vals))
    return rows, excluded


def run_se_campaign(scenario: ScenarioConfig, figure: str = "se-power") -> CampaignReport:
    """Average-rate sweeps: over transmit power (LoS) or Rician factor."""
    campaign = scenario.campaign
    if figure == "se-power":
        results = _map_trials(_se_trial, scenario,
                              [(scenario, t) for t in range(campaign.trials)])

        def row(key, vals):
            strategy, scheme, alloc, p_idx = key
            return {"strategy": strategy, "scheme": scheme, "allocation": alloc,
                    "power_dbm": campaign.power_dbm[p_idx],
                    "mean_se": float(vals.mean()), "median_se": float(np.median(vals)),
                    "ci95": float(1.96 * vals.std(ddof=1) / math.sqrt(vals.size))
                    if vals.size > 1 else 0.0,
                    "trials": int(vals.size)}

        rows, excluded = _aggregate_cells(results, row)
    elif figure == "se-rician":
        args = [(scenario, t, ki)
                for ki in range(len(campaign.rician_sweep_db))
                for t in range(campaign.trials)]
        results = _map_trials(_rician_trial, scenario, args)
        by_kappa: dict[tuple, list] = {}
        excluded = 0
        for (_, _, ki), res in zip(args, results):
            if res["excluded"] is not None:
                excluded += 1
                continue
            for key, val in res["cells"].items():
                by_kappa.setdefault(key + (ki,), []).append(val)
        rows = []
        for key in sorted(by_kappa):
            strategy, scheme, ki = key
            vals = np.asarray(by_kappa[key], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                continue
            rows.append({"strategy": strategy, "scheme": scheme,
                         "rician_db": campaign.rician_sweep_db[ki],
                         "power_dbm": campaign.se_power_dbm,
                         "mean_se": float(vals.mean()),
                         "median_se": float(np.median(vals)),
                         "ci95": float(1.96 * vals.std(ddof=1) / math.sqrt(vals.size))
                         if vals.size > 1 else 0.0,
                         "trials": int(vals.size)})
    else:
        raise ValueError(f"unknown rate figure '{figure}'")
    total = campaign.trials if figure == "se-power" else campaign.trials * len(campaign.rician_sweep_db)
    meta = _base_meta(scenario, figure, excluded, total=total)
    meta["assumptions"] = {
        "power_axis_dbm": list(campaign.power_dbm),
        "rician_sweep_db": list(campaign.rician_sweep_db),
        "se_power_dbm": campaign.se_power_dbm,
        "note": "sweep axes are configuration defaults, not published values",
    }
    return CampaignReport(figure=figure, rows=rows, meta=meta)


def run_figure(scenario: ScenarioConfig, figure: str) -> CampaignReport:
    if figure in ("erank-cdf", "tcn-cdf"):
        return run_cdf_campaign(scenario, figure)
    if figure == "heatmap":
        return run_heatmap_campaign(scenario)
    if figure in ("se-power", "se-rician"):
        return run_se_campaign(scenario, figure)
    raise ValueError(f"unknown figure '{figure}' (choose from {FIGURES})")


def _map_trials(fn, scenario: ScenarioConfig, args: list):
    workers = scenario.campaign.workers
    if workers <= 1:
        return [fn(a) for a in args]
    chunk = max(1, len(args) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=chunk))


def _base_meta(scenario: ScenarioConfig, figure: str, excluded: int,
               total: int | None = None) -> dict:
    total = scenario.campaign.trials if total is None else total
    frac = excluded / total if total else 0.0
    _, _, offsets, counts, _ = build_scene(scenario)
    return {
        "figure": figure,
        "scenario_hash": scenario.scenario_hash(),
        "master_seed": scenario.campaign.master_seed,
        "trials": total,
        "excluded_trials": excluded,
        "excluded_fraction": frac,
        "excluded_flag": frac >= 0.01,
        "ray_offsets": list(offsets),
        "element_counts": [int(c) for c in counts],
        "config": dataclasses.asdict(scenario),
    }


def output_basename(scenario: ScenarioConfig, figure: str) -> str:
    return f"{figure}_{scenario.scenario_hash()}_seed{scenario.campaign.master_seed}"


def write_report(report: CampaignReport, scenario: ScenarioConfig,
                 out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = output_basename(scenario, report.figure)
    csv_path = out / f"{base}.csv"
    json_path = out / f"{base}.json"
    report.to_csv(csv_path)
    report.to_json(json_path)
    return csv_path, json_path
