"""Panel sizing and column reflection-phase design.

A panel is an N_v x N_h grid with one phase control per column, so its
response to a (departure, arrival) pair reduces to a sum of N_h column
phasors, each carrying the full column weight N_v.  The quantized phase grid
is {2*pi*i/2^b : i = 1..2^b}; index 2^b is the 2*pi point, congruent to the
zero/reset state of an undesigned column.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, DeploymentRecipe
from .errors import CoverageViolationError, InvalidConfigError
from .geometry import Deployment, coverage_extremes, place_ris_on_curve


def phase_grid_step(bits: int) -> float:
    return 2.0 * math.pi / (1 << bits)


def quantization_efficiency(bits: int) -> float:
    """Large-panel gain retained by b-bit phases: sinc(pi/2^b)."""
    x = math.pi / (1 << bits)
    return math.sin(x) / x


def required_gain(r_t: float, r_r: float, r_0: float, quality_ratio: float,
                  wavelength_m: float) -> float:
    """Column-phasor magnitude at which the cascade matches the direct gain."""
    return 4.0 * math.pi * r_r * r_t / (quality_ratio * r_0 * wavelength_m)


def size_ris(r_t: float, r_r_max: float, r_0_min: float, quality_ratio: float,
             wavelength_m: float, bits: int | None = None,
             quantization_margin: bool = False) -> int:
    """Element count guaranteeing the cascade can match the direct gain
    for every receiver position in the coverage.

    With ``quantization_margin`` the count is inflated by 1/sinc(pi/2^b) to
    absorb the discrete-phase loss; the reference scenario's published
    counts carry no such margin, so it defaults off.
    """
    need = required_gain(r_t, r_r_max, r_0_min, quality_ratio, wavelength_m)
    if quantization_margin:
        if bits is None:
            raise InvalidConfigError("quantization margin needs a bit count")
        need /= quantization_efficiency(bits)
    return int(math.ceil(need))


@dataclass(frozen=True)
class RisPanel:
    """Physical panel: rows x cols elements, b-bit column phase control."""

    rows: int
    cols: int
    bits: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidConfigError("panel dimensions must be >= 1")
        if self.bits < 1:
            raise InvalidConfigError("quantization bits must be >= 1")

    @property
    def elements(self) -> int:
        return self.rows * self.cols


def plan_panels(system: SystemConfig, recipe: DeploymentRecipe):
    """Place panels on the curve and size each one for the coverage disk.

    Returns (positions (K,2), ray offsets, raw element counts (K,), panels).
    The raw counts are the sizing-formula output; each panel rounds its
    column count up so that rows*cols >= raw count (surplus is safe).
    """
    positions, offsets = place_ris_on_curve(system, recipe)
    tx = np.asarray(recipe.tx_position_m, dtype=float)
    r_r_max, r_0_min = coverage_extremes(positions, tx, recipe.coverage)
    r_t = np.linalg.norm(positions - tx[None, :], axis=1)
    counts = np.array([
        size_ris(rt, rr, r_0_min, system.quality_ratio, system.wavelength_m,
                 bits=system.bits,
                 quantization_margin=recipe.sizing_quantization_margin)
        for rt, rr in zip(r_t, r_r_max)
    ])
    panels = [
        RisPanel(rows=system.ris_rows,
                 cols=int(math.ceil(c / system.ris_rows)),
                 bits=system.bits)
        for c in counts
    ]
    return positions, offsets, counts, panels


# --- column phase design -------------------------------------------------

def continuous_optimal_phases(reflection_step: float, n_cols: int) -> np.ndarray:
    """Per-column phases aligning every column phasor: column n gets n*step."""
    return np.arange(n_cols) * reflection_step


def quantize_phase(phase: float | np.ndarray, bits: int) -> np.ndarray:
    """Nearest b-bit grid phase in wrapped distance, ties rounded upward.

    Result lies in {2*pi*i/2^b : i = 1..2^b}; the wrapped error never
    exceeds pi/2^b.
    """
    step = phase_grid_step(bits)
    idx = np.floor(np.asarray(phase, dtype=float) / step + 0.5)
    idx = np.mod(idx, 1 << bits)
    idx = np.where(idx == 0, 1 << bits, idx)  # represent the zero point as 2*pi
    return idx * step


def phase_indices(phases: np.ndarray, bits: int) -> np.ndarray:
    """Grid indices i in 1..2^b for phases already on the grid."""
    step = phase_grid_step(bits)
    idx = np.mod(np.rint(np.asarray(phases) / step).astype(int), 1 << bits)
    return np.where(idx == 0, 1 << bits, idx)


def array_gain(phases: np.ndarray, reflection_step: float, rows: int) -> complex:
    """Column-phasor sum f: rows * sum_n exp(j*(phase_n - n*step)).

    |f| peaks at rows*cols when every column phase equals n*step.
    """
    n = np.arange(len(phases))
    return rows * complex(np.sum(np.exp(1j * (phases - n * reflection_step))))


def undesigned_gain(panel: RisPanel, reflection_step: float) -> complex:
    """Gain of a panel left in its reset state (all column phases zero)."""
    return array_gain(np.zeros(panel.cols), reflection_step, panel.rows)


@dataclass
class PanelDesign:
    """Reflection state of one panel."""

    phases: np.ndarray              # per-column radians, on the grid unless bits is None
    active: bool                    # inactive panels reflect nothing
    designed_cols: int               # columns carrying the gain-matched design (0: all/none)
    gain: complex                   # achieved column-phasor sum f


_PANEL_BITS = object()  # sentinel: use the panel's own bit count


def design_mpg(panel: RisPanel, reflection_step: float,
               bits=_PANEL_BITS) -> PanelDesign:
    """Maximal gain: every column at the optimal phase (bits=None: continuous)."""
    b = panel.bits if bits is _PANEL_BITS else bits
    opt = continuous_optimal_phases(reflection_step, panel.cols)
    phases = opt if b is None else quantize_phase(opt, b)
    return PanelDesign(phases=phases, active=True, designed_cols=panel.cols,
                       gain=array_gain(phases, reflection_step, panel.rows))


def design_hpg(panel: RisPanel, reflection_step: float, target_gain: float,
               bits=_PANEL_BITS) -> PanelDesign:
    """Gain matched to the direct link: only the leading columns are designed.

    The designed column count compensates the quantization efficiency; the
    remaining columns stay in the reset state and contribute only a small
    phasor residue.
    """
    b = panel.bits if bits is _PANEL_BITS else bits
    eff = 1.0 if b is None else quantization_efficiency(b)
    cols_needed = int(math.ceil(target_gain / (eff * panel.rows)))
    if cols_needed > panel.cols:
        raise CoverageViolationError(
            f"matching the direct gain needs {cols_needed} designed columns "
            f"but the panel has {panel.cols} (receiver outside the sized coverage)"
        )
    opt = continuous_optimal_phases(reflection_step, cols_needed)
    head = opt if b is None else quantize_phase(opt, b)
    phases = np.zeros(panel.cols)
    phases[:cols_needed] = head
    return PanelDesign(phases=phases, active=True, designed_cols=cols_needed,
                       gain=array_gain(phases, reflection_step, panel.rows))


def design_rpg(panel: RisPanel, reflection_step: float,
               rng: np.random.Generator, bits=_PANEL_BITS) -> PanelDesign:
    """Random gain: every column phase drawn i.i.d. uniform over the grid."""
    b = panel.bits if bits is _PANEL_BITS else bits
    if b is None:
        phases = rng.uniform(0.0, 2.0 * math.pi, panel.cols)
    else:
        phases = rng.integers(1, (1 << b) + 1, panel.cols) * phase_grid_step(b)
    return PanelDesign(phases=phases, active=True, designed_cols=0,
                       gain=array_gain(phases, reflection_step, panel.rows))


def design_undesigned(panel: RisPanel, reflection_step: float) -> PanelDesign:
    """Active panel left in the reset state (zero column phases)."""
    phases = np.zeros(panel.cols)
    return PanelDesign(phases=phases, active=True, designed_cols=0,
                       gain=array_gain(phases, reflection_step, panel.rows))


def design_off(panel: RisPanel) -> PanelDesign:
    """Deactivated panel: zero phases and no reflected contribution."""
    return PanelDesign(phases=np.zeros(panel.cols), active=False,
                       designed_cols=0, gain=0j)


@dataclass
class RisDesign:
    """Reflection design for the whole panel set."""

    strategy: str
    panels: list[PanelDesign]
    active_set: tuple[int, ...]     # indices driven by the strategy, in selection order
    bits: int | None

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain if p.active else 0j for p in self.panels])

    def to_dict(self) -> dict:
        items = []
        for p in self.panels:
            entry = {
                "active": p.active,
                "designed_cols": p.designed_cols,
                "gain_re": float(p.gain.real),
                "gain_im": float(p.gain.imag),
            }
            if self.bits is None:
                entry["phases_rad"] = p.phases.tolist()
            else:
                entry["phase_indices"] = phase_indices(p.phases, self.bits).tolist()
            items.append(entry)
        return {"strategy": self.strategy, "bits": self.bits,
                "active_set": list(self.active_set), "panels": items}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def design_reflections(deployment: Deployment, panels: list[RisPanel],
                       active_set: tuple[int, ...], strategy: str,
                       system: SystemConfig,
                       rng: np.random.Generator | None = None,
                       continuous: bool = False,
                       rpg_scatter: bool = False) -> RisDesign:
    """Design every panel for one receiver draw.

    ``active_set`` lists the panels the strategy drives (usually the
    segmentation output); the rest are deactivated.  ``rpg_scatter`` models
    the fully uncontrolled surface state instead: every panel active with
    random phases, no selection applied.

    Strategies: ``hpg`` matches each active cascade gain to the direct
    link, ``mpg`` maximizes it, ``rpg`` leaves active panels undesigned
    (reset state).
    """
    bits = None if continuous else system.bits
    steps = deployment.reflection_step
    designs: list[PanelDesign] = []
    if strategy == "rpg" and rpg_scatter:
        if rng is None:
            raise InvalidConfigError("scattered random design needs an rng")
        designs = [design_rpg(p, steps[k], rng, bits=bits)
                   for k, p in enumerate(panels)]
        return RisDesign(strategy="rpg", panels=designs,
                         active_set=tuple(range(len(panels))), bits=bits)

    active = set(active_set)
    for k, panel in enumerate(panels):
        if k not in active:
            designs.append(design_off(panel))
        elif strategy == "mpg":
            designs.append(design_mpg(panel, steps[k], bits=bits))
        elif strategy == "hpg":
            target = required_gain(deployment.r_t[k], deployment.r_r[k],
                                   deployment.r_0, system.quality_ratio,
                                   system.wavelength_m)
            designs.append(design_hpg(panel, steps[k], target, bits=bits))
        elif strategy == "rpg":
            designs.append(design_undesigned(panel, steps[k]))
        else:
            raise InvalidConfigError(f"unknown strategy '{strategy}'")
    return RisDesign(strategy=strategy, panels=designs,
                     active_set=tuple(active_set), bits=bits)
