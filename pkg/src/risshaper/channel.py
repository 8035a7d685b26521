"""Steering vectors, component channels, and composite-channel assembly.

Every component channel is kept as a small sum of rank-one path terms
(line-of-sight plus any scattered paths).  Composition therefore never
materializes an elements x antennas matrix unless the dense route is
explicitly requested; the two routes agree to machine precision and the
dense one exists as an independent cross-check and export path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SystemConfig
from .errors import InvalidConfigError
from .geometry import Deployment
from .risdesign import RisDesign, RisPanel, quantization_efficiency, required_gain

SQRT_HALF = math.sqrt(0.5)


def steering(n: int, step: float) -> np.ndarray:
    """Unit-norm ULA response: exp(j*n*step)/sqrt(N) for n = 0..N-1."""
    if n < 1:
        raise InvalidConfigError("steering vector needs n >= 1")
    return np.exp(1j * step * np.arange(n)) / math.sqrt(n)


def steering_matrix(n: int, steps: np.ndarray) -> np.ndarray:
    """Columns of steering vectors, one per phase step."""
    steps = np.asarray(steps, dtype=float)
    return np.exp(1j * np.outer(np.arange(n), steps)) / math.sqrt(n)


def upa_steering(n_rows: int, n_cols: int, vert_step: float, horiz_step: float) -> np.ndarray:
    """Planar response as the Kronecker product of two ULA responses."""
    return np.kron(steering(n_rows, vert_step), steering(n_cols, horiz_step))


def pathloss_amplitude(distance_m: float | np.ndarray, wavelength_m: float):
    """Free-space amplitude lambda/(4*pi*r)."""
    return wavelength_m / (4.0 * math.pi * np.asarray(distance_m, dtype=float))


@dataclass(frozen=True)
class EndpointPaths:
    """Rank-one path terms of one component channel.

    ``amps`` carry the full per-path coefficient: array-size factor,
    pathloss, link quality and Rician weights, and any scattered-path gain.
    ``a_*`` hold phase steps on the matrix's row side, ``b_*`` on its column
    side; panel sides carry a (vertical, horizontal) pair.
    """

    amps: np.ndarray
    a_steps: np.ndarray
    b_steps: np.ndarray
    a_vert: np.ndarray | None = None
    b_vert: np.ndarray | None = None


@dataclass(frozen=True)
class ChannelRealization:
    """One Monte Carlo draw of every component channel."""

    direct: EndpointPaths                 # rows: Rx, cols: Tx
    tx_links: list[EndpointPaths]         # rows: panel, cols: Tx
    rx_links: list[EndpointPaths]         # rows: Rx, cols: panel
    n_tx: int
    n_rx: int
    panels: list[RisPanel]

    @property
    def ris_count(self) -> int:
        return len(self.panels)


def _rician_weights(kappa: float | None, quality: float, n_paths: int):
    """(LoS weight, per-scattered-path weight) for one component channel."""
    if kappa is None:
        return quality, 0.0
    if n_paths < 1:
        raise InvalidConfigError("finite Rician factor needs nlos_paths >= 1")
    los = quality * math.sqrt(kappa / (kappa + 1.0))
    nlos = math.sqrt(1.0 / ((kappa + 1.0) * n_paths))
    return los, nlos


def _scatter_draw(rng: np.random.Generator, count: int):
    """Unit-variance circular Gaussian gains and uniform [0, pi) angles."""
    gains = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * SQRT_HALF
    return gains


def draw_realization(deployment: Deployment, panels: list[RisPanel],
                     system: SystemConfig,
                     rng: np.random.Generator | None = None) -> ChannelRealization:
    """Draw one channel realization (pure LoS when no Rician factor is set)."""
    kappa = system.rician_linear
    n_paths = system.nlos_paths
    if kappa is not None and rng is None:
        raise InvalidConfigError("scattered paths need an rng")
    lam = system.wavelength_m
    tx_sc = 2.0 * math.pi * system.tx_spacing_wl
    rx_sc = 2.0 * math.pi * system.rx_spacing_wl
    ris_sc = 2.0 * math.pi * system.ris_spacing_wl

    def ula_nlos_steps(count):
        return np.sin(rng.uniform(0.0, math.pi, count))

    def panel_nlos_steps(count):
        vert = rng.uniform(0.0, math.pi, count)
        horiz = rng.uniform(0.0, math.pi, count)
        return np.cos(vert), np.sin(vert) * np.sin(horiz)

    # Direct Tx-Rx link.
    g0 = pathloss_amplitude(deployment.r_0, lam)
    scale0 = math.sqrt(system.n_tx * system.n_rx) * g0
    los_w, nlos_w = _rician_weights(kappa, system.link_quality_direct, n_paths)
    amps = [scale0 * los_w]
    a_steps = [deployment.rx_arrive_step[0]]
    b_steps = [deployment.tx_depart_step[0]]
    if kappa is not None:
        betas = _scatter_draw(rng, n_paths)
        amps.extend(scale0 * nlos_w * betas)
        a_steps.extend(rx_sc * ula_nlos_steps(n_paths))
        b_steps.extend(tx_sc * ula_nlos_steps(n_paths))
    direct = EndpointPaths(np.array(amps), np.array(a_steps), np.array(b_steps))

    tx_links, rx_links = [], []
    for k, panel in enumerate(panels):
        n_s = panel.elements
        g_t = pathloss_amplitude(deployment.r_t[k], lam)
        g_r = pathloss_amplitude(deployment.r_r[k], lam)
        los_t, nlos_t = _rician_weights(kappa, system.link_quality_tx, n_paths)
        los_r, nlos_r = _rician_weights(kappa, system.link_quality_rx, n_paths)
        scale_t = math.sqrt(system.n_tx * n_s) * g_t
        scale_r = math.sqrt(system.n_rx * n_s) * g_r

        t_amps = [scale_t * los_t]
        t_vert = [deployment.ris_in_vert_step[k]]
        t_horiz = [deployment.ris_in_step[k]]
        t_cols = [deployment.tx_depart_step[k + 1]]
        r_amps = [scale_r * los_r]
        r_rows = [deployment.rx_arrive_step[k + 1]]
        r_vert = [deployment.ris_out_vert_step[k]]
        r_horiz = [deployment.ris_out_step[k]]
        if kappa is not None:
            betas = _scatter_draw(rng, n_paths)
            vert, horiz = panel_nlos_steps(n_paths)
            t_amps.extend(scale_t * nlos_t * betas)
            t_vert.extend(ris_sc * vert)
            t_horiz.extend(ris_sc * horiz)
            t_cols.extend(tx_sc * ula_nlos_steps(n_paths))
            betas = _scatter_draw(rng, n_paths)
            vert, horiz = panel_nlos_steps(n_paths)
            r_amps.extend(scale_r * nlos_r * betas)
            r_vert.extend(ris_sc * vert)
            r_horiz.extend(ris_sc * horiz)
            r_rows.extend(rx_sc * ula_nlos_steps(n_paths))
        tx_links.append(EndpointPaths(np.array(t_amps),
                                      a_steps=np.array(t_horiz),
                                      b_steps=np.array(t_cols),
                                      a_vert=np.array(t_vert)))
        rx_links.append(EndpointPaths(np.array(r_amps),
                                      a_steps=np.array(r_rows),
                                      b_steps=np.array(r_horiz),
                                      b_vert=np.array(r_vert)))
    return ChannelRealization(direct=direct, tx_links=tx_links, rx_links=rx_links,
                              n_tx=system.n_tx, n_rx=system.n_rx, panels=panels)


# --- composition ----------------------------------------------------------

def _column_coupling(phases: np.ndarray, rows: int, out_vert: float, out_horiz: float,
                     in_vert: float, in_horiz: float) -> complex:
    """Normalized panel response a(out)^H * Gamma * a(in) for one path pair."""
    n_cols = len(phases)
    vert = np.vdot(steering(rows, out_vert), steering(rows, in_vert))
    n = np.arange(n_cols)
    horiz = np.sum(np.exp(1j * (phases + (in_horiz - out_horiz) * n))) / n_cols
    return complex(vert * horiz)


def compose(channel: ChannelRealization, design: RisDesign) -> np.ndarray:
    """Composite Rx x Tx channel: direct link plus active single reflections."""
    amps = list(channel.direct.amps)
    rows = list(channel.direct.a_steps)
    cols = list(channel.direct.b_steps)
    for k, panel in enumerate(channel.panels):
        pd = design.panels[k]
        if not pd.active:
            continue
        t, r = channel.tx_links[k], channel.rx_links[k]
        n_s = panel.elements
        for p in range(len(r.amps)):
            for q in range(len(t.amps)):
                coup = _column_coupling(pd.phases, panel.rows,
                                        r.b_vert[p], r.b_steps[p],
                                        t.a_vert[q], t.a_steps[q])
                amps.append(n_s * r.amps[p] * t.amps[q] * coup)
                rows.append(r.a_steps[p])
                cols.append(t.b_steps[q])
    amps = np.array(amps)
    a_r = steering_matrix(channel.n_rx, np.array(rows))
    a_t = steering_matrix(channel.n_tx, np.array(cols))
    return (a_r * amps) @ a_t.conj().T


def component_matrix(paths: EndpointPaths, n_rows: int, n_cols: int,
                     row_panel: RisPanel | None = None,
                     col_panel: RisPanel | None = None) -> np.ndarray:
    """Dense matrix of one component channel from its path terms."""
    if row_panel is not None:
        a = np.stack([upa_steering(row_panel.rows, row_panel.cols, v, h)
                      for v, h in zip(paths.a_vert, paths.a_steps)], axis=1)
    else:
        a = steering_matrix(n_rows, paths.a_steps)
    if col_panel is not None:
        b = np.stack([upa_steering(col_panel.rows, col_panel.cols, v, h)
                      for v, h in zip(paths.b_vert, paths.b_steps)], axis=1)
    else:
        b = steering_matrix(n_cols, paths.b_steps)
    return (a * paths.amps) @ b.conj().T


def compose_dense(channel: ChannelRealization, design: RisDesign) -> np.ndarray:
    """Direct assembly through dense component matrices (cross-check path)."""
    h = component_matrix(channel.direct, channel.n_rx, channel.n_tx)
    for k, panel in enumerate(channel.panels):
        pd = design.panels[k]
        if not pd.active:
            continue
        h_t = component_matrix(channel.tx_links[k], panel.elements, channel.n_tx,
                               row_panel=panel)
        h_r = component_matrix(channel.rx_links[k], channel.n_rx, panel.elements,
                               col_panel=panel)
        gamma = np.tile(np.exp(1j * pd.phases), panel.rows)  # I kron diag(phases)
        h = h + h_r @ (gamma[:, None] * h_t)
    return h


def direct_gain(deployment: Deployment, system: SystemConfig) -> float:
    """Line-of-sight gain of the direct Tx-Rx link."""
    g0 = pathloss_amplitude(deployment.r_0, system.wavelength_m)
    return system.link_quality_direct * math.sqrt(system.n_tx * system.n_rx) * g0


def cascade_gains(deployment: Deployment, panels: list[RisPanel],
                  design: RisDesign, system: SystemConfig) -> np.ndarray:
    """Line-of-sight path gains [direct, panel 1..K] for the design.

    Inactive panels contribute exactly zero.  These are the gains the
    low-complexity beamformer, the water-filling bottoms, and the power
    thresholds are built from.
    """
    lam = system.wavelength_m
    ant = math.sqrt(system.n_tx * system.n_rx)
    quality = system.link_quality_tx * system.link_quality_rx
    g_t = pathloss_amplitude(deployment.r_t, lam)
    g_r = pathloss_amplitude(deployment.r_r, lam)
    return np.concatenate([[direct_gain(deployment, system)],
                           quality * ant * g_r * g_t * design.gains])


def max_cascade_gain(deployment: Deployment, panel: RisPanel, k: int,
                     system: SystemConfig) -> float:
    """Large-panel estimate of the best achievable |cascade gain| of panel k."""
    lam = system.wavelength_m
    ant = math.sqrt(system.n_tx * system.n_rx)
    quality = system.link_quality_tx * system.link_quality_rx
    g = pathloss_amplitude(deployment.r_t[k], lam) * pathloss_amplitude(deployment.r_r[k], lam)
    return quality * ant * g * panel.elements * quantization_efficiency(panel.bits)


def gain_surplus(deployment: Deployment, panels: list[RisPanel], k: int,
                 system: SystemConfig) -> float:
    """Ratio of panel k's best achievable gain to the direct-link gain."""
    need = required_gain(deployment.r_t[k], deployment.r_r[k], deployment.r_0,
                         system.quality_ratio, system.wavelength_m)
    return panels[k].elements * quantization_efficiency(panels[k].bits) / need


def export_matrix(path: str | Path, matrix: np.ndarray) -> None:
    """Write re/im-interleaved little-endian float64 plus a JSON sidecar."""
    path = Path(path)
    m = np.ascontiguousarray(matrix, dtype=np.complex128)
    inter = np.empty(m.shape + (2,), dtype="<f8")
    inter[..., 0] = m.real
    inter[..., 1] = m.imag
    path.write_bytes(inter.tobytes())
    sidecar = {"rows": m.shape[0], "cols": m.shape[1], "dtype": "<f8",
               "layout": "row-major, interleaved re/im"}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))


def import_matrix(path: str | Path) -> np.ndarray:
    """Read a matrix written by :func:`export_matrix`."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    raw = raw.reshape(sidecar["rows"], sidecar["cols"], 2)
    return raw[..., 0] + 1j * raw[..., 1]
