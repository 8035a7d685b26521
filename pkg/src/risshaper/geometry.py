"""Node placement and line-of-sight geometry.

Coordinate conventions: 2-D plane, all nodes co-altitude.  The Tx and Rx
ULAs run along the y-axis with broadside +x, so a physical angle theta is
measured from the +x axis and the per-element phase step of an array with
spacing d is (2*pi*d/lambda)*sin(theta).  Panel columns also run along y;
the panel's vertical axis is out of plane, so co-altitude propagation has a
vertical phase step of exactly zero.  Only angle differences enter any
steering product, so the convention choice is free.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import CoverageDisk, DeploymentRecipe, SystemConfig
from .errors import DegenerateGeometryError, InvalidConfigError


def dft_directions(n_tx: int) -> np.ndarray:
    """Physical ray angles whose Tx steering vectors form an orthogonal grid."""
    if n_tx < 2:
        raise InvalidConfigError("n_tx must be >= 2 for a direction grid")
    i = np.arange(1, n_tx + 1)
    return np.arcsin(2.0 * i / n_tx - 1.0)


def default_ray_offsets(ris_count: int) -> tuple[int, ...]:
    """Symmetric ray assignment: boresight first, then each side near-to-far.

    The enumeration starts at the boresight panel (the one farthest from the
    Tx on the placement curve) and walks one side outward before mirroring,
    which keeps the panel index order aligned with the published size list.
    """
    half = (ris_count - 1) // 2
    return tuple([0] + [-j for j in range(1, half + 1)] + [j for j in range(1, half + 1)])


def place_ris_on_curve(system: SystemConfig, recipe: DeploymentRecipe) -> tuple[np.ndarray, tuple[int, ...]]:
    """Panel positions on the shrinking radial curve, one per occupied ray.

    Ray j has sin(angle) = 2*j/n_tx.  The curve spans the occupied rays
    exactly: its half-span is arcsin((K-1)/n_tx) for the default symmetric
    layout, and the radial distance falls linearly from ``curve_far_m`` at
    boresight to ``curve_near_m`` at the extreme rays.
    """
    recipe.validate(system)
    offsets = recipe.ray_offsets or default_ray_offsets(recipe.ris_count)
    sines = np.array(offsets, dtype=float) * 2.0 / system.n_tx
    if np.any(np.abs(sines) >= 1.0):
        raise InvalidConfigError("ray offsets exceed the visible region")
    angles = np.arcsin(sines)
    half_span = float(np.max(np.abs(angles)))
    if half_span == 0.0:
        radii = np.full(len(offsets), recipe.curve_far_m)
    else:
        radii = recipe.curve_near_m + (recipe.curve_far_m - recipe.curve_near_m) * (
            1.0 - np.abs(angles) / half_span
        )
    tx = np.asarray(recipe.tx_position_m, dtype=float)
    positions = tx[None, :] + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    return positions, tuple(int(j) for j in offsets)


def disk_point(coverage: CoverageDisk, u: float, v: float) -> np.ndarray:
    """Map unit-square coordinates to a point uniform over the disk area."""
    r = coverage.radius_m * math.sqrt(u)
    phi = 2.0 * math.pi * v
    return np.array([coverage.center_m[0] + r * math.cos(phi),
                     coverage.center_m[1] + r * math.sin(phi)])


def sample_rx(coverage: CoverageDisk, rng: np.random.Generator) -> np.ndarray:
    """Receiver position uniform over the coverage disk area."""
    u, v = rng.random(2)
    return disk_point(coverage, u, v)


def coverage_extremes(positions: np.ndarray, tx: np.ndarray,
                      coverage: CoverageDisk) -> tuple[np.ndarray, float]:
    """Worst-case distances over the coverage disk used by panel sizing.

    Returns (max panel-to-Rx distance per panel, min Tx-to-Rx distance).
    """
    center = np.asarray(coverage.center_m, dtype=float)
    r_r_max = np.linalg.norm(positions - center[None, :], axis=1) + coverage.radius_m
    r_0_min = float(np.linalg.norm(center - tx)) - coverage.radius_m
    if r_0_min <= 0:
        raise InvalidConfigError("coverage disk contains the transmitter")
    return r_r_max, r_0_min


@dataclass(frozen=True)
class Deployment:
    """Distances and LoS angles for one Tx / panels / Rx configuration.

    Angle arrays of length K+1 put the direct Tx-Rx link at index 0 and
    panel k at index k+1.  ``*_step`` arrays are phase-domain (already
    scaled by 2*pi*d/lambda); ``*_angle`` arrays are the physical radians.
    """

    tx: np.ndarray
    rx: np.ndarray
    ris_xy: np.ndarray
    r_t: np.ndarray
    r_r: np.ndarray
    r_0: float
    tx_depart_angle: np.ndarray
    rx_arrive_angle: np.ndarray
    tx_depart_step: np.ndarray
    rx_arrive_step: np.ndarray
    ris_in_step: np.ndarray
    ris_out_step: np.ndarray
    ris_in_vert_step: np.ndarray
    ris_out_vert_step: np.ndarray

    @property
    def ris_count(self) -> int:
        return len(self.ris_xy)

    @property
    def reflection_step(self) -> np.ndarray:
        """Per-panel phase-step difference between departing and arriving waves."""
        return self.ris_out_step - self.ris_in_step

    def to_dict(self) -> dict:
        out = {}
        for name in ("tx", "rx", "ris_xy", "r_t", "r_r", "tx_depart_angle",
                     "rx_arrive_angle", "tx_depart_step", "rx_arrive_step",
                     "ris_in_step", "ris_out_step", "ris_in_vert_step",
                     "ris_out_vert_step"):
            out[name] = np.asarray(getattr(self, name)).tolist()
        out["r_0"] = self.r_0
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def solve_geometry(tx: np.ndarray, ris_xy: np.ndarray, rx: np.ndarray,
                   system: SystemConfig) -> Deployment:
    """All pairwise distances and LoS angles for one receiver position."""
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    ris_xy = np.asarray(ris_xy, dtype=float).reshape(-1, 2)

    d_tx_rx = rx - tx
    r_0 = float(np.hypot(*d_tx_rx))
    d_tx_ris = ris_xy - tx[None, :]
    r_t = np.linalg.norm(d_tx_ris, axis=1)
    d_rx_ris = ris_xy - rx[None, :]
    r_r = np.linalg.norm(d_rx_ris, axis=1)
    if r_0 <= 0 or np.any(r_t <= 0) or np.any(r_r <= 0):
        raise DegenerateGeometryError("coincident node positions")

    # Spacings are given in wavelengths, so 2*pi*d/lambda reduces to 2*pi*spacing.
    tx_scale = 2.0 * math.pi * system.tx_spacing_wl
    rx_scale = 2.0 * math.pi * system.rx_spacing_wl
    ris_scale = 2.0 * math.pi * system.ris_spacing_wl

    tx_depart_angle = np.concatenate([
        [math.atan2(d_tx_rx[1], d_tx_rx[0])],
        np.arctan2(d_tx_ris[:, 1], d_tx_ris[:, 0]),
    ])
    # Arrival direction at the Rx points back toward the source.
    rx_arrive_angle = np.concatenate([
        [math.atan2(-d_tx_rx[1], -d_tx_rx[0])],
        np.arctan2(d_rx_ris[:, 1], d_rx_ris[:, 0]),
    ])
    sin_depart = np.concatenate([[d_tx_rx[1] / r_0], d_tx_ris[:, 1] / r_t])
    sin_arrive = np.concatenate([[-d_tx_rx[1] / r_0], d_rx_ris[:, 1] / r_r])

    # Horizontal steps at each panel: arriving wave comes from the Tx,
    # departing wave heads to the Rx; both measured in the panel's column axis.
    sin_in = -d_tx_ris[:, 1] / r_t
    sin_out = -d_rx_ris[:, 1] / r_r
    zeros = np.zeros(len(ris_xy))  # co-altitude: vertical phase step vanishes

    return Deployment(
        tx=tx, rx=rx, ris_xy=ris_xy, r_t=r_t, r_r=r_r, r_0=r_0,
        tx_depart_angle=tx_depart_angle,
        rx_arrive_angle=rx_arrive_angle,
        tx_depart_step=tx_scale * sin_depart,
        rx_arrive_step=rx_scale * sin_arrive,
        ris_in_step=ris_scale * sin_in,
        ris_out_step=ris_scale * sin_out,
        ris_in_vert_step=zeros,
        ris_out_vert_step=zeros,
    )
