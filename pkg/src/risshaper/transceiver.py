"""Hybrid beamforming, power allocation, spectral efficiency, thresholds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .channel import max_cascade_gain, pathloss_amplitude, steering
from .errors import InfeasibleStreamCountError, InvalidDesignError, InvalidInputError
from .geometry import Deployment
from .metrics import DEFAULT_RANK_TOL
from .risdesign import RisPanel
from .segmentation import SegmentationResult


@dataclass(frozen=True)
class PowerAllocation:
    """Water-filling outcome over parallel channel modes."""

    p: np.ndarray            # per-mode powers, sum == total budget
    mu: float                # water level
    active: np.ndarray       # boolean mask of powered modes


def waterfill(gains: np.ndarray, total_power: float, noise_w: float) -> PowerAllocation:
    """Optimal power over modes with power gains ``gains`` (lambda_i).

    Modes whose bottom noise_w/lambda_i reaches the water level get zero
    power; with every mode active the level is the budget-plus-bottoms
    average.  The returned allocation satisfies complementary slackness to
    machine precision.
    """
    lam = np.asarray(gains, dtype=float)
    if lam.size == 0 or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise InvalidInputError("water-filling needs positive finite mode gains")
    if total_power <= 0:
        raise InvalidInputError("total power must be positive")
    bottoms = noise_w / lam
    order = np.argsort(bottoms, kind="stable")
    sorted_b = bottoms[order]
    m = lam.size
    mu = 0.0
    while m > 0:
        mu = (total_power + sorted_b[:m].sum()) / m
        if mu > sorted_b[m - 1]:
            break
        m -= 1
    p = np.zeros_like(lam)
    idx = order[:m]
    p[idx] = mu - bottoms[idx]
    return PowerAllocation(p=p, mu=float(mu), active=p > 0)


@dataclass(frozen=True)
class BeamformingSolution:
    """Analog/digital beamformer pair at both link ends."""

    f_rf: np.ndarray
    f_bb: np.ndarray
    w_rf: np.ndarray
    w_bb: np.ndarray
    scheme: str
    allocation: PowerAllocation | None
    mode_gains: np.ndarray           # power gains the allocation was built on

    @property
    def tx_matrix(self) -> np.ndarray:
        return self.f_rf @ self.f_bb

    @property
    def rx_matrix(self) -> np.ndarray:
        return self.w_rf @ self.w_bb

    @property
    def streams(self) -> int:
        return self.f_bb.shape[1]


def cc_hybrid_beamformers(deployment: Deployment, seg: SegmentationResult,
                          gains: np.ndarray, total_power: float, s: int,
                          system: SystemConfig,
                          allocation: str = "waterfill") -> BeamformingSolution:
    """Beamformers read directly off the customized channel, no decomposition.

    Analog stages are the steering matrices of the direct link and the
    selected panels (Tx side with each cascade's phase folded in, so the
    equivalent mode gains are real); the digital stages only set stream
    powers.  ``gains`` is the complex cascade-gain vector [direct, panels].
    """
    if len(seg.selected) != s - 1:
        raise InvalidDesignError("selection size must be s-1")
    idx = [0] + [k + 1 for k in seg.selected]
    g = np.asarray(gains)[idx]
    order = np.argsort(-np.abs(g), kind="stable")
    g = g[order]
    tx_steps = deployment.tx_depart_step[idx]
    rx_steps = deployment.rx_arrive_step[idx]
    f_rf = np.stack([np.exp(1j * np.angle(gi)) * steering(system.n_tx, st)
                     for gi, st in zip(g, tx_steps[order])], axis=1)
    w_rf = np.stack([steering(system.n_rx, st) for st in rx_steps[order]], axis=1)
    mode_gains = np.abs(g) ** 2
    if allocation == "equal":
        p = np.full(s, total_power / s)
        alloc = None
    elif allocation == "waterfill":
        alloc = waterfill(mode_gains, total_power, system.noise_w)
        p = alloc.p
    else:
        raise InvalidInputError(f"unknown allocation '{allocation}'")
    f_bb = np.diag(np.sqrt(p)).astype(complex)
    w_bb = np.eye(s, dtype=complex)
    return BeamformingSolution(f_rf=f_rf, f_bb=f_bb, w_rf=w_rf, w_bb=w_bb,
                               scheme="cc-hybrid", allocation=alloc,
                               mode_gains=mode_gains)


def svd_beamformers(h: np.ndarray, total_power: float, s: int, noise_w: float,
                    truncated: bool = False,
                    rank_tol: float = DEFAULT_RANK_TOL) -> BeamformingSolution:
    """Water-filled beamformers from the numerical SVD of the channel.

    The full variant uses every above-threshold mode (no RF-chain limit);
    the truncated variant keeps exactly the leading s modes and fails when
    the channel rank cannot support them.
    """
    u, sv, vh = np.linalg.svd(h)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size else 0
    if truncated:
        if rank < s:
            raise InfeasibleStreamCountError(
                f"channel rank {rank} cannot carry {s} streams"
            )
        m = s
    else:
        m = max(rank, 1)
    mode_gains = sv[:m] ** 2
    alloc = waterfill(mode_gains, total_power, noise_w)
    f = vh.conj().T[:, :m] @ np.diag(np.sqrt(alloc.p)).astype(complex)
    scheme = "truncated-svd" if truncated else "svd"
    return BeamformingSolution(f_rf=f, f_bb=np.eye(m, dtype=complex),
                               w_rf=u[:, :m], w_bb=np.eye(m, dtype=complex),
                               scheme=scheme, allocation=alloc,
                               mode_gains=mode_gains)


def spectral_efficiency(h: np.ndarray, tx_matrix: np.ndarray,
                        rx_matrix: np.ndarray, noise_w: float) -> float:
    """Achieved rate in bits/s/Hz for given channel and beamformer pair.

    The combiner output noise has covariance noise_w * W^H W, so the rate is
    whitened by the combiner Gram matrix; for orthonormal combiner columns
    this reduces to the plain determinant form.  A singular Gram matrix
    falls back to the pseudo-inverse (with a warning) rather than failing.
    """
    w = np.asarray(rx_matrix)
    t = w.conj().T @ np.asarray(h) @ np.asarray(tx_matrix)
    gram = w.conj().T @ w
    dev = np.linalg.norm(gram - np.eye(gram.shape[0]))
    if dev < 1e-12:
        m = t
    else:
        try:
            m = np.linalg.solve(gram, t)
        except np.linalg.LinAlgError:
            warnings.warn("combiner Gram matrix is singular; whitening by pseudo-inverse")
            m = np.linalg.pinv(gram) @ t
    _, logdet = np.linalg.slogdet(np.eye(t.shape[0]) + m @ t.conj().T / noise_w)
    return max(float(logdet) / math.log(2.0), 0.0)


def solution_rate(h: np.ndarray, solution: BeamformingSolution, noise_w: float) -> float:
    return spectral_efficiency(h, solution.tx_matrix, solution.rx_matrix, noise_w)


# --- transmit-power thresholds --------------------------------------------

def stream_power_threshold(gain_magnitudes: np.ndarray, noise_w: float) -> float:
    """Minimum transmit power activating every mode, direct gain first.

    With bottoms b_i = noise/|gain_i|^2 and the direct link the weakest
    mode, all s modes carry power iff E > (s-1)*b_0 - sum_{i>0} b_i.
    """
    g = np.abs(np.asarray(gain_magnitudes, dtype=float))
    if g.size < 1 or np.any(g <= 0):
        raise InvalidDesignError("thresholds need positive gains for every mode")
    if g.size == 1:
        return 0.0
    if g[0] > g[1:].min() + 1e-15 * g[0]:
        warnings.warn("direct link is not the weakest mode; threshold formula "
                      "assumes it bounds the water level")
    bottoms = noise_w / g ** 2
    return float((g.size - 1) * bottoms[0] - bottoms[1:].sum())


def max_stream_power_threshold(deployment: Deployment, panels: list[RisPanel],
                               selected: tuple[int, ...], system: SystemConfig) -> float:
    """Closed-form largest threshold: every selected cascade at its best gain."""
    lam = system.wavelength_m
    ant = math.sqrt(system.n_tx * system.n_rx)
    direct = system.link_quality_direct * ant * pathloss_amplitude(deployment.r_0, lam)
    best = [max_cascade_gain(deployment, panels[k], k, system) for k in selected]
    return stream_power_threshold(np.array([direct] + best), system.noise_w)


def extra_stream_threshold_increase(deployment: Deployment, panels: list[RisPanel],
                                    candidate: int, system: SystemConfig) -> float:
    """Extra worst-case power needed to fund one more stream via ``candidate``.

    Equals noise/|direct|^2 - noise/|candidate best gain|^2; grows with the
    candidate's element count toward the direct-link bottom as a limit.
    """
    lam = system.wavelength_m
    ant = math.sqrt(system.n_tx * system.n_rx)
    direct = system.link_quality_direct * ant * pathloss_amplitude(deployment.r_0, lam)
    best = max_cascade_gain(deployment, panels[candidate], candidate, system)
    return float(system.noise_w / direct ** 2 - system.noise_w / best ** 2)
