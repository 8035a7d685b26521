"""Singular-value shaping of multi-RIS mmWave MIMO links."""

from .config import (CampaignConfig, CoverageDisk, DeploymentRecipe,
                     ScenarioConfig, SystemConfig, load_scenario)
from .geometry import Deployment, dft_directions, place_ris_on_curve, sample_rx, solve_geometry
from .metrics import SpectrumReport, effective_rank, spectrum, truncated_condition
from .risdesign import RisDesign, RisPanel, plan_panels, size_ris
from .segmentation import SegmentationResult, complexity_estimate, exhaustive_segment, greedy_segment
from .transceiver import (BeamformingSolution, PowerAllocation, cc_hybrid_beamformers,
                          spectral_efficiency, svd_beamformers, waterfill)

__version__ = "0.1.0"

__all__ = [
    "CampaignConfig", "CoverageDisk", "DeploymentRecipe", "ScenarioConfig",
    "SystemConfig", "load_scenario", "Deployment", "dft_directions",
    "place_ris_on_curve", "sample_rx", "solve_geometry", "SpectrumReport",
    "effective_rank", "spectrum", "truncated_condition", "RisDesign", "RisPanel",
    "plan_panels", "size_ris", "SegmentationResult", "complexity_estimate",
    "exhaustive_segment", "greedy_segment", "BeamformingSolution",
    "PowerAllocation", "cc_hybrid_beamformers", "spectral_efficiency",
    "svd_beamformers", "waterfill",
]
