"""Scenario configuration: dataclasses, YAML loading, and validation.

All physical quantities carry explicit units in their key names (``fc_ghz``,
``noise_dbm``, spacings in wavelengths, positions in meters).  Unknown keys
are rejected so that typos never silently fall back to defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import InvalidConfigError

SPEED_OF_LIGHT = 3.0e8  # m/s


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise InvalidConfigError("power must be positive to convert to dBm")
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters (antennas, spacings, quality factors, noise)."""

    fc_ghz: float = 28.0
    n_tx: int = 32
    n_rx: int = 8
    rf_tx: int = 8
    rf_rx: int | None = None  # None: one RF chain per stream
    tx_spacing_wl: float = 0.5
    rx_spacing_wl: float = 0.5
    ris_spacing_wl: float = 0.125
    bits: int = 4
    ris_rows: int = 2
    link_quality_direct: float = 0.01
    link_quality_tx: float = 1.0
    link_quality_rx: float = 1.0
    rician_db: float | None = None  # None: pure line-of-sight channels
    nlos_paths: int = 3
    noise_dbm: float = -100.0

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.fc_ghz * 1e9)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def quality_ratio(self) -> float:
        """Cascade-to-direct link-quality ratio entering the gain requirement."""
        return self.link_quality_tx * self.link_quality_rx / self.link_quality_direct

    @property
    def rician_linear(self) -> float | None:
        return None if self.rician_db is None else db_to_linear(self.rician_db)

    def validate(self) -> None:
        if self.n_tx < 2:
            raise InvalidConfigError("n_tx must be >= 2")
        if self.n_rx < 1:
            raise InvalidConfigError("n_rx must be >= 1")
        if self.bits < 1:
            raise InvalidConfigError("quantization bits must be >= 1")
        if self.ris_rows < 1:
            raise InvalidConfigError("ris_rows must be >= 1")
        for name in ("link_quality_direct", "link_quality_tx", "link_quality_rx"):
            q = getattr(self, name)
            if not 0.0 < q <= 1.0:
                raise InvalidConfigError(f"{name} must lie in (0, 1]")
        if self.fc_ghz <= 0:
            raise InvalidConfigError("fc_ghz must be positive")
        if self.nlos_paths < 0:
            raise InvalidConfigError("nlos_paths must be >= 0")
        if self.rician_db is None and self.nlos_paths == 0:
            pass  # pure LoS needs no scattered paths
        for name in ("tx_spacing_wl", "rx_spacing_wl", "ris_spacing_wl"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class CoverageDisk:
    """Circular region the receiver may occupy."""

    center_m: tuple[float, float] = (100.0, 0.0)
    radius_m: float = 25.0

    def validate(self) -> None:
        if self.radius_m <= 0:
            raise InvalidConfigError("coverage radius must be positive")
        if not all(math.isfinite(c) for c in self.center_m):
            raise InvalidConfigError("coverage center must be finite")


@dataclass(frozen=True)
class DeploymentRecipe:
    """Placement rule for the reflecting panels along the transmit rays."""

    ris_count: int = 25
    curve_near_m: float = 35.0
    curve_far_m: float = 138.0
    tx_position_m: tuple[float, float] = (0.0, 0.0)
    coverage: CoverageDisk = field(default_factory=CoverageDisk)
    ray_offsets: tuple[int, ...] | None = None  # override of the ray grid indices
    sizing_quantization_margin: bool = False

    def validate(self, system: SystemConfig) -> None:
        self.coverage.validate()
        if self.ris_count < 1:
            raise InvalidConfigError("ris_count must be >= 1")
        if self.ris_count + 1 > system.n_tx:
            raise InvalidConfigError(
                f"ris_count={self.ris_count} needs more rays than the {system.n_tx}-antenna "
                "transmit grid offers (curve half-span arcsine argument exceeds 1)"
            )
        if self.ray_offsets is None and self.ris_count % 2 == 0:
            raise InvalidConfigError(
                "the symmetric two-sided layout needs an odd ris_count; "
                "pass explicit ray_offsets for an even count"
            )
        if self.curve_near_m <= 0 or self.curve_far_m <= self.curve_near_m:
            raise InvalidConfigError("curve radii must satisfy 0 < near < far")
        tx_to_center = math.dist(self.tx_position_m, self.coverage.center_m)
        if tx_to_center <= self.coverage.radius_m:
            raise InvalidConfigError("transmitter must lie outside the coverage disk")
        if self.ray_offsets is not None:
            if len(self.ray_offsets) != self.ris_count:
                raise InvalidConfigError("ray_offsets length must equal ris_count")
            half = system.n_tx // 2
            if any(abs(j) >= half for j in self.ray_offsets):
                raise InvalidConfigError("ray offsets must satisfy |j| < n_tx/2")


@dataclass(frozen=True)
class CampaignConfig:
    """Monte Carlo campaign parameters."""

    trials: int = 1000
    master_seed: int = 1
    s_values: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    strategies: tuple[str, ...] = ("hpg", "mpg", "rpg")
    power_dbm: tuple[float, ...] = tuple(float(p) for p in range(20, 65, 5))
    rician_sweep_db: tuple[float, ...] = (0.0, 3.0, 6.0, 9.0, 12.0, 15.0)
    se_power_dbm: float = 40.0
    se_streams: int = 4
    heatmap_grid: int = 101
    heatmap_s: tuple[int, ...] = (2, 4)
    workers: int = 1

    def validate(self, system: SystemConfig) -> None:
        if self.trials < 1:
            raise InvalidConfigError("trials must be >= 1")
        s_cap = min(system.n_rx, system.rf_tx)
        for s in (*self.s_values, *self.heatmap_s, self.se_streams):
            if not 1 <= s <= s_cap:
                raise InvalidConfigError(
                    f"stream counts must lie in [1, min(n_rx, rf_tx)] = [1, {s_cap}]"
                )
        known = {"hpg", "mpg", "rpg", "no-ris"}
        unknown = set(self.strategies) - known
        if unknown:
            raise InvalidConfigError(f"unknown strategies: {sorted(unknown)}")
        if self.heatmap_grid < 3:
            raise InvalidConfigError("heatmap_grid must be >= 3")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full run description: system scalars, deployment recipe, campaign knobs."""

    system: SystemConfig = field(default_factory=SystemConfig)
    deployment: DeploymentRecipe = field(default_factory=DeploymentRecipe)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    out_dir: str = "out"

    def validate(self) -> None:
        self.system.validate()
        self.deployment.validate(self.system)
        self.campaign.validate(self.system)

    def scenario_hash(self) -> str:
        """Stable 8-hex digest of everything that affects campaign outputs."""
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:8]


_SECTION_TYPES = {
    "system": SystemConfig,
    "deployment": DeploymentRecipe,
    "campaign": CampaignConfig,
}


def _build_section(cls, raw: dict, path: str):
    if not isinstance(raw, dict):
        raise InvalidConfigError(f"section '{path}' must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(raw) - set(fields)
    if unknown:
        raise InvalidConfigError(f"unknown keys in '{path}': {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key == "coverage":
            kwargs[key] = _build_section(CoverageDisk, value, f"{path}.{key}")
        elif key in ("center_m", "tx_position_m") and value is not None:
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                raise InvalidConfigError(f"'{path}.{key}' must be a pair [x, y]")
            kwargs[key] = (float(value[0]), float(value[1]))
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidConfigError(f"bad section '{path}': {exc}") from exc


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise InvalidConfigError("top-level config must be a mapping")
    unknown = set(raw) - (set(_SECTION_TYPES) | {"out_dir"})
    if unknown:
        raise InvalidConfigError(f"unknown top-level keys: {sorted(unknown)}")
    sections = {
        name: _build_section(cls, raw.get(name, {}), name)
        for name, cls in _SECTION_TYPES.items()
    }
    scenario = ScenarioConfig(out_dir=str(raw.get("out_dir", "out")), **sections)
    scenario.validate()
    return scenario


def load_scenario(path: str | Path | None) -> ScenarioConfig:
    """Load and validate a YAML scenario file; ``None`` gives the defaults."""
    if path is None:
        scenario = ScenarioConfig()
        scenario.validate()
        return scenario
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"cannot parse {path}: {exc}") from exc
    return scenario_from_dict(raw)
