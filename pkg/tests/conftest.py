import dataclasses

import numpy as np
import pytest

from risshaper.config import ScenarioConfig
from risshaper.experiments import build_scene
from risshaper.geometry import Deployment, solve_geometry

# Element counts of the reference scenario, boresight panel first, then one
# side near-to-far; the mirror side repeats the same twelve values.
REFERENCE_COUNTS = [1360, 1147, 993, 904, 875, 880, 893, 900, 890, 858, 800, 710, 582]


@pytest.fixture(scope="session")
def scenario() -> ScenarioConfig:
    sc = ScenarioConfig()
    sc.validate()
    return sc


@pytest.fixture(scope="session")
def scene(scenario):
    return build_scene(scenario)


@pytest.fixture(scope="session")
def system(scenario):
    return scenario.system


def with_campaign(scenario, **updates) -> ScenarioConfig:
    campaign = dataclasses.replace(scenario.campaign, **updates)
    sc = dataclasses.replace(scenario, campaign=campaign)
    sc.validate()
    return sc


def deployment_at(scenario, scene, rx) -> Deployment:
    tx, positions, _, _, _ = scene
    return solve_geometry(tx, positions, np.asarray(rx, dtype=float), scenario.system)


def synthetic_deployment(rng, ris_count, system) -> Deployment:
    """Random small instance for selection-algorithm tests."""
    tx = np.zeros(2)
    radii = rng.uniform(30.0, 140.0, ris_count)
    angles = rng.uniform(-1.2, 1.2, ris_count)
    ris = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    rx = np.array([rng.uniform(70.0, 130.0), rng.uniform(-30.0, 30.0)])
    return solve_geometry(tx, ris, rx, system)
