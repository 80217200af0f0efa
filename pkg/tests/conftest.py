from __future__ import annotations

import pytest

from intentsim.config import DATA_DIR
from intentsim.ontology import Ontology
from intentsim.world import load_scenario

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def living_room():
    return load_scenario(DATA_DIR / "living_room.json")


@pytest.fixture(scope="session")
def ontology(living_room):
    return Ontology.load(living_room.ontology_path)


def minimal_scenario_dict():
    """One square area, one object, robot at the origin."""
    return {
        "name": "minimal",
        "ontology": "ontology.json",
        "reach_radius": 0.5,
        "robot_start": {"x": 0.0, "y": 0.0, "heading": 0.0},
        "areas": [{"id": "room", "name": "room", "polygon": [[-2, -2], [2, -2], [2, 2], [-2, 2]]}],
        "objects": [
            {
                "id": "obj_mug",
                "label": "mug",
                "category": "kitchenware",
                "attributes": {"color": "red"},
                "relations": [],
                "position": [1.0, 0.0],
                "graspability": 0.9,
            }
        ],
    }
